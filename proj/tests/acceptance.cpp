// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "toricbern/asymptotics.hpp"
#include "toricbern/bernstein.hpp"
#include "toricbern/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace toricbern;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

Vec point_of(const IntVec& a, std::int64_t n) {
  Vec x(static_cast<int>(a.size()));
  for (std::size_t j = 0; j < a.size(); ++j) x[static_cast<int>(j)] = static_cast<double>(a[j]) / static_cast<double>(n);
  return x;
}

long double multinomial(std::int64_t n, const IntVec& a) {
  long double c = 1.0L;
  std::int64_t left = n;
  for (auto k : a) {
    for (std::int64_t i = 1; i <= k; ++i) c = c * static_cast<long double>(left - k + i) / static_cast<long double>(i);
    left -= k;
  }
  return c;
}

// Direct multinomial Bernstein sum on the standard simplex.
double classical(const Expr& f, std::int64_t n, const Vec& x) {
  const int m = static_cast<int>(x.size());
  const long double rest = 1.0L - static_cast<long double>(x.sum());
  long double total = 0.0L;
  for (const auto& a : lattice_points(shapes::standard_simplex(m), n).points) {
    long double w = multinomial(n, a);
    std::int64_t used = 0;
    for (int j = 0; j < m; ++j) {
      w *= std::pow(static_cast<long double>(x[j]), static_cast<long double>(a[static_cast<std::size_t>(j)]));
      used += a[static_cast<std::size_t>(j)];
    }
    w *= std::pow(rest, static_cast<long double>(n - used));
    total += w * static_cast<long double>(f(point_of(a, n)));
  }
  return static_cast<double>(total);
}

Vec random_interior(const DelzantPolytope& P, std::mt19937_64& rng) {
  const Vec lo = P.lower_corner(), hi = P.upper_corner();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    Vec x(P.dim());
    for (int j = 0; j < P.dim(); ++j) x[j] = lo[j] + (hi[j] - lo[j]) * u(rng);
    if (P.min_ell(x) > 0.0) return x;
  }
}

double fit_tail(const std::vector<std::pair<double, double>>& samples) {
  return estimate_order(std::vector<std::pair<double, double>>(samples.end() - 3, samples.end()));
}

// ---------------------------------------------------------------------------

Verdict classical_oracle() {
  std::mt19937_64 rng(0xacce97);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> pick_n(1, 50), pick_m(1, 2), pick_f(0, 4);
  std::map<std::pair<int, std::int64_t>, BernsteinEvaluator> cache;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = pick_m(rng);
    const std::int64_t n = pick_n(rng);
    const double a = coef(rng), b = coef(rng);
    const std::string y = m == 2 ? "x2" : "x1";
    const std::string text = std::vector<std::string>{
        fmt::format("3 + sin({}*x1 + {}*{})", a, b, y), fmt::format("exp({}*x1 - {}*{})", a, b, y),
        fmt::format("1 + x1^{} + {}^2", 2 + trial % 4, y), fmt::format("2 + cos({}*x1*{})", 3 * a, y),
        fmt::format("1/(1 + {}*x1^2 + {}*{}^2)", std::abs(a), std::abs(b), y)}[static_cast<std::size_t>(pick_f(rng))];
    const Expr f = Expr::parse(text, m);
    const ToricMetric S(shapes::standard_simplex(m));
    auto it = cache.find({m, n});
    if (it == cache.end()) it = cache.emplace(std::pair{m, n}, BernsteinEvaluator::build(S, n, QuadratureSpec::defaults_for(m))).first;
    const Vec x = random_interior(S.polytope(), rng);
    const double direct = classical(f, n, x);
    worst = std::max(worst, std::abs(it->second.evaluate(f, x) - direct) / std::abs(direct));
  }
  return {worst <= 1e-10, fmt::format("max relative error {:.3g} over 100 cases (tolerance 1e-10)", worst)};
}

Verdict second_moment_law() {
  const ToricMetric I(shapes::interval());
  const Expr sq = Expr::parse("x1^2", 1);
  double worst = 0.0;
  for (std::int64_t n = 1; n <= 64; ++n) {
    const auto ev = BernsteinEvaluator::build(I, n, QuadratureSpec::defaults_for(1));
    for (int i = 0; i < 20; ++i) {
      const double x = i / 19.0;
      const double exact = x * x + x * (1 - x) / static_cast<double>(n);
      worst = std::max(worst, std::abs(ev.evaluate(sq, vec({x})) - exact));
    }
  }
  return {worst <= 1e-12, fmt::format("max abs error {:.3g} over N = 1..64, 20 points (tolerance 1e-12)", worst)};
}

Verdict expansion_order() {
  const ToricMetric I(shapes::interval());
  const Expr f = Expr::parse("sin(pi*x1)", 1);
  std::vector<BernsteinEvaluator> evs;
  for (std::int64_t n : {64, 128, 256, 512}) evs.push_back(BernsteinEvaluator::build(I, n, QuadratureSpec::defaults_for(1)));
  Verdict v;
  double worst = -1e300;
  for (double t : {0.3, 0.5, 0.7}) {
    const Vec x = vec({t});
    std::vector<std::pair<double, double>> samples;
    for (const auto& ev : evs) {
      const double nd = static_cast<double>(ev.dilation());
      const double r = ev.evaluate(f, x) - f(x) - L1_apply(I, f, x) / nd - L2_classical_apply(I, f, x) / (nd * nd);
      samples.emplace_back(nd, std::abs(r));
    }
    const double slope = fit_tail(samples);
    worst = std::max(worst, slope);
    v.pass = v.pass && slope <= -2.6;
  }
  v.detail = fmt::format("worst fitted slope {:.4f} at x in {{0.3, 0.5, 0.7}} (required <= -2.6)", worst);
  return v;
}

Verdict denominator_oracle() {
  double worst = 0.0;
  const std::vector<Vec> grid1{vec({0.02}), vec({0.1}), vec({0.2}), vec({0.3}), vec({0.45}),
                               vec({0.5}),  vec({0.6}), vec({0.75}), vec({0.9}), vec({0.98})};
  const std::vector<Vec> grid2{vec({0.1, 0.1}), vec({0.2, 0.5}), vec({0.5, 0.2}), vec({1.0 / 3, 1.0 / 3}), vec({0.7, 0.1}),
                               vec({0.1, 0.7}), vec({0.4, 0.4}), vec({0.05, 0.3}), vec({0.25, 0.05}), vec({0.6, 0.3})};
  for (int m = 1; m <= 2; ++m) {
    const ToricMetric S(shapes::standard_simplex(m));
    for (std::int64_t n = 1; n <= 16; ++n) {
      const auto ev = BernsteinEvaluator::build(S, n, QuadratureSpec::defaults_for(m));
      double target = 1.0;
      for (int k = 1; k <= m; ++k) target *= static_cast<double>(n + k);
      for (const auto& x : m == 1 ? grid1 : grid2) worst = std::max(worst, std::abs(ev.denominator(x) - target) / target);
    }
  }
  const auto metric = ToricMetric::from_string(shapes::interval(), "0.05*x1^2*(1-x1)^2");
  const auto spec = QuadratureSpec::defaults_for(1);
  double worst_integral = 0.0;
  for (std::int64_t n : {1, 4, 16}) {
    const auto ev = BernsteinEvaluator::build(metric, n, spec);
    const double count = static_cast<double>(ev.lattice_size());
    const double integral = integrate_polytope(metric.polytope(), [&](const Vec& x) { return ev.denominator(x); }, spec);
    worst_integral = std::max(worst_integral, std::abs(integral - count) / count);
  }
  return {worst <= 1e-9 && worst_integral <= spec.tolerance,
          fmt::format("max relative error {:.3g} for D = (N+m)!/N! (tolerance 1e-9); integral vs count {:.3g} (tolerance {:.0e})",
                      worst, worst_integral, spec.tolerance)};
}

Verdict norming_constants() {
  double worst1 = 0.0, worst2 = 0.0;
  for (int m = 1; m <= 2; ++m) {
    const ToricMetric S(shapes::standard_simplex(m));
    const std::int64_t top = m == 1 ? 32 : 16;
    for (std::int64_t n = 1; n <= top; ++n) {
      const auto table = NormingTable::build_quadrature(S, n, QuadratureSpec::defaults_for(m));
      for (std::size_t i = 0; i < table.size(); ++i) {
        const double cf = norming_closed_form_simplex(n, table.lattice().points[i]);
        const double rel = std::abs(table.log_q(i) - cf) / std::abs(cf);
        (m == 1 ? worst1 : worst2) = std::max(m == 1 ? worst1 : worst2, rel);
      }
    }
  }
  return {worst1 <= 1e-8 && worst2 <= 1e-6,
          fmt::format("max relative error {:.3g} (m=1, N<=32, tolerance 1e-8), {:.3g} (m=2, N<=16, tolerance 1e-6)", worst1,
                      worst2)};
}

Verdict euler_maclaurin() {
  const auto S2 = shapes::standard_simplex(2);
  const auto spec2 = QuadratureSpec::defaults_for(2);
  const Expr one = Expr::parse("1", 2);
  double worst_count = 0.0;
  bool count_ok = true;
  for (std::int64_t n = 1; n <= 128; ++n) {
    const double sum = riemann_sum(S2, one, n);
    const double dev = std::abs(sum - em_two_term(S2, one, spec2, n) - 1.0);
    worst_count = std::max(worst_count, dev);
    count_ok = count_ok && dev <= 1e-12 * sum;
  }

  struct Case {
    DelzantPolytope polytope;
    std::string name;
  };
  const std::vector<Case> cases{{shapes::interval(), "interval"}, {shapes::unit_cube(2), "square"}, {S2, "simplex2"}};
  bool slopes_ok = true;
  std::string worst_case;
  double worst_margin = -1e300;
  for (const auto& c : cases) {
    const int m = c.polytope.dim();
    const auto spec = QuadratureSpec::defaults_for(m);
    for (const char* text : {"sin(pi*x1)", "x1*x2", "exp(x1)"}) {
      if (m == 1 && std::string(text) == "x1*x2") continue;
      const Expr f = Expr::parse(text, m);
      std::vector<std::pair<double, double>> samples;
      for (std::int64_t n : {16, 32, 64, 128}) {
        samples.emplace_back(static_cast<double>(n), std::abs(riemann_sum(c.polytope, f, n) - em_two_term(c.polytope, f, spec, n)));
      }
      const double slope = fit_tail(samples);
      const double limit = m - 2 + 0.3;
      slopes_ok = slopes_ok && slope <= limit;
      if (slope - limit > worst_margin) {
        worst_margin = slope - limit;
        worst_case = fmt::format("{} f={} slope {:.4f} (limit {:.1f})", c.name, text, slope, limit);
      }
    }
  }
  return {count_ok && slopes_ok,
          fmt::format("(a) max |residual - 1| {:.3g} for N = 1..128; (b) tightest case {}", worst_count, worst_case)};
}

Verdict donaldson() {
  struct Case {
    ToricMetric metric;
    std::string name;
  };
  const std::vector<Case> cases{
      {ToricMetric(shapes::interval()), "interval"},
      {ToricMetric::from_string(shapes::interval(), "0.05*x1^2*(1-x1)^2"), "interval perturbed"},
      {ToricMetric(shapes::unit_cube(2)), "square"},
      {ToricMetric::from_string(shapes::unit_cube(2), "0.05*(x1^2*(1-x1)^2 + x2^2*(1-x2)^2 + x1*x2)"), "square perturbed"}};
  double worst = 0.0;
  std::string where;
  for (const auto& c : cases) {
    const int m = c.metric.dim();
    for (const char* text : {"1", "x1", "x1^2", "x1*x2", "sin(pi*x1)"}) {
      if (m == 1 && std::string(text) == "x1*x2") continue;
      const double r = donaldson_residual(c.metric, Expr::parse(text, m), QuadratureSpec::defaults_for(m));
      if (r >= worst) {
        worst = r;
        where = fmt::format("{} f={}", c.name, text);
      }
    }
  }
  return {worst <= 1e-7, fmt::format("max residual {:.3g} ({}) (tolerance 1e-7)", worst, where)};
}

Verdict curvature() {
  const ToricMetric I(shapes::interval());
  const ToricMetric Q(shapes::unit_cube(2));
  double worst_i = 0.0, worst_q = 0.0;
  for (int k = 0; k < 10; ++k) worst_i = std::max(worst_i, std::abs(I.scalar_curvature(vec({(k + 0.5) / 10.0})) - 2.0));
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int k = 0; k < 10; ++k) {
    const double a = u(rng), b = u(rng);
    worst_q = std::max(worst_q, std::abs(Q.scalar_curvature(vec({a, b})) - 4.0));
  }
  return {worst_i <= 1e-6 && worst_q <= 1e-6,
          fmt::format("max |S - 2| {:.3g} on the interval, max |S - 4| {:.3g} on the square (tolerance 1e-6)", worst_i, worst_q)};
}

Verdict measure_properties() {
  const std::vector<ToricMetric> metrics{
      ToricMetric(shapes::interval()),
      ToricMetric::from_string(shapes::interval(), "0.05*x1^2*(1-x1)^2"),
      ToricMetric(shapes::standard_simplex(2)),
      ToricMetric::from_string(shapes::standard_simplex(2), "0.05*x1*x2*(1-x1-x2)"),
      ToricMetric::from_string(shapes::unit_cube(2), "0.05*(x1^2*(1-x1)^2 + x2^2*(1-x2)^2 + x1*x2)"),
      ToricMetric(shapes::standard_simplex(3))};
  const std::vector<std::string> fs1{"sin(5*x1)", "exp(-x1)*cos(7*x1)", "x1^3 - x1"};
  const std::vector<std::string> fs2{"sin(5*x1)*cos(3*x2)", "exp(x1 - 2*x2)", "x1*x2 - x2^3"};
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> pick_metric(0, metrics.size() - 1), pick_f(0, 2);
  std::uniform_int_distribution<std::int64_t> pick_n(1, 20);
  std::map<std::pair<std::size_t, std::int64_t>, BernsteinEvaluator> cache;
  bool ok = true;
  double min_weight = 1.0, worst_sum = 0.0, worst_range = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = pick_metric(rng);
    const std::int64_t n = pick_n(rng);
    const auto& metric = metrics[k];
    const int m = metric.dim();
    auto it = cache.find({k, n});
    if (it == cache.end()) it = cache.emplace(std::pair{k, n}, BernsteinEvaluator::build(metric, n, QuadratureSpec::defaults_for(m))).first;
    const auto& ev = it->second;
    const Vec x = random_interior(metric.polytope(), rng);
    const auto mu = ev.measure(x);
    double sum = 0.0;
    for (double p : mu.probabilities) {
      min_weight = std::min(min_weight, p);
      sum += p;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    const Expr f = Expr::parse((m == 1 ? fs1 : fs2)[pick_f(rng)], m);
    const auto s = ev.sample(f);
    const double lo = *std::min_element(s.begin(), s.end()), hi = *std::max_element(s.begin(), s.end());
    const double b = ev.evaluate(f, x);
    worst_range = std::max({worst_range, lo - b, b - hi});
    ok = ok && min_weight >= 0.0 && std::abs(sum - 1.0) <= 1e-12 && lo <= b && b <= hi;
  }

  const auto metric = ToricMetric::from_string(shapes::interval(), "0.05*x1^2*(1-x1)^2");
  const auto ev = BernsteinEvaluator::build(metric, 256, QuadratureSpec::defaults_for(1));
  double worst_link = 0.0;
  for (double t : {0.2, 0.35, 0.5, 0.8}) {
    const double h = metric.inverse_hessian(vec({t}))(0, 0);
    worst_link = std::max(worst_link, std::abs(256.0 * measure_moments(ev, vec({t}), IntVec{2}) - h) / h);
  }
  ok = ok && worst_link <= 0.05;
  return {ok, fmt::format("min weight {:.3g}, max |sum - 1| {:.3g}, max range excess {:.3g}; N*I2 vs H at N=256 relative error {:.3g} (tolerance 0.05)",
                          min_weight, worst_sum, worst_range, worst_link)};
}

Verdict localization() {
  struct Case {
    ToricMetric metric;
    Vec x;
    std::string f;
  };
  const std::vector<Case> cases{{ToricMetric(shapes::interval()), vec({0.5}), "sin(3*x1) + x1^2"},
                                {ToricMetric(shapes::interval()), vec({0.2}), "exp(x1)"},
                                {ToricMetric(shapes::standard_simplex(2)), vec({1.0 / 3, 1.0 / 3}), "sin(3*x1)*cos(x2)"},
                                {ToricMetric(shapes::standard_simplex(2)), vec({0.6, 0.15}), "exp(x1 - x2)"}};
  double worst_diff = 0.0, worst_fraction = 0.0;
  bool ok = true;
  for (const auto& c : cases) {
    const int m = c.metric.dim();
    const Expr f = Expr::parse(c.f, m);
    for (std::int64_t n : {100, 400}) {
      const auto ev = BernsteinEvaluator::build(c.metric, n, QuadratureSpec::defaults_for(m));
      const auto s = ev.sample(f);
      double sup = 0.0;
      for (double v : s) sup = std::max(sup, std::abs(v));
      const double diff = std::abs(ev.evaluate_truncated(f, c.x, 10.0) - ev.evaluate(f, c.x)) / sup;
      worst_diff = std::max(worst_diff, diff);
      ok = ok && diff <= 1e-10;
      if (n == 400) {
        const double fraction = static_cast<double>(ev.window(c.x, 10.0).size()) / static_cast<double>(ev.lattice_size());
        worst_fraction = std::max(worst_fraction, fraction);
        ok = ok && fraction <= 0.4;
      }
    }
  }
  const double radius = 10.0 * std::sqrt(std::log(400.0) / 400.0);
  return {ok, fmt::format("max |truncated - full|/sup f {:.3g} (tolerance 1e-10); window radius {:.3f} at N=400 keeps {:.0f}% "
                          "of the lattice (required <= 40%)",
                          worst_diff, radius, 100 * worst_fraction)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"classical-oracle equivalence", classical_oracle},
      {"exact second-moment law", second_moment_law},
      {"expansion order", expansion_order},
      {"denominator oracle", denominator_oracle},
      {"norming constants", norming_constants},
      {"Euler-MacLaurin", euler_maclaurin},
      {"integration by parts identity", donaldson},
      {"curvature checks", curvature},
      {"measure properties", measure_properties},
      {"localization", localization}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    fmt::print("{} {:2d} {}: {} [{:.1f}s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail, secs);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
