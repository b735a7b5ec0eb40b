#include "toricbern/bernstein.hpp"

#include "toricbern/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace toricbern {

namespace {

constexpr double kBoundarySlack = 1e-12;
constexpr double kCrossCheckTolerance = 1e-7;
constexpr std::size_t kCrossCheckEntries = 5;
constexpr std::uint64_t kCrossCheckSeed = 0x5eed'cafe'f00dULL;
const double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> facet_logs(const DelzantPolytope& polytope, const Vec& x, const char* who) {
  std::vector<double> logs(static_cast<std::size_t>(polytope.facet_count()));
  for (int r = 0; r < polytope.facet_count(); ++r) {
    const double l = polytope.ell(r, x);
    if (l < -kBoundarySlack) {
      throw OutsidePolytope(fmt::format("{}: point lies outside the polytope (ell_{} = {:.3g})", who, r, l));
    }
    logs[static_cast<std::size_t>(r)] = l > 0.0 ? std::log(l) : kNegInf;
  }
  return logs;
}

double coefficient_term(double c, double log_ell) {
  if (c == 0.0) return 0.0;
  return c * log_ell;
}

}  // namespace

double weight_exponent(const ToricMetric& metric, std::int64_t n, std::span<const std::int64_t> alpha, const Vec& x) {
  const auto& P = metric.polytope();
  if (static_cast<int>(alpha.size()) != P.dim() || x.size() != P.dim()) {
    throw DimensionMismatch("weight_exponent: alpha and x must match the polytope dimension");
  }
  const auto logs = facet_logs(P, x, "weight_exponent");
  CompensatedSum sum;
  for (int r = 0; r < P.facet_count(); ++r) {
    const double term = coefficient_term(P.scaled_ell(r, alpha, n).to_double(), logs[static_cast<std::size_t>(r)]);
    if (term == kNegInf) return kNegInf;
    sum += term;
  }
  Vec a(P.dim());
  for (int j = 0; j < P.dim(); ++j) a[j] = static_cast<double>(alpha[static_cast<std::size_t>(j)]);
  const double nd = static_cast<double>(n);
  const Vec shift = a - nd * x;
  sum += shift.dot(P.normal_sum());
  if (!metric.is_canonical()) {
    sum += nd * metric.g(x);
    sum += shift.dot(metric.grad_g(x));
  }
  return sum.value();
}

double norming_constant(const ToricMetric& metric, std::int64_t n, std::span<const std::int64_t> alpha,
                        const QuadratureSpec& spec) {
  IntVec a(alpha.begin(), alpha.end());
  return integrate_log(metric.polytope(), [&](const Vec& x) { return weight_exponent(metric, n, a, x); }, spec);
}

double norming_closed_form_simplex(std::int64_t n, std::span<const std::int64_t> alpha) {
  std::int64_t total = 0;
  double value = 0.0;
  for (auto a : alpha) {
    if (a < 0) throw std::invalid_argument("norming_closed_form_simplex: negative multi-index");
    total += a;
    value += std::lgamma(static_cast<double>(a) + 1.0);
  }
  if (total > n) throw std::invalid_argument("norming_closed_form_simplex: |alpha| exceeds N");
  value += std::lgamma(static_cast<double>(n - total) + 1.0);
  value -= std::lgamma(static_cast<double>(n) + static_cast<double>(alpha.size()) + 1.0);
  return value;
}

double norming_closed_form_simplex(const DelzantPolytope& polytope, std::int64_t n, std::span<const std::int64_t> alpha) {
  if (!polytope.is_standard_simplex()) throw NotSimplex("closed-form norming constants need the standard simplex");
  if (static_cast<int>(alpha.size()) != polytope.dim()) throw DimensionMismatch("alpha has the wrong dimension");
  return norming_closed_form_simplex(n, alpha);
}

// ---------------------------------------------------------------------------
// NormingTable

void NormingTable::index() {
  lookup_.clear();
  for (std::size_t i = 0; i < lattice_.points.size(); ++i) lookup_.emplace(lattice_.points[i], i);
}

double NormingTable::log_q(const IntVec& alpha) const {
  auto it = lookup_.find(alpha);
  if (it == lookup_.end()) throw std::out_of_range("log_q: alpha is not a lattice point of NP");
  return log_q_[it->second];
}

namespace {

std::vector<double> quadrature_entries(const ToricMetric& metric, const LatticeSet& lattice,
                                       const std::vector<std::size_t>& which, const QuadratureSpec& spec) {
  const auto& P = metric.polytope();
  const int m = P.dim();
  const int d = P.facet_count();
  const double nd = static_cast<double>(lattice.dilation);
  std::vector<std::vector<double>> coef(which.size(), std::vector<double>(static_cast<std::size_t>(d)));
  std::vector<Vec> alphas(which.size());
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto& a = lattice.points[which[k]];
    alphas[k].resize(m);
    for (int j = 0; j < m; ++j) alphas[k][j] = static_cast<double>(a[static_cast<std::size_t>(j)]);
    for (int r = 0; r < d; ++r) coef[k][static_cast<std::size_t>(r)] = P.scaled_ell(r, a, lattice.dilation).to_double();
  }
  const bool canonical = metric.is_canonical();
  ExponentFamily family = [&](const Vec& x, std::span<double> out) {
    std::vector<double> logs(static_cast<std::size_t>(d));
    for (int r = 0; r < d; ++r) logs[static_cast<std::size_t>(r)] = std::log(P.ell(r, x));
    Vec linear = P.normal_sum();
    double offset = -nd * x.dot(P.normal_sum());
    if (!canonical) {
      const Vec gg = metric.grad_g(x);
      linear += gg;
      offset += nd * (metric.g(x) - x.dot(gg));
    }
    for (std::size_t k = 0; k < which.size(); ++k) {
      double e = offset + alphas[k].dot(linear);
      for (int r = 0; r < d; ++r) e += coefficient_term(coef[k][static_cast<std::size_t>(r)], logs[static_cast<std::size_t>(r)]);
      out[k] = e;
    }
  };
  return integrate_log_family(P, which.size(), family, spec);
}

}  // namespace

NormingTable NormingTable::build_quadrature(const ToricMetric& metric, std::int64_t n, const QuadratureSpec& spec) {
  NormingTable t;
  t.lattice_ = lattice_points(metric.polytope(), n);
  std::vector<std::size_t> all(t.lattice_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  t.log_q_ = quadrature_entries(metric, t.lattice_, all, spec);
  t.methods_.assign(all.size(), NormingMethod::Quadrature);
  t.index();
  return t;
}

NormingTable NormingTable::build(const ToricMetric& metric, std::int64_t n, const QuadratureSpec& spec) {
  if (!(metric.is_canonical() && metric.polytope().is_standard_simplex())) return build_quadrature(metric, n, spec);

  NormingTable t;
  t.lattice_ = lattice_points(metric.polytope(), n);
  t.log_q_.reserve(t.lattice_.size());
  for (const auto& a : t.lattice_.points) t.log_q_.push_back(norming_closed_form_simplex(n, a));
  t.methods_.assign(t.lattice_.size(), NormingMethod::ClosedForm);
  t.index();

  std::vector<std::size_t> picks(t.lattice_.size());
  for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  if (picks.size() > kCrossCheckEntries) {
    std::mt19937_64 rng(kCrossCheckSeed);
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(kCrossCheckEntries);
    std::sort(picks.begin(), picks.end());
  }
  const auto quad = quadrature_entries(metric, t.lattice_, picks, spec);
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const double cf = t.log_q_[picks[k]];
    const double diff = std::abs(quad[k] - cf);
    t.cross_check_error_ = std::max(t.cross_check_error_, diff);
    if (diff > kCrossCheckTolerance * std::max(1.0, std::abs(cf))) {
      throw NumericalError(fmt::format("norming cross-check failed at entry {}: closed form {:.17g}, quadrature {:.17g}",
                                       picks[k], cf, quad[k]));
    }
  }
  return t;
}

std::string NormingTable::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < log_q_.size(); ++i) {
    entries.push_back({{"alpha", lattice_.points[i]},
                       {"logQ", log_q_[i]},
                       {"method", methods_[i] == NormingMethod::ClosedForm ? "cf" : "quad"}});
  }
  nlohmann::json doc = {{"N", lattice_.dilation}, {"entries", std::move(entries)}};
  return doc.dump(2) + "\n";
}

NormingTable NormingTable::from_json(const DelzantPolytope& polytope, std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("norming cache: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("N") || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw std::invalid_argument("norming cache: expected an object with \"N\" and \"entries\"");
  }
  NormingTable t;
  try {
    t.lattice_ = lattice_points(polytope, doc["N"].get<std::int64_t>());
    t.index();
    t.log_q_.assign(t.lattice_.size(), std::numeric_limits<double>::quiet_NaN());
    t.methods_.assign(t.lattice_.size(), NormingMethod::Quadrature);
    std::vector<bool> seen(t.lattice_.size(), false);
    for (const auto& e : doc["entries"]) {
      const auto alpha = e.at("alpha").get<IntVec>();
      auto it = t.lookup_.find(alpha);
      if (it == t.lookup_.end()) throw std::invalid_argument("norming cache: entry outside NP");
      if (seen[it->second]) throw std::invalid_argument("norming cache: duplicate entry");
      seen[it->second] = true;
      const double v = e.at("logQ").get<double>();
      if (!std::isfinite(v)) throw std::invalid_argument("norming cache: non-finite logQ");
      t.log_q_[it->second] = v;
      const auto method = e.at("method").get<std::string>();
      if (method != "cf" && method != "quad") throw std::invalid_argument("norming cache: unknown method " + method);
      t.methods_[it->second] = method == "cf" ? NormingMethod::ClosedForm : NormingMethod::Quadrature;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw std::invalid_argument("norming cache: missing lattice points");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("norming cache: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// BernsteinEvaluator

BernsteinEvaluator::BernsteinEvaluator(ToricMetric metric, NormingTable table)
    : metric_(std::move(metric)), table_(std::move(table)) {
  const auto& P = metric_.polytope();
  const int m = P.dim();
  const auto n = table_.dilation();
  const double nd = static_cast<double>(n);
  for (const auto& a : table_.lattice().points) {
    Vec av(m);
    for (int j = 0; j < m; ++j) av[j] = static_cast<double>(a[static_cast<std::size_t>(j)]);
    alphas_.push_back(av);
    nodes_.push_back(av / nd);
    std::vector<double> c(static_cast<std::size_t>(P.facet_count()));
    for (int r = 0; r < P.facet_count(); ++r) c[static_cast<std::size_t>(r)] = P.scaled_ell(r, a, n).to_double();
    coef_.push_back(std::move(c));
  }
}

BernsteinEvaluator BernsteinEvaluator::build(const ToricMetric& metric, std::int64_t n, const QuadratureSpec& spec) {
  return BernsteinEvaluator(metric, NormingTable::build(metric, n, spec));
}

BernsteinEvaluator::Prepared BernsteinEvaluator::prepare(const Vec& x) const {
  const auto& P = metric_.polytope();
  if (x.size() != P.dim()) throw DimensionMismatch("evaluation point has the wrong dimension");
  Prepared p;
  p.log_ell = facet_logs(P, x, "bernstein");
  const double nd = static_cast<double>(dilation());
  p.linear = P.normal_sum();
  p.offset = -nd * x.dot(P.normal_sum());
  if (!metric_.is_canonical()) {
    const Vec gg = metric_.grad_g(x);
    p.linear += gg;
    p.offset += nd * (metric_.g(x) - x.dot(gg));
  }
  return p;
}

double BernsteinEvaluator::log_weight(const Prepared& p, std::size_t i) const {
  double e = p.offset + alphas_[i].dot(p.linear);
  const auto& c = coef_[i];
  for (std::size_t r = 0; r < c.size(); ++r) e += coefficient_term(c[r], p.log_ell[r]);
  return e - table_.log_q(i);
}

std::vector<double> BernsteinEvaluator::log_weights(const Vec& x) const {
  const Prepared p = prepare(x);
  std::vector<double> w(lattice_size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = log_weight(p, i);
  return w;
}

double BernsteinEvaluator::log_denominator(const Vec& x) const {
  const auto w = log_weights(x);
  return log_sum_exp(w);
}

std::vector<double> BernsteinEvaluator::sample(const Expr& f) const {
  if (f.dim() != metric_.dim()) throw DimensionMismatch("test function has the wrong dimension");
  std::vector<double> s(nodes_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = f(nodes_[i]);
  return s;
}

double BernsteinEvaluator::weighted_sum(std::span<const double> samples, const Vec& x,
                                        const std::vector<std::size_t>* subset) const {
  if (samples.size() != lattice_size()) throw DimensionMismatch("sample count differs from the lattice size");
  const Prepared p = prepare(x);
  const std::size_t count = subset ? subset->size() : lattice_size();
  auto at = [&](std::size_t k) { return subset ? (*subset)[k] : k; };
  std::vector<double> w(count);
  for (std::size_t k = 0; k < count; ++k) w[k] = log_weight(p, at(k));
  const double log_d = log_sum_exp(w);
  CompensatedSum sum;
  for (std::size_t k = 0; k < count; ++k) {
    if (w[k] == kNegInf) continue;
    sum += samples[at(k)] * std::exp(w[k] - log_d);
  }
  return sum.value();
}

double BernsteinEvaluator::evaluate(std::span<const double> samples, const Vec& x) const {
  return weighted_sum(samples, x, nullptr);
}

double BernsteinEvaluator::evaluate(const Expr& f, const Vec& x) const {
  const auto s = sample(f);
  return weighted_sum(s, x, nullptr);
}

double BernsteinEvaluator::numerator(const Expr& f, const Vec& x) const {
  const auto s = sample(f);
  const auto w = log_weights(x);
  CompensatedSum sum;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == kNegInf) continue;
    sum += s[i] * std::exp(w[i]);
  }
  return sum.value();
}

double BernsteinEvaluator::log_numerator(const Expr& f, const Vec& x) const {
  const double b = evaluate(f, x);
  if (!(b > 0.0)) throw DomainError(fmt::format("log_numerator: numerator is not positive (B f = {:.17g})", b));
  return log_denominator(x) + std::log(b);
}

EmpiricalMeasure BernsteinEvaluator::measure(const Vec& x) const {
  EmpiricalMeasure mu;
  mu.x = x;
  mu.dilation = dilation();
  mu.support = table_.lattice().points;
  const auto w = log_weights(x);
  const double log_d = log_sum_exp(w);
  mu.probabilities.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) mu.probabilities[i] = w[i] == kNegInf ? 0.0 : std::exp(w[i] - log_d);
  return mu;
}

double BernsteinEvaluator::window_radius(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("window radius multiplier must be positive");
  const double n = static_cast<double>(dilation());
  return c * std::sqrt(std::log(n) / n);
}

std::vector<std::size_t> BernsteinEvaluator::window(const Vec& x, double c) const {
  const double radius = window_radius(c);
  const double near = 2.0 / static_cast<double>(dilation());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double dist = (nodes_[i] - x).cwiseAbs().maxCoeff();
    if (dist <= radius || dist <= near) idx.push_back(i);
  }
  return idx;
}

double BernsteinEvaluator::evaluate_truncated(const Expr& f, const Vec& x, double c) const {
  const auto idx = window(x, c);
  const auto s = sample(f);
  if (idx.size() == lattice_size()) return weighted_sum(s, x, nullptr);
  return weighted_sum(s, x, &idx);
}

double BernsteinEvaluator::evaluate_dimension_normalized(const Expr& f, const Vec& x) const {
  return numerator(f, x) / static_cast<double>(lattice_size());
}

}  // namespace toricbern
