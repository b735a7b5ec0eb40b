#include "cli.hpp"

#include "toricbern/asymptotics.hpp"
#include "toricbern/bernstein.hpp"
#include "toricbern/errors.hpp"
#include "toricbern/metric.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>

namespace toricbern::cli {

using nlohmann::json;

namespace {

std::string read_stream(std::istream& in) { return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}; }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  return read_stream(f);
}

std::optional<DelzantPolytope> preset(const std::string& name) {
  if (name == "interval" || name == "simplex1") return shapes::interval();
  if (name == "simplex2") return shapes::standard_simplex(2);
  if (name == "simplex3") return shapes::standard_simplex(3);
  if (name == "square") return shapes::unit_cube(2);
  if (name == "cube") return shapes::unit_cube(3);
  return std::nullopt;
}

DelzantPolytope polytope_from_doc(const json& doc) {
  if (doc.is_string()) {
    const auto name = doc.get<std::string>();
    if (auto p = preset(name)) return *p;
    return polytope_from_json(read_file(name));
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc.contains("facets") || !doc["facets"].is_array()) {
    throw ConfigError("polytope: expected { \"dim\", \"facets\": [...] } or a preset name");
  }
  std::vector<Facet> facets;
  for (const auto& f : doc["facets"]) {
    if (!f.contains("normal") || !f.contains("lambda")) throw ConfigError("polytope: each facet needs normal and lambda");
    Facet facet;
    facet.normal = f["normal"].get<IntVec>();
    const auto& lam = f["lambda"];
    if (lam.is_string()) {
      facet.offset = Rational::parse(lam.get<std::string>());
    } else if (lam.is_number()) {
      facet.offset = Rational::parse(lam.dump());
    } else {
      throw ConfigError("polytope: lambda must be a number or a \"p/q\" string");
    }
    facets.push_back(std::move(facet));
  }
  return DelzantPolytope::validate(std::move(facets), doc["dim"].get<int>());
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Output {
public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot write " + path);
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  const DelzantPolytope& polytope() const { return *cfg.polytope; }
  ToricMetric metric() const { return ToricMetric::from_string(polytope(), cfg.perturbation); }
  Expr f() const { return Expr::parse(cfg.f, polytope().dim()); }
  std::vector<Vec> grid() const { return interior_grid(polytope(), cfg.grid, cfg.margin); }

  BernsteinEvaluator evaluator(const ToricMetric& metric, std::int64_t n) const {
    if (cfg.cache.empty()) return BernsteinEvaluator::build(metric, n, cfg.quad);
    namespace fs = std::filesystem;
    fs::create_directories(cfg.cache);
    const auto key = fnv1a(fmt::format("{}|{}|{}|{}|{}", polytope().describe(), metric.perturbation().to_string(),
                                         cfg.quad.order, format_real(cfg.quad.tolerance), cfg.quad.max_levels));
    const fs::path path = fs::path(cfg.cache) / fmt::format("norming_{:016x}_N{}.json", key, n);
    if (fs::exists(path)) return BernsteinEvaluator(metric, NormingTable::from_json(polytope(), read_file(path.string())));
    auto table = NormingTable::build(metric, n, cfg.quad);
    std::ofstream(path, std::ios::binary) << table.to_json();
    return BernsteinEvaluator(metric, std::move(table));
  }
};

std::string point_columns(const Vec& x) {
  std::string s;
  for (int j = 0; j < x.size(); ++j) s += "," + format_real(x[j]);
  return s;
}

std::string coordinate_header(int m) {
  std::string s;
  for (int j = 1; j <= m; ++j) s += fmt::format(",x{}", j);
  return s;
}

json check_entry(const std::string& name, double residual, double tolerance) {
  const bool pass = std::isfinite(residual) && residual <= tolerance;
  return {{"name", name}, {"residual", residual}, {"tolerance", tolerance}, {"pass", pass}};
}

// Order entry from per-N residuals; flagged exact when every residual is at roundoff level.
json order_entry(const std::string& name, const std::vector<std::int64_t>& ns, const std::vector<double>& residuals,
                 double expected, double slack, double scale) {
  json e = {{"name", name}, {"expected", expected}};
  bool exact = true;
  for (double r : residuals) exact = exact && r <= 1e-12 * std::max(1.0, scale);
  if (exact) {
    e["fitted"] = nullptr;
    e["exact"] = true;
    e["pass"] = true;
    return e;
  }
  if (ns.size() < 3) {
    e["fitted"] = nullptr;
    e["pass"] = false;
    e["note"] = "at least three N values are needed";
    return e;
  }
  ExpansionReport report;
  report.name = name;
  report.expected_order = expected;
  report.slack = slack;
  for (std::size_t i = 0; i < ns.size(); ++i) report.add(ns[i], residuals[i], 0.0);
  try {
    report.fit();
    e["fitted"] = report.fitted_order;
    e["pass"] = report.pass;
  } catch (const NonPositiveResidual&) {
    e["fitted"] = nullptr;
    e["pass"] = false;
    e["note"] = "zero residual at some N";
  }
  return e;
}

void write_summary(Context& ctx, const json& summary) {
  Output sink(ctx.cfg.summary, ctx.err);
  *sink << summary.dump(2) << "\n";
}

bool all_pass(const json& arr) {
  for (const auto& e : arr)
    if (!e.at("pass").get<bool>()) return false;
  return true;
}

// ---------------------------------------------------------------------------

int cmd_validate(Context& ctx) {
  Output sink(ctx.cfg.out, ctx.out);
  auto& os = *sink;
  os << ctx.polytope().describe();
  const auto metric = ctx.metric();
  const auto report = metric.check_convexity(32);
  os << fmt::format("convexity: min Hessian eigenvalue {} at ({}) over {} samples: {}\n", format_real(report.min_eigenvalue),
                    point_columns(report.argmin).substr(1), report.samples, report.pass ? "ok" : "FAILED");
  return report.pass ? kSuccess : kCheckFailed;
}

int cmd_approx(Context& ctx) {
  const auto metric = ctx.metric();
  const auto f = ctx.f();
  auto points = ctx.grid();
  for (const auto& v : ctx.polytope().vertices_real()) points.push_back(v);
  Output sink(ctx.cfg.out, ctx.out);
  auto& os = *sink;
  os << "N" << coordinate_header(ctx.polytope().dim()) << ",f,B,abs_err\n";
  for (auto n : ctx.cfg.ns) {
    const auto ev = ctx.evaluator(metric, n);
    const auto samples = ev.sample(f);
    for (const auto& x : points) {
      const double fx = f(x);
      const double b = ev.evaluate(samples, x);
      os << n << point_columns(x) << "," << format_real(fx) << "," << format_real(b) << "," << format_real(std::abs(b - fx))
         << "\n";
    }
  }
  return kSuccess;
}

int cmd_converge(Context& ctx) {
  const auto metric = ctx.metric();
  const auto f = ctx.f();
  const auto points = ctx.grid();
  if (points.empty()) throw ConfigError("grid has no points inside the margin");
  const int m = ctx.polytope().dim();
  const bool classical = m == 1 && metric.is_canonical() && ctx.polytope().is_standard_simplex();
  const int levels = classical ? 3 : 2;

  std::vector<double> l1(points.size()), l2(points.size()), fx(points.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    fx[i] = f(points[i]);
    l1[i] = L1_apply(metric, f, points[i]);
    if (classical) l2[i] = L2_classical_apply(metric, f, points[i]);
    scale = std::max(scale, std::abs(fx[i]));
  }

  Output sink(ctx.cfg.out, ctx.out);
  auto& os = *sink;
  os << "N" << coordinate_header(m) << ",f,B,residual0,residual1" << (classical ? ",residual2" : "") << "\n";
  std::vector<std::vector<double>> worst(static_cast<std::size_t>(levels));
  for (auto n : ctx.cfg.ns) {
    const auto ev = ctx.evaluator(metric, n);
    const auto samples = ev.sample(f);
    const double nd = static_cast<double>(n);
    std::vector<double> level_max(static_cast<std::size_t>(levels), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double b = ev.evaluate(samples, points[i]);
      double r[3] = {std::abs(b - fx[i]), std::abs(b - fx[i] - l1[i] / nd), std::abs(b - fx[i] - l1[i] / nd - l2[i] / (nd * nd))};
      os << n << point_columns(points[i]) << "," << format_real(fx[i]) << "," << format_real(b);
      for (int k = 0; k < levels; ++k) {
        os << "," << format_real(r[k]);
        level_max[static_cast<std::size_t>(k)] = std::max(level_max[static_cast<std::size_t>(k)], r[k]);
      }
      os << "\n";
    }
    for (int k = 0; k < levels; ++k) worst[static_cast<std::size_t>(k)].push_back(level_max[static_cast<std::size_t>(k)]);
  }
  json orders = json::array();
  const char* names[3] = {"no_correction", "first_correction", "second_correction"};
  for (int k = 0; k < levels; ++k) {
    orders.push_back(order_entry(names[k], ctx.cfg.ns, worst[static_cast<std::size_t>(k)], -(k + 1.0), 0.3, scale));
  }
  write_summary(ctx, {{"checks", json::array()}, {"orders", orders}});
  return kSuccess;
}

int cmd_riemann(Context& ctx) {
  const auto f = ctx.f();
  const auto& P = ctx.polytope();
  ExpansionReport report;
  report.name = "euler_maclaurin";
  for (auto n : ctx.cfg.ns) report.add(n, riemann_sum(P, f, n), em_two_term(P, f, ctx.cfg.quad, n));
  Output sink(ctx.cfg.out, ctx.out);
  *sink << report.to_csv();
  std::vector<double> residuals;
  double scale = 0.0;
  for (const auto& r : report.rows) {
    residuals.push_back(r.residual);
    scale = std::max(scale, std::abs(r.value));
  }
  json orders = json::array({order_entry(report.name, ctx.cfg.ns, residuals, P.dim() - 2.0, 0.3, scale)});
  write_summary(ctx, {{"checks", json::array()}, {"orders", orders}});
  return kSuccess;
}

bool same_facets(const DelzantPolytope& a, const DelzantPolytope& b) {
  if (a.dim() != b.dim() || a.facet_count() != b.facet_count()) return false;
  for (const auto& fa : a.facets()) {
    bool found = false;
    for (const auto& fb : b.facets()) found = found || (fa.normal == fb.normal && fa.offset == fb.offset);
    if (!found) return false;
  }
  return true;
}

int cmd_identities(Context& ctx) {
  const auto metric = ctx.metric();
  const auto f = ctx.f();
  const auto& P = ctx.polytope();
  const int m = P.dim();
  const auto points = ctx.grid();
  json checks = json::array();

  checks.push_back(check_entry("donaldson", donaldson_residual(metric, f, ctx.cfg.quad), 1e-7));

  if (metric.is_canonical()) {
    std::optional<double> expected;
    if (P.is_standard_simplex()) expected = m * (m + 1.0);
    if (same_facets(P, shapes::unit_cube(m))) expected = 2.0 * m;
    if (expected) {
      double worst = 0.0;
      for (const auto& x : points) worst = std::max(worst, std::abs(metric.scalar_curvature(x) - *expected));
      checks.push_back(check_entry(fmt::format("scalar_curvature_{}", *expected), worst, 1e-6));
    }
  }

  for (auto n : ctx.cfg.ns) {
    const auto ev = ctx.evaluator(metric, n);
    if (metric.is_canonical() && P.is_standard_simplex()) {
      const double target = std::exp(std::lgamma(n + m + 1.0) - std::lgamma(n + 1.0));
      double worst = 0.0;
      for (const auto& x : points) worst = std::max(worst, std::abs(ev.denominator(x) - target) / target);
      checks.push_back(check_entry(fmt::format("denominator_N{}", n), worst, 1e-9));
    }
    const double count = static_cast<double>(ev.lattice_size());
    const double integral = integrate_polytope(P, [&](const Vec& x) { return ev.denominator(x); }, ctx.cfg.quad);
    checks.push_back(check_entry(fmt::format("denominator_integral_N{}", n), std::abs(integral - count) / count,
                                 ctx.cfg.quad.tolerance));
  }

  json report = {{"checks", checks}, {"orders", json::array()}};
  Output sink(ctx.cfg.out, ctx.out);
  *sink << report.dump(2) << "\n";
  return all_pass(checks) ? kSuccess : kCheckFailed;
}

int cmd_norming(Context& ctx) {
  const auto metric = ctx.metric();
  const auto& P = ctx.polytope();
  const int m = P.dim();
  const bool closed = metric.is_canonical() && P.is_standard_simplex();
  Output sink(ctx.cfg.out, ctx.out);
  auto& os = *sink;
  os << "N";
  for (int j = 1; j <= m; ++j) os << ",alpha" << j;
  os << ",logQ_quadrature,logQ_closed_form,rel_err,method\n";
  for (auto n : ctx.cfg.ns) {
    const auto quad = NormingTable::build_quadrature(metric, n, ctx.cfg.quad);
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const auto& a = quad.lattice().points[i];
      os << n;
      for (auto c : a) os << "," << c;
      os << "," << format_real(quad.log_q(i));
      if (closed) {
        const double cf = norming_closed_form_simplex(n, a);
        const double rel = std::abs(quad.log_q(i) - cf) / std::max(std::abs(cf), 1e-300);
        os << "," << format_real(cf) << "," << format_real(rel) << ",cf\n";
      } else {
        os << ",,,quad\n";
      }
    }
    if (!ctx.cfg.cache.empty()) ctx.evaluator(metric, n);
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct Flags {
  std::string config;
  std::vector<std::int64_t> ns;
  std::string f;
  std::vector<int> grid;
  double margin = 0.0;
  int quad_order = 0;
  double quad_tol = 0.0;
  int quad_levels = 0;
  std::string out;
  std::string cache;
  CLI::Option *o_n = nullptr, *o_f = nullptr, *o_grid = nullptr, *o_margin = nullptr, *o_order = nullptr, *o_tol = nullptr,
              *o_levels = nullptr, *o_out = nullptr, *o_cache = nullptr;
};

void add_flags(CLI::App& sub, Flags& fl) {
  sub.add_option("--config", fl.config, "JSON config file ('-' or omitted: stdin)");
  fl.o_n = sub.add_option("--N", fl.ns, "dilations, comma separated")->delimiter(',');
  fl.o_f = sub.add_option("--f", fl.f, "test function, e.g. sin(pi*x1)");
  fl.o_grid = sub.add_option("--grid", fl.grid, "grid points per axis, comma separated")->delimiter(',');
  fl.o_margin = sub.add_option("--margin", fl.margin, "interior margin as a fraction of the diameter");
  fl.o_order = sub.add_option("--quad-order", fl.quad_order, "Gauss points per axis");
  fl.o_tol = sub.add_option("--quad-tol", fl.quad_tol, "quadrature tolerance");
  fl.o_levels = sub.add_option("--quad-levels", fl.quad_levels, "maximum refinement levels");
  fl.o_out = sub.add_option("--out", fl.out, "output file (default stdout)");
  fl.o_cache = sub.add_option("--cache", fl.cache, "directory for cached norming tables");
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  return doc.contains(key) ? doc[key].get<T>() : fallback;
}

RunConfig load_config(const Flags& fl, std::istream& in, bool needs_n) {
  const std::string text = (fl.config.empty() || fl.config == "-") ? read_stream(in) : read_file(fl.config);
  json doc = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("polytope")) throw ConfigError("config needs a \"polytope\"");

  RunConfig cfg;
  try {
    cfg.polytope = polytope_from_doc(doc["polytope"]);
    const int m = cfg.polytope->dim();
    cfg.perturbation = get_or<std::string>(doc, "perturbation", "");
    cfg.f = get_or<std::string>(doc, "f", "1");
    if (doc.contains("N")) cfg.ns = doc["N"].is_array() ? doc["N"].get<std::vector<std::int64_t>>() : std::vector{doc["N"].get<std::int64_t>()};
    if (doc.contains("grid")) cfg.grid = doc["grid"].is_array() ? doc["grid"].get<std::vector<int>>() : std::vector{doc["grid"].get<int>()};
    cfg.margin = get_or(doc, "margin", 0.02);
    cfg.quad = QuadratureSpec::defaults_for(m);
    if (doc.contains("quadrature")) {
      const auto& q = doc["quadrature"];
      cfg.quad.order = get_or(q, "order", cfg.quad.order);
      cfg.quad.tolerance = get_or(q, "tolerance", cfg.quad.tolerance);
      cfg.quad.max_levels = get_or(q, "levels", cfg.quad.max_levels);
    }
    cfg.out = get_or<std::string>(doc, "out", "");
    cfg.summary = get_or<std::string>(doc, "summary", "");
    cfg.cache = get_or<std::string>(doc, "cache", "");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (fl.o_n->count()) cfg.ns = fl.ns;
  if (fl.o_f->count()) cfg.f = fl.f;
  if (fl.o_grid->count()) cfg.grid = fl.grid;
  if (fl.o_margin->count()) cfg.margin = fl.margin;
  if (fl.o_order->count()) cfg.quad.order = fl.quad_order;
  if (fl.o_tol->count()) cfg.quad.tolerance = fl.quad_tol;
  if (fl.o_levels->count()) cfg.quad.max_levels = fl.quad_levels;
  if (fl.o_out->count()) cfg.out = fl.out;
  if (fl.o_cache->count()) cfg.cache = fl.cache;
  if (cfg.grid.empty()) cfg.grid = {5};
  if (!needs_n && cfg.ns.empty()) cfg.ns = {1};
  cfg.check();
  return cfg;
}

}  // namespace

void RunConfig::check() const {
  if (ns.empty()) throw ConfigError("N list is empty");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) throw ConfigError("N values must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ConfigError("N values must be strictly increasing");
  }
  if (!(margin > 0.0 && margin < 0.5)) throw ConfigError("margin must lie in (0, 0.5)");
  for (int g : grid)
    if (g < 1) throw ConfigError("grid counts must be positive");
  if (polytope && grid.size() != 1 && static_cast<int>(grid.size()) != polytope->dim()) {
    throw ConfigError("grid needs one count or one count per axis");
  }
  try {
    quad.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

DelzantPolytope polytope_from_json(const std::string& text_or_preset) {
  if (auto p = preset(text_or_preset)) return *p;
  try {
    return polytope_from_doc(json::parse(text_or_preset));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("polytope: ") + e.what());
  }
}

std::vector<Vec> interior_grid(const DelzantPolytope& polytope, const std::vector<int>& counts, double margin) {
  const int m = polytope.dim();
  const Vec lo = polytope.lower_corner();
  const Vec hi = polytope.upper_corner();
  const double clearance = margin * polytope.diameter();
  std::vector<int> n(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) n[static_cast<std::size_t>(j)] = counts.size() == 1 ? counts[0] : counts.at(static_cast<std::size_t>(j));
  std::vector<Vec> points;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  while (true) {
    Vec x(m);
    for (int j = 0; j < m; ++j) {
      x[j] = lo[j] + (hi[j] - lo[j]) * (idx[static_cast<std::size_t>(j)] + 1.0) / (n[static_cast<std::size_t>(j)] + 1.0);
    }
    if (polytope.min_ell(x) > 0.0 && polytope.boundary_distance(x) >= clearance) points.push_back(x);
    int j = m - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == n[static_cast<std::size_t>(j)] - 1) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
  }
  return points;
}

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized Bernstein operators on Delzant polytopes"};
  app.require_subcommand(1);
  using Command = int (*)(Context&);
  struct Entry {
    CLI::App* sub;
    Command cmd;
    Flags* flags;
  };
  std::deque<Flags> flags;
  std::vector<Entry> commands;
  auto add = [&](const char* name, const char* help, Command cmd) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(*sub, flags.emplace_back());
    commands.push_back({sub, cmd, &flags.back()});
  };
  add("validate", "check the Delzant condition and convexity of the metric", cmd_validate);
  add("approx", "evaluate B f on a grid", cmd_approx);
  add("converge", "residuals with 0, 1 (and 2) correction terms and fitted orders", cmd_converge);
  add("riemann", "lattice sums against the two-term Euler-MacLaurin formula", cmd_riemann);
  add("identities", "integration by parts, curvature and denominator checks", cmd_identities);
  add("norming", "norming constants by quadrature and closed form", cmd_norming);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  const Entry* chosen = nullptr;
  for (const auto& e : commands)
    if (e.sub->parsed()) chosen = &e;
  const bool is_validate = chosen->sub->get_name() == "validate";

  try {
    Context ctx{{}, out, err};
    try {
      ctx.cfg = load_config(*chosen->flags, in, !is_validate);
    } catch (const GeometryError& e) {
      err << "error: " << e.what() << "\n";
      return is_validate ? kCheckFailed : kConfigError;
    }
    return chosen->cmd(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const ExprError& e) {
    err << "expression error: " << e.what() << "\n";
    return kConfigError;
  } catch (const GeometryError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace toricbern::cli
