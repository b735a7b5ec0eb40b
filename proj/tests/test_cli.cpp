#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace toricbern;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args, const std::string& config) {
  args.insert(args.begin(), "toricbern-cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(config);
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) v.push_back(l);
  return v;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("toricbern_test_cli_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("validate") {
  auto r = run_cli({"validate"}, R"j({"polytope": "simplex2"})j");
  CHECK(r.code == cli::kSuccess);
  CHECK(r.out.find("(0, 0)") != std::string::npos);
  CHECK(r.out.find("(1, 0)") != std::string::npos);
  CHECK(r.out.find("(0, 1)") != std::string::npos);

  const std::string bad = R"j({"polytope": {"dim": 2, "facets": [
      {"normal": [1, 0], "lambda": 0}, {"normal": [0, 1], "lambda": 0}, {"normal": [-1, -2], "lambda": -2}]}})j";
  r = run_cli({"validate"}, bad);
  CHECK(r.code == cli::kCheckFailed);
  CHECK(r.err.find("(0, 1)") != std::string::npos);

  r = run_cli({"validate"}, R"j({"polytope": "interval", "perturbation": "-3*x1^2"})j");
  CHECK(r.code == cli::kCheckFailed);
  CHECK(r.out.find("FAILED") != std::string::npos);
}

TEST_CASE("approx") {
  auto r = run_cli({"approx", "--N", "2", "--grid", "1"}, R"j({"polytope": "interval", "f": "x1^2"})j");
  REQUIRE(r.code == cli::kSuccess);
  const auto rows = lines(r.out);
  CHECK(rows[0] == "N,x1,f,B,abs_err");
  CHECK(rows[1] == "2,0.5,0.25,0.375,0.125");
  // Vertices follow the interior grid.
  CHECK(rows.size() == 4);

  r = run_cli({"approx", "--N", "1", "4", "9"}, R"j({"polytope": "simplex2", "f": "x1"})j");
  REQUIRE(r.code == cli::kSuccess);
  auto body = lines(r.out);
  for (std::size_t i = 1; i < body.size(); ++i) CHECK(std::stod(body[i].substr(body[i].rfind(',') + 1)) <= 1e-12);

  r = run_cli({"approx", "--N", "3"}, R"j({"polytope": "simplex2"})j");
  body = lines(r.out);
  for (std::size_t i = 1; i < body.size(); ++i) {
    const auto cols = body[i];
    const auto b = cols.substr(0, cols.rfind(','));
    CHECK(std::stod(b.substr(b.rfind(',') + 1)) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("converge") {
  const std::string cfg = R"j({"polytope": "interval", "f": "sin(pi*x1)", "N": [16, 32, 64, 128]})j";
  auto r = run_cli({"converge"}, cfg);
  REQUIRE(r.code == cli::kSuccess);
  CHECK(lines(r.out)[0] == "N,x1,f,B,residual0,residual1,residual2");
  const auto summary = json::parse(r.err);
  const auto& orders = summary.at("orders");
  REQUIRE(orders.size() == 3);
  CHECK(orders[1]["name"] == "first_correction");
  CHECK(orders[1]["fitted"].get<double>() == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(orders[2]["fitted"].get<double>() == doctest::Approx(-3.0).epsilon(0.05));
  for (const auto& o : orders) CHECK(o["pass"].get<bool>());

  r = run_cli({"converge", "--f", "2*x1 + 1"}, cfg);
  REQUIRE(r.code == cli::kSuccess);
  const auto linear = json::parse(r.err);
  for (const auto& o : linear.at("orders")) CHECK(o["exact"].get<bool>());
}

TEST_CASE("riemann") {
  auto r = run_cli({"riemann", "--N", "3", "6", "12"}, R"j({"polytope": "simplex2"})j");
  REQUIRE(r.code == cli::kSuccess);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "N,value,reference,residual");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i].substr(rows[i].rfind(',') + 1)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto o = json::parse(r.err).at("orders").at(0);
  CHECK(std::abs(o["fitted"].get<double>()) < 1e-6);

  r = run_cli({"riemann", "--N", "3", "6", "12", "24", "--f", "x1^2"}, R"j({"polytope": "interval"})j");
  REQUIRE(r.code == cli::kSuccess);
  CHECK(json::parse(r.err).at("orders").at(0)["fitted"].get<double>() == doctest::Approx(-1.0).epsilon(1e-6));

  r = run_cli({"riemann", "--N", "16", "32", "64", "128", "--f", "x1*x2"}, R"j({"polytope": "square"})j");
  REQUIRE(r.code == cli::kSuccess);
  const auto sq = json::parse(r.err).at("orders").at(0);
  CHECK(sq["fitted"].get<double>() <= 0.3);
  CHECK(sq["pass"].get<bool>());
}

TEST_CASE("identities") {
  for (const char* cfg : {R"j({"polytope": "interval", "f": "x1^2", "N": [1, 4, 16]})j",
                          R"j({"polytope": "square", "f": "x1*x2", "N": [2, 5]})j",
                          R"j({"polytope": "simplex2", "f": "sin(pi*x1)", "N": [3, 8]})j"}) {
    auto r = run_cli({"identities"}, cfg);
    CHECK(r.code == cli::kSuccess);
    const auto checks = json::parse(r.out).at("checks");
    CHECK(checks.size() >= 3);
    for (const auto& c : checks) {
      INFO(c.dump());
      CHECK(c["pass"].get<bool>());
      CHECK(c["residual"].get<double>() <= c["tolerance"].get<double>());
    }
  }
  auto r = run_cli({"identities"}, R"j({"polytope": "square", "N": [2]})j");
  bool curvature = false;
  const auto report = json::parse(r.out);
  for (const auto& c : report.at("checks")) curvature = curvature || c["name"] == "scalar_curvature_4";
  CHECK(curvature);
}

TEST_CASE("norming") {
  auto r = run_cli({"norming", "--N", "2"}, R"j({"polytope": "interval"})j");
  REQUIRE(r.code == cli::kSuccess);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "N,alpha1,logQ_quadrature,logQ_closed_form,rel_err,method");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cols = rows[i];
    const auto head = cols.substr(0, cols.rfind(','));
    CHECK(std::stod(head.substr(head.rfind(',') + 1)) <= 1e-10);
  }

  r = run_cli({"norming", "--N", "3"}, R"j({"polytope": "simplex2"})j");
  CHECK(lines(r.out).size() == 11);

  r = run_cli({"norming", "--N", "2"}, R"j({"polytope": "interval", "perturbation": "0.05*x1^2*(1-x1)^2"})j");
  REQUIRE(r.code == cli::kSuccess);
  rows = lines(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].ends_with(",,,quad"));
}

TEST_CASE("determinism and the norming cache") {
  const auto dir = scratch("cache");
  const std::string cfg = R"j({"polytope": "interval", "perturbation": "0.05*x1^2*(1-x1)^2", "f": "exp(x1)", "N": [3, 7]})j";
  const auto first = run_cli({"approx", "--cache", dir.string()}, cfg);
  REQUIRE(first.code == cli::kSuccess);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files.push_back(e.path());
  CHECK(files.size() == 2);
  const auto second = run_cli({"approx", "--cache", dir.string()}, cfg);
  CHECK(second.out == first.out);
  CHECK(run_cli({"approx"}, cfg).out == first.out);

  // A damaged cache entry is read, not silently rebuilt.
  for (const auto& f : files) std::ofstream(f) << "{ not json";
  CHECK(run_cli({"approx", "--cache", dir.string()}, cfg).code == cli::kConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration errors") {
  CHECK(run_cli({"approx", "--N", "2"}, "{ nope").code == cli::kConfigError);
  CHECK(run_cli({"approx", "--N", "2"}, R"j({"f": "x1"})j").code == cli::kConfigError);
  CHECK(run_cli({"approx"}, R"j({"polytope": "interval"})j").code == cli::kConfigError);
  CHECK(run_cli({"approx", "--N", "4", "2"}, R"j({"polytope": "interval"})j").code == cli::kConfigError);
  CHECK(run_cli({"approx", "--N", "2", "--margin", "0.7"}, R"j({"polytope": "interval"})j").code == cli::kConfigError);
  CHECK(run_cli({"approx", "--N", "2", "--f", "x2"}, R"j({"polytope": "interval"})j").code == cli::kConfigError);
  CHECK(run_cli({"approx", "--N", "2", "--quad-order", "2"}, R"j({"polytope": "interval"})j").code == cli::kConfigError);
  CHECK(run_cli({"approx", "--N", "2"}, R"j({"polytope": "dodecahedron"})j").code == cli::kConfigError);
  CHECK(run_cli({"frobnicate"}, "{}").code == cli::kConfigError);
  CHECK(run_cli({}, "{}").code == cli::kConfigError);
  const auto help = run_cli({"--help"}, "");
  CHECK(help.code == cli::kSuccess);
  CHECK(help.out.find("riemann") != std::string::npos);
}

TEST_CASE("non-convergence exit code") {
  const auto r = run_cli({"norming", "--N", "3", "--quad-levels", "1", "--quad-tol", "1e-300"},
                         R"j({"polytope": "interval", "perturbation": "0.05*x1^2"})j");
  CHECK(r.code == cli::kNoConvergence);
}

TEST_CASE("interior grid") {
  const auto pts = cli::interior_grid(shapes::standard_simplex(2), {4}, 0.02);
  for (const auto& x : pts) CHECK(shapes::standard_simplex(2).boundary_distance(x) >= 0.02 * std::sqrt(2.0));
  CHECK(cli::interior_grid(shapes::interval(), {3}, 0.02).size() == 3);
  CHECK(cli::interior_grid(shapes::unit_cube(2), {2, 3}, 0.02).size() == 6);
  CHECK(cli::polytope_from_json("cube").dim() == 3);
  CHECK_THROWS_AS(cli::polytope_from_json("{]"), cli::ConfigError);
}
