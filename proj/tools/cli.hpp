#pragma once

#include "toricbern/polytope.hpp"
#include "toricbern/quad.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace toricbern::cli {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kConfigError = 2, kNoConvergence = 3 };

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Settings shared by every command, after merging the JSON document with flags.
struct RunConfig {
  std::optional<DelzantPolytope> polytope;
  std::string perturbation;
  std::string f = "1";
  std::vector<std::int64_t> ns;
  std::vector<int> grid;  ///< per-axis counts; one entry is broadcast
  double margin = 0.02;   ///< fraction of the diameter kept clear of the boundary
  QuadratureSpec quad;
  std::string out;      ///< CSV destination, stdout when empty
  std::string summary;  ///< JSON summary destination, stderr when empty
  std::string cache;    ///< directory for norming tables

  void check() const;
};

/// Polytope from the JSON schema { "dim", "facets": [ { "normal", "lambda" } ] }
/// or a preset name: interval, simplex1..3, square, cube.
DelzantPolytope polytope_from_json(const std::string& text_or_preset);

/// Interior grid: per-axis points lo + (hi - lo)(i + 1)/(n + 1), kept when the
/// distance to the boundary is at least margin * diameter.
std::vector<Vec> interior_grid(const DelzantPolytope& polytope, const std::vector<int>& counts, double margin);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace toricbern::cli
