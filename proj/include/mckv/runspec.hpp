#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mckv/flow.hpp"
#include "mckv/integrate.hpp"
#include "mckv/model.hpp"
#include "mckv/verify.hpp"

namespace mckv {

enum class Command { simulate, entrance, fixed_point, lift_invariance, qp_rep, check, bistable };

std::string_view command_name(Command c);
/// Throws ValidationError("command", ...) for unknown names.
Command parse_command(std::string_view name);

/// Built-in model by name with a parameter table. Missing parameters are filled by validate().
///   ou:              theta, sigma, dim
///   meanfield_ou:    theta, coupling, sigma, dim
///   linear_periodic: theta, sigma            (forcing default sin t)
///   curie_weiss:     beta, k, sigma          (forcing default none)
struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
  ForcingSpec forcing;
  bool forcing_set = false;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct LiftSpec {
  /// Cesaro horizon T as a multiple of the period
  double horizon_periods = 25.0;
  std::size_t base_grid = 32;
  /// push times as fractions of the period
  std::vector<double> times{0.25, 0.5};
  std::size_t samples = 512;
  friend bool operator==(const LiftSpec&, const LiftSpec&) = default;
};

struct BistableSpec {
  std::vector<double> anchors{-1.0, 1.0};
  /// empty means theta* for both anchors
  std::vector<double> thetas;
  friend bool operator==(const BistableSpec&, const BistableSpec&) = default;
};

struct RunSpec {
  Command command = Command::fixed_point;
  ModelSpec model;
  SimConfig sim;
  Window window{0.0, 5.0};
  double tol = 0.02;
  int max_iter = 20;
  /// empty means the origin
  std::vector<double> anchor;
  std::string output_dir = "out";
  bool emit_plots = true;
  LiftSpec lift;
  BistableSpec bistable;
  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

/// Parses JSON text. ParseError carries the line; ValidationError the dotted field path.
/// The result is validated with defaults filled.
RunSpec load_spec(std::string_view text);
RunSpec load_spec_file(const std::string& path);

/// Fills defaults and checks every field; throws ValidationError.
void validate(RunSpec& spec);

/// JSON text of the run spec. The provenance form leaves out the thread count and output directory,
/// which do not change results.
std::string emit_spec(const RunSpec& spec, bool provenance = false);

CoefficientModel build_model(const ModelSpec& m);
CurieWeissParams curie_weiss_params(const ModelSpec& m);
/// Dissipativity profile matching a built-in model.
DissipativityProfile build_profile(const ModelSpec& m);

}  // namespace mckv
