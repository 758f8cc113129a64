#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mckv/flow.hpp"
#include "mckv/integrate.hpp"
#include "mckv/model.hpp"

namespace mckv {

struct PullbackOptions {
  /// Base burn-in B; <= 0 means 5 * relaxation time (model metadata, else `relaxation_time` below).
  double burn_in = 0.0;
  /// Used when the model carries no relaxation time.
  double relaxation_time = 1.0;
  /// Start times are T0 - B * 2^k for k = 0..max_doublings.
  int max_doublings = 10;
};

struct PullbackReport {
  std::vector<double> start_times;
  /// sup over window nodes of W2 between consecutive stages; size start_times - 1
  std::vector<double> gaps;
  bool converged = false;
  double final_gap = 0.0;
  double burn_in = 0.0;
};

struct PullbackResult {
  MeasureFlow flow;
  PullbackReport report;
};

/// Laws on `target` of runs started from delta_anchor at T0 - B 2^k, until consecutive stages agree within tol.
/// `frozen` null runs the interacting system; otherwise the frozen equation.
PullbackResult pullback_entrance(const CoefficientModel& model, const MeasureFlow* frozen, Window target,
                                 std::span<const double> anchor, double tol, const SimConfig& cfg,
                                 const PullbackOptions& options = {});

/// Entrance measure of the equation frozen at `mu_flow`, which is continued left of its window
/// by its own extension rule (constant when it has none).
PullbackResult psi(const CoefficientModel& model, const MeasureFlow& mu_flow, Window window,
                   std::span<const double> anchor, double tol, const SimConfig& cfg,
                   const PullbackOptions& options = {});

struct EntranceResidual {
  double value = 0.0;
  /// W2 spread expected between two independent ensembles of this size
  double noise_floor = 0.0;
};

/// Max over sampled s < t in the window of W2(law at t of the interacting system started from flow(s), flow(t)).
EntranceResidual entrance_residual(const CoefficientModel& model, const MeasureFlow& flow, int pair_count,
                                   const SimConfig& cfg, double relaxation_time = 0.0);

/// sup over nodes t with t + tau in the window of W2(flow(t + tau), flow(t)). Needs a window of length >= 2 tau.
double periodicity_residual(const MeasureFlow& flow, double tau);

struct FixedPointOptions {
  PullbackOptions pullback;
  /// pull-back stage tolerance as a fraction of the fixed-point tolerance
  double pullback_tol_factor = 0.5;
  int entrance_pairs = 2;
  bool check_entrance = true;
};

struct FixedPointReport {
  int iterates = 0;
  /// sup over window nodes of W2(rho^{k+1}, rho^k), one per iterate
  std::vector<double> residuals;
  Window window;
  std::vector<double> anchor;
  bool converged = false;
  bool cycle_detected = false;
  bool averaging_engaged = false;
  double entrance_residual = -1.0;
  double entrance_noise_floor = 0.0;
  std::vector<int> pullback_stages;
  std::string message;
};

struct FixedPointResult {
  MeasureFlow flow;
  FixedPointReport report;
};

/// Picard iteration rho^{k+1} = psi(rho^k) from the constant flow delta_anchor.
FixedPointResult solve_fixed_point(const CoefficientModel& model, Window window, std::span<const double> anchor,
                                   double tol, int max_iter, const SimConfig& cfg,
                                   const FixedPointOptions& options = {});

/// Extension used for iterates: periodic when the model has a single period that tiles the window, else constant.
FlowExtension natural_extension(const CoefficientModel& model, Window window);

}  // namespace mckv
