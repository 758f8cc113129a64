#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mckv/entrance.hpp"
#include "mckv/flow.hpp"
#include "mckv/integrate.hpp"
#include "mckv/measure.hpp"
#include "mckv/model.hpp"

namespace mckv {

/// Point of the torus [0, tau_1) x ... x [0, tau_n).
struct TorusPoint {
  std::vector<double> coords;
  std::vector<double> periods;

  /// Reduces each coordinate into [0, tau_i).
  static TorusPoint make(std::vector<double> coords, std::vector<double> periods);
  std::size_t size() const noexcept { return coords.size(); }
  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

/// x mod tau in [0, tau).
double wrap(double x, double tau);

/// T_t: every coordinate advanced by t, modulo its period.
TorusPoint rotate(const TorusPoint& p, double t);

/// Sum over axes of the wrap-around distance min(|t_i - s_i|, tau_i - |t_i - s_i|).
double torus_distance(const TorusPoint& p, const TorusPoint& q);

/// Uniform product grid with `resolution[i]` points on axis i.
std::vector<TorusPoint> torus_grid(std::span<const double> periods, std::span<const std::size_t> resolution);

struct Fiber {
  TorusPoint base;
  double weight = 0.0;
  EmpiricalMeasure measure;
};

/// Discrete measure on torus x R^d given by weighted fibers.
struct LiftedMeasure {
  std::vector<double> periods;
  /// Per-axis grid resolution used to snap rotated bases; 0 means no snapping on that axis.
  std::vector<std::size_t> grid;
  std::vector<Fiber> fibers;

  std::size_t dim() const { return fibers.empty() ? 0 : fibers.front().measure.dim(); }
  /// Throws ConstructionError unless weights sum to 1 and fibers share dim and periods.
  void validate() const;
  /// Integral of |x|^2 over the lift.
  double second_moment() const;
  /// Fiber weights in fiber order.
  std::vector<double> base_weights() const;
};

/// Snaps each coordinate to the measure's grid when within 1e-9 of a grid point.
TorusPoint snap_to_grid(const TorusPoint& p, std::span<const std::size_t> grid);

/// Merges fibers sharing a base (weights added, clouds pooled and re-canonicalized to n_canon atoms)
/// and sorts fibers by base.
void merge_fibers(LiftedMeasure& m, std::size_t n_canon);

/// Time average over nodes r in [-T, T) of delta_{r mod tau} x flow(r), each node with weight 1/M.
/// `grid` empty derives the resolution tau_i / dt_grid when that is an integer.
LiftedMeasure cesaro_lift(const MeasureFlow& flow, double T, std::span<const double> periods,
                          std::span<const std::size_t> grid = {}, std::size_t n_canon = 0);

/// Lifted semigroup: each base rotated by t, each fiber pushed through the reparameterized system on [0, t].
LiftedMeasure lifted_push(const CoefficientModel& model, const LiftedMeasure& mu, double t, const SimConfig& cfg);

struct LiftedDistanceOptions {
  OtMethod method = OtMethod::exact_assignment;
  std::size_t samples = 512;
  double epsilon = 0.0;
  int iterations = 500;
};

/// W2 on torus x R^d with d^2 = d0^2 + |x - y|^2, from K stratified joint samples of each lift
/// (same quantile levels on both sides), solved as a K x K transport problem.
double lifted_distance(const LiftedMeasure& a, const LiftedMeasure& b, const LiftedDistanceOptions& opts = {});

/// lifted_distance(lifted_push(mu, t), mu) for each t.
std::vector<double> invariance_residual(const CoefficientModel& model, const LiftedMeasure& mu,
                                        std::span<const double> times, const SimConfig& cfg,
                                        const LiftedDistanceOptions& opts = {});

struct QpBaseReport {
  TorusPoint base;
  bool converged = false;
  int iterates = 0;
  double final_residual = 0.0;
};

struct QpRepresentation {
  LiftedMeasure lifted;
  std::vector<QpBaseReport> bases;
  bool all_converged = false;
};

/// For each base s, the fixed point of the reparameterized equation, stored as its law at time 0.
/// The window must contain 0. Non-converged bases are listed and still returned.
QpRepresentation qp_representation(const CoefficientModel& model, std::span<const TorusPoint> base_grid, Window window,
                                   std::span<const double> anchor, double tol, int max_iter, const SimConfig& cfg,
                                   const FixedPointOptions& options = {});

}  // namespace mckv
