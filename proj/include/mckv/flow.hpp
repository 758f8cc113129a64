#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mckv/measure.hpp"

namespace mckv {

enum class ExtensionKind { none, constant, periodic };

/// How a flow is continued outside its stored window.
struct FlowExtension {
  ExtensionKind kind = ExtensionKind::none;
  double period = 0.0;

  static FlowExtension none() { return {}; }
  static FlowExtension constant() { return {ExtensionKind::constant, 0.0}; }
  static FlowExtension periodic(double tau) { return {ExtensionKind::periodic, tau}; }
  friend bool operator==(const FlowExtension&, const FlowExtension&) = default;
};

/// Closed time interval [start, end].
struct Window {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// A measure-valued path sampled on a uniform time grid:
/// node i lives at t_start + i * dt_grid.
class MeasureFlow {
public:
  MeasureFlow() = default;
  MeasureFlow(double t_start, double dt_grid, std::vector<EmpiricalMeasure> measures,
              FlowExtension extension = FlowExtension::none());

  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_start_ + dt_grid_ * static_cast<double>(measures_.size() - 1); }
  double dt_grid() const noexcept { return dt_grid_; }
  Window window() const { return {t_start(), t_end()}; }
  std::size_t size() const noexcept { return measures_.size(); }
  std::size_t dim() const { return measures_.front().dim(); }
  double time(std::size_t i) const { return t_start_ + dt_grid_ * static_cast<double>(i); }
  const EmpiricalMeasure& node(std::size_t i) const { return measures_[i]; }
  const std::vector<EmpiricalMeasure>& nodes() const noexcept { return measures_; }

  const FlowExtension& extension() const noexcept { return extension_; }
  /// Throws ConstructionError when a periodic rule does not tile the window.
  void set_extension(FlowExtension ext);

  bool covers(double t) const;

  /// Measure at time t: stored node on the grid; displacement (quantile)
  /// interpolation between nodes in 1D; nearest node otherwise.
  EmpiricalMeasure eval(double t) const;

  /// Mean and second moment of eval(t) without materializing the cloud.
  void summary_at(double t, std::span<double> mean, double& second_moment) const;

private:
  struct Located {
    std::size_t index;
    double lambda;  // 0 means exactly at `index`
  };
  double fold(double t) const;
  Located locate(double t) const;

  double t_start_ = 0.0;
  double dt_grid_ = 1.0;
  std::vector<EmpiricalMeasure> measures_;
  FlowExtension extension_;
  // per-node summaries; cross_[i] = integral of Q_i * Q_{i+1} (1D equal-size nodes)
  std::vector<double> means_;
  std::vector<double> second_;
  std::vector<double> cross_;
  bool quantile_pairs_ = false;
};

EmpiricalMeasure flow_eval(const MeasureFlow& flow, double t);

/// W_p for measures of any dimension: exact quantile coupling in 1D; exact
/// assignment on at most 512 systematic subsamples otherwise.
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

/// d_{p,n}: supremum over |t| <= n of W_p between the two flows, sampled on the finer grid.
double flow_seminorm(const MeasureFlow& a, const MeasureFlow& b, double p, int n);

struct FlowMetricValue {
  double value = 0.0;
  /// The omitted tail of the series is at most this.
  double truncation_bound = 0.0;
  int n_max = 0;
};

/// Truncated sum over n = 1..N_max of 2^-n d_{p,n} / (1 + d_{p,n}), with
/// N_max = ceil(radius of the first flow's window).
FlowMetricValue flow_metric(const MeasureFlow& a, const MeasureFlow& b, double p);

/// Supremum of W_p over the nodes of `a`, comparing with b evaluated at the same times.
double window_sup_distance(const MeasureFlow& a, const MeasureFlow& b, double p);

/// Flow that repeats `mu` at every node.
MeasureFlow constant_flow(const EmpiricalMeasure& mu, Window window, double dt_grid,
                          FlowExtension extension = FlowExtension::constant());

}  // namespace mckv
