#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mckv/flow.hpp"
#include "mckv/measure.hpp"
#include "mckv/model.hpp"

namespace mckv {

struct SimConfig {
  std::size_t n_particles = 20000;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  /// atoms per recorded node; 0 means n_particles
  std::size_t n_canon = 0;
  std::size_t record_stride = 100;
  bool tamed = false;
  /// <= 0 leaves the OpenMP default
  int threads = 0;

  std::size_t canon_size() const { return n_canon == 0 ? n_particles : n_canon; }
  double record_spacing() const { return dt * static_cast<double>(record_stride); }
  /// Throws ValidationError naming the offending field.
  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Warning text when dt times the drift's Lipschitz scale reaches 0.5.
std::optional<std::string> dt_advisory(const CoefficientModel& model, const SimConfig& cfg);

/// Absolute step index of time t on the dt grid; throws ConstructionError when t is off the grid.
std::int64_t grid_step(double t, double dt);

/// One explicit Euler step x + b dt + sigma dW against the law `mu`. Throws BlowUpError on a non-finite result.
std::vector<double> step_frozen(const CoefficientModel& model, const EmpiricalMeasure& mu, std::span<const double> x,
                                double t, double dt, std::span<const double> dW);

/// N particles drawn from `init`: a Dirac is replicated, an equal-weight cloud of size N is copied,
/// anything else is canonicalized to N atoms. Row-major N x d.
std::vector<double> expand_init(const EmpiricalMeasure& init, std::size_t n);

/// Gaussian cloud N(mean, std^2 I) from the reserved stream range.
EmpiricalMeasure gaussian_cloud(std::span<const double> mean, double std_dev, std::size_t n, std::uint64_t seed);

/// Low-level particle run between absolute steps. `frozen` null means self-consistent.
struct ParticleRun {
  MeasureFlow flow;
  /// terminal particle states in their original order (N x d)
  std::vector<double> terminal;
};
struct RunControl {
  /// first recorded time; NaN records from the start
  double record_from = std::numeric_limits<double>::quiet_NaN();
  /// stream id offset of particle 0
  std::uint32_t stream_offset = 0;
};
ParticleRun integrate_particles(const CoefficientModel& model, const MeasureFlow* frozen, std::vector<double> particles,
                                double s, double t_end, const SimConfig& cfg, const RunControl& control = {});

/// Interacting N-particle system; node i is the canonicalized ensemble law at s + i * record_stride * dt.
MeasureFlow run_selfconsistent(const CoefficientModel& model, const EmpiricalMeasure& init, double s, double t_end,
                               const SimConfig& cfg, const RunControl& control = {});

/// N independent particles driven by the frozen law `flow`.
MeasureFlow run_frozen(const CoefficientModel& model, const MeasureFlow& flow, const EmpiricalMeasure& init, double s,
                       double t_end, const SimConfig& cfg, const RunControl& control = {});

/// Run of the reparameterized system with coefficients b~(t + s_1, ..., t + s_n, .);
/// self-consistent when `frozen` is null.
MeasureFlow run_reparameterized(const CoefficientModel& model, std::span<const double> base,
                                const EmpiricalMeasure& init, double s, double t_end, const SimConfig& cfg,
                                const MeasureFlow* frozen = nullptr, const RunControl& control = {});

}  // namespace mckv
