#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mckv {

/// Weighted particle cloud on R^d. Points are stored row-major (size x dim).
/// In one dimension the atoms are kept sorted, which makes quantile
/// operations and the 1D Wasserstein distance linear-time.
class EmpiricalMeasure {
public:
  EmpiricalMeasure() = default;

  /// Builds a measure from row-major points. Empty `weights` means uniform.
  /// Throws ConstructionError on non-finite points, negative or all-zero weights.
  static EmpiricalMeasure from_samples(std::vector<double> points, std::size_t dim,
                                       std::vector<double> weights = {});
  static EmpiricalMeasure from_samples_1d(std::vector<double> points, std::vector<double> weights = {});
  static EmpiricalMeasure dirac(std::span<const double> location);
  static EmpiricalMeasure dirac(double location) { return dirac(std::span<const double>(&location, 1)); }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }
  bool uniform() const noexcept { return uniform_; }

  std::span<const double> point(std::size_t i) const { return {points_.data() + i * dim_, dim_}; }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  std::vector<double> mean() const;
  /// Returns the p-th absolute moment, i.e. the integral of |x|^p.
  double moment(double p) const;
  double variance_1d() const;

  friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

private:
  std::size_t dim_ = 0;
  std::vector<double> points_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

/// Translates every atom by +a: the law of X + a when mu is the law of X.
EmpiricalMeasure shift_measure(const EmpiricalMeasure& mu, std::span<const double> a);
EmpiricalMeasure shift_measure(const EmpiricalMeasure& mu, double a);

/// Mirror image x -> -x.
EmpiricalMeasure reflect(const EmpiricalMeasure& mu);

/// Inverse-CDF resampling to n equal-weight atoms at quantile levels (i + 1/2)/n. d = 1 only.
EmpiricalMeasure resample_quantile(const EmpiricalMeasure& mu, std::size_t n);

/// Systematic resampling to n equal-weight atoms; deterministic given the seed.
EmpiricalMeasure resample_systematic(const EmpiricalMeasure& mu, std::size_t n, std::uint64_t seed);

/// Canonical form: n equal-weight atoms (quantile resampling in 1D, systematic otherwise).
/// Returns the input unchanged when it is already uniform with n atoms.
EmpiricalMeasure canonicalize(const EmpiricalMeasure& mu, std::size_t n);

/// Quantile function of a 1D measure at level u in (0,1).
double quantile(const EmpiricalMeasure& mu, double u);

/// Node-wise displacement interpolation (1 - lambda) Q0 + lambda Q1. d = 1 only.
EmpiricalMeasure quantile_interpolate(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double lambda);

/// Concatenates clouds as a mixture with the given mixture weights.
EmpiricalMeasure mixture(std::span<const EmpiricalMeasure> parts, std::span<const double> mix_weights);

/// Exact p-Wasserstein distance between 1D measures via the quantile coupling.
double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

/// First Wasserstein distance to a point mass, i.e. the integral of |x - a|.
double w1_to_dirac(const EmpiricalMeasure& mu, std::span<const double> a);

enum class OtMethod { exact_assignment, entropic };

struct OtOptions {
  OtMethod method = OtMethod::exact_assignment;
  /// Entropic regularization; <= 0 selects 0.01 * (data diameter)^2.
  double epsilon = 0.0;
  int iterations = 500;
};

/// Largest cloud accepted by exact assignment.
inline constexpr std::size_t kExactAssignmentLimit = 512;

/// p-Wasserstein distance in any dimension.
/// exact_assignment: equal-size uniform clouds of at most 512 atoms, optimal matching.
/// entropic: debiased Sinkhorn divergence, returned as S_eps^(1/p) (biased upward by O(eps)).
double wasserstein_nd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p, const OtOptions& opts = {});

}  // namespace mckv
