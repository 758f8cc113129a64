#pragma once

// Discrete optimal transport primitives on explicit cost matrices.

#include <cstddef>
#include <span>
#include <vector>

namespace mckv::ot {

/// Dense row-major n x m cost matrix.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

struct Assignment {
  /// row i is matched to column col_of_row[i]
  std::vector<std::size_t> col_of_row;
  /// matched costs summed in ascending order, so the value is invariant under transposition
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
/// potentials, O(n^3)).
Assignment solve_assignment(const CostMatrix& cost);

/// Entropy-regularized OT value (dual objective <f,a> + <g,b>) after log-domain
/// Sinkhorn iterations.
double sinkhorn_cost(const CostMatrix& cost, std::span<const double> a, std::span<const double> b,
                     double epsilon, int iterations);

/// Debiased Sinkhorn divergence OT(a,b) - (OT(a,a) + OT(b,b)) / 2, clamped at zero.
double sinkhorn_divergence(const CostMatrix& cost_ab, const CostMatrix& cost_aa, const CostMatrix& cost_bb,
                           std::span<const double> a, std::span<const double> b, double epsilon,
                           int iterations);

}  // namespace mckv::ot
