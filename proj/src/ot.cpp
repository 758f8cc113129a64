#include "mckv/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mckv/errors.hpp"

namespace mckv::ot {

Assignment solve_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.rows;
  if (n == 0 || cost.cols != n) throw ConstructionError("solve_assignment needs a nonempty square cost matrix");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based potentials; column 0 is a virtual column used to seed each augmentation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.col_of_row.assign(n, 0);
  std::vector<double> matched;
  matched.reserve(n);
  for (std::size_t j = 1; j <= n; ++j) {
    out.col_of_row[row_of_col[j] - 1] = j - 1;
    matched.push_back(cost(row_of_col[j] - 1, j - 1));
  }
  std::sort(matched.begin(), matched.end());
  for (double c : matched) out.total_cost += c;
  return out;
}

namespace {

double log_sum_exp(const std::vector<double>& terms) {
  const double mx = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

}  // namespace

double sinkhorn_cost(const CostMatrix& cost, std::span<const double> a, std::span<const double> b, double epsilon,
                     int iterations) {
  const std::size_t n = cost.rows, m = cost.cols;
  if (a.size() != n || b.size() != m) throw ConstructionError("sinkhorn: marginal sizes do not match the cost matrix");
  if (!(epsilon > 0.0)) throw ConstructionError("sinkhorn: epsilon must be positive");
  std::vector<double> f(n, 0.0), g(m, 0.0), loga(n), logb(m);
  for (std::size_t i = 0; i < n; ++i) loga[i] = std::log(a[i]);
  for (std::size_t j = 0; j < m; ++j) logb[j] = std::log(b[j]);
  std::vector<double> terms;
  for (int it = 0; it < iterations; ++it) {
    terms.resize(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) terms[j] = logb[j] + (g[j] - cost(i, j)) / epsilon;
      f[i] = -epsilon * log_sum_exp(terms);
    }
    terms.resize(n);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) terms[i] = loga[i] + (f[i] - cost(i, j)) / epsilon;
      g[j] = -epsilon * log_sum_exp(terms);
    }
  }
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += a[i] * f[i];
  for (std::size_t j = 0; j < m; ++j) value += b[j] * g[j];
  return value;
}

double sinkhorn_divergence(const CostMatrix& cost_ab, const CostMatrix& cost_aa, const CostMatrix& cost_bb,
                           std::span<const double> a, std::span<const double> b, double epsilon, int iterations) {
  const double ab = sinkhorn_cost(cost_ab, a, b, epsilon, iterations);
  const double aa = sinkhorn_cost(cost_aa, a, a, epsilon, iterations);
  const double bb = sinkhorn_cost(cost_bb, b, b, epsilon, iterations);
  return std::max(ab - 0.5 * (aa + bb), 0.0);
}

}  // namespace mckv::ot
