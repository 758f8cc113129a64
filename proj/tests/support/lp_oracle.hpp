#pragma once
// Transportation LP solved as a min-cost flow by successive shortest paths.
// Independent of the quantile coupling; small instances only.

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

inline double transport_cost(const std::vector<double>& a, const std::vector<double>& b,
                             const std::vector<std::vector<double>>& cost) {
  const std::size_t n = a.size(), m = b.size();
  const std::size_t src = n + m, snk = n + m + 1, nv = n + m + 2;
  struct Edge {
    std::size_t to;
    double cap;
    double cost;
    std::size_t rev;
  };
  std::vector<std::vector<Edge>> g(nv);
  auto add = [&](std::size_t u, std::size_t v, double cap, double c) {
    g[u].push_back({v, cap, c, g[v].size()});
    g[v].push_back({u, 0.0, -c, g[u].size() - 1});
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) add(src, i, a[i], 0.0);
  for (std::size_t j = 0; j < m; ++j) add(n + j, snk, b[j], 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) add(i, n + j, inf, cost[i][j]);

  double total_mass = 0.0;
  for (double x : a) total_mass += x;
  double sent = 0.0, total = 0.0;
  const double eps = 1e-15;
  while (sent < total_mass * (1.0 - 1e-13)) {
    std::vector<double> dist(nv, inf);
    std::vector<std::size_t> pv(nv), pe(nv);
    dist[src] = 0.0;
    for (std::size_t it = 0; it < nv; ++it) {
      bool changed = false;
      for (std::size_t u = 0; u < nv; ++u) {
        if (dist[u] == inf) continue;
        for (std::size_t e = 0; e < g[u].size(); ++e) {
          const auto& ed = g[u][e];
          if (ed.cap > eps && dist[u] + ed.cost < dist[ed.to] - 1e-14) {
            dist[ed.to] = dist[u] + ed.cost;
            pv[ed.to] = u;
            pe[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[snk] == inf) break;
    double push = inf;
    for (std::size_t v = snk; v != src; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
    for (std::size_t v = snk; v != src; v = pv[v]) {
      auto& ed = g[pv[v]][pe[v]];
      ed.cap -= push;
      g[v][ed.rev].cap += push;
    }
    sent += push;
    total += push * dist[snk];
  }
  return total;
}

}  // namespace oracle
