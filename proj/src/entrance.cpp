#include "mckv/entrance.hpp"

#include <algorithm>
#include <cmath>

#include "mckv/errors.hpp"

namespace mckv {

namespace {

constexpr std::uint64_t kResidualSeedSalt = 0x9E3779B97F4A7C15ull;

double relaxation_of(const CoefficientModel& model, double fallback) {
  return model.relaxation_time > 0.0 ? model.relaxation_time : fallback;
}

void check_window(Window w, const SimConfig& cfg) {
  if (!(w.end > w.start)) throw ConstructionError("window must have positive length");
  const std::int64_t ks = grid_step(w.start, cfg.dt);
  const std::int64_t ke = grid_step(w.end, cfg.dt);
  if ((ke - ks) % static_cast<std::int64_t>(cfg.record_stride) != 0) {
    throw ConstructionError("window length must be a multiple of record_stride * dt");
  }
}

MeasureFlow node_average(const MeasureFlow& a, const MeasureFlow& b) {
  std::vector<EmpiricalMeasure> nodes;
  nodes.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.node(i);
    const auto y = b.eval(a.time(i));
    if (x.dim() == 1) {
      nodes.push_back(quantile_interpolate(x, y, 0.5));
    } else {
      const EmpiricalMeasure parts[2] = {x, y};
      const double w[2] = {0.5, 0.5};
      nodes.push_back(canonicalize(mixture(parts, w), x.size()));
    }
  }
  return MeasureFlow(a.t_start(), a.dt_grid(), std::move(nodes), a.extension());
}

}  // namespace

FlowExtension natural_extension(const CoefficientModel& model, Window window) {
  if (model.qp && model.qp->periods.size() == 1) {
    const double tau = model.qp->periods[0];
    const double cycles = std::round(window.length() / tau);
    if (cycles >= 1.0 && std::abs(window.length() - cycles * tau) <= 1e-9) return FlowExtension::periodic(tau);
  }
  return FlowExtension::constant();
}

PullbackResult pullback_entrance(const CoefficientModel& model, const MeasureFlow* frozen, Window target,
                                 std::span<const double> anchor, double tol, const SimConfig& cfg,
                                 const PullbackOptions& options) {
  if (!(tol > 0.0)) throw ConstructionError("pull-back tolerance must be positive");
  if (anchor.size() != model.dim) throw ConstructionError("anchor dimension does not match the model");
  cfg.validate();
  check_window(target, cfg);
  double burn = options.burn_in > 0.0 ? options.burn_in : 5.0 * relaxation_of(model, options.relaxation_time);
  const auto burn_steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(burn / cfg.dt - 1e-9)));
  const std::int64_t k_target = grid_step(target.start, cfg.dt);
  const auto init = EmpiricalMeasure::dirac(anchor);

  PullbackResult out;
  out.report.burn_in = static_cast<double>(burn_steps) * cfg.dt;
  RunControl control;
  control.record_from = target.start;
  for (int k = 0; k <= options.max_doublings; ++k) {
    const std::int64_t k_start = k_target - burn_steps * (std::int64_t{1} << k);
    const double s = static_cast<double>(k_start) * cfg.dt;
    out.report.start_times.push_back(s);
    auto flow = frozen == nullptr ? run_selfconsistent(model, init, s, target.end, cfg, control)
                                  : run_frozen(model, *frozen, init, s, target.end, cfg, control);
    if (k > 0) {
      const double gap = window_sup_distance(flow, out.flow, 2.0);
      out.report.gaps.push_back(gap);
      out.report.final_gap = gap;
      out.flow = std::move(flow);
      if (gap <= tol) {
        out.report.converged = true;
        break;
      }
    } else {
      out.flow = std::move(flow);
    }
  }
  return out;
}

PullbackResult psi(const CoefficientModel& model, const MeasureFlow& mu_flow, Window window,
                   std::span<const double> anchor, double tol, const SimConfig& cfg, const PullbackOptions& options) {
  if (mu_flow.extension().kind == ExtensionKind::none) {
    MeasureFlow extended = mu_flow;
    extended.set_extension(FlowExtension::constant());
    return pullback_entrance(model, &extended, window, anchor, tol, cfg, options);
  }
  return pullback_entrance(model, &mu_flow, window, anchor, tol, cfg, options);
}

EntranceResidual entrance_residual(const CoefficientModel& model, const MeasureFlow& flow, int pair_count,
                                   const SimConfig& cfg, double relaxation_time) {
  if (pair_count < 1) throw ConstructionError("entrance_residual: pair_count must be >= 1");
  EntranceResidual out;
  if (flow.size() < 2) return out;
  const double length = flow.t_end() - flow.t_start();
  const double relax = relaxation_of(model, relaxation_time > 0.0 ? relaxation_time : length);
  const double horizon = std::min(length / 2.0, 5.0 * relax);
  const auto h_nodes = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon / flow.dt_grid())));
  const std::size_t last_start = flow.size() - 1 - std::min(h_nodes, flow.size() - 1);

  // Independent noise: the residual compares two ensembles, not two coupled paths.
  SimConfig rcfg = cfg;
  rcfg.seed = cfg.seed ^ kResidualSeedSalt;
  rcfg.record_stride = static_cast<std::size_t>(std::llround(flow.dt_grid() / cfg.dt));
  if (rcfg.record_stride < 1 || std::abs(static_cast<double>(rcfg.record_stride) * cfg.dt - flow.dt_grid()) > 1e-9) {
    throw ConstructionError("entrance_residual: flow grid is not a multiple of dt");
  }

  double floor_acc = 0.0;
  for (int j = 0; j < pair_count; ++j) {
    const std::size_t i0 = pair_count == 1 ? 0 : (last_start * static_cast<std::size_t>(j)) / static_cast<std::size_t>(pair_count - 1);
    const std::size_t i1 = std::min(flow.size() - 1, i0 + h_nodes);
    const double s = flow.time(i0), t = flow.time(i1);
    auto run = integrate_particles(model, nullptr, expand_init(flow.node(i0), cfg.n_particles), s, t, rcfg);
    for (std::size_t i = 1; i < run.flow.size(); ++i) {
      out.value = std::max(out.value, wasserstein(run.flow.node(i), flow.node(i0 + i), 2.0));
    }
    const std::size_t d = model.dim;
    const std::size_t n = run.terminal.size() / d;
    std::vector<double> even, odd;
    for (std::size_t p = 0; p + 1 < n; p += 2) {
      even.insert(even.end(), run.terminal.begin() + static_cast<std::ptrdiff_t>(p * d),
                  run.terminal.begin() + static_cast<std::ptrdiff_t>((p + 1) * d));
      odd.insert(odd.end(), run.terminal.begin() + static_cast<std::ptrdiff_t>((p + 1) * d),
                 run.terminal.begin() + static_cast<std::ptrdiff_t>((p + 2) * d));
    }
    floor_acc = std::max(floor_acc, wasserstein(EmpiricalMeasure::from_samples(std::move(even), d),
                                                EmpiricalMeasure::from_samples(std::move(odd), d), 2.0) /
                                        std::sqrt(2.0));
  }
  out.noise_floor = floor_acc;
  return out;
}

double periodicity_residual(const MeasureFlow& flow, double tau) {
  if (!(tau > 0.0)) throw ConstructionError("periodicity_residual: tau must be positive");
  const double length = flow.t_end() - flow.t_start();
  if (length < 2.0 * tau - 1e-9) throw RangeError("periodicity_residual needs a window of length at least 2 tau");
  double sup = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const double t = flow.time(i);
    if (t + tau > flow.t_end() + 1e-9 * flow.dt_grid()) break;
    sup = std::max(sup, wasserstein(flow.eval(t + tau), flow.node(i), 2.0));
  }
  return sup;
}

FixedPointResult solve_fixed_point(const CoefficientModel& model, Window window, std::span<const double> anchor,
                                   double tol, int max_iter, const SimConfig& cfg, const FixedPointOptions& options) {
  if (max_iter < 1) throw ConstructionError("solve_fixed_point: max_iter must be >= 1");
  if (!(tol > 0.0)) throw ConstructionError("solve_fixed_point: tol must be positive");
  if (anchor.size() != model.dim) throw ConstructionError("anchor dimension does not match the model");
  cfg.validate();
  check_window(window, cfg);

  const FlowExtension ext = natural_extension(model, window);
  FixedPointResult out;
  auto& rep = out.report;
  rep.window = window;
  rep.anchor.assign(anchor.begin(), anchor.end());

  MeasureFlow current = constant_flow(EmpiricalMeasure::dirac(anchor), window, cfg.record_spacing(), ext);
  std::optional<MeasureFlow> previous;
  bool averaging = false;
  const double pb_tol = tol * options.pullback_tol_factor;

  for (int k = 1; k <= max_iter; ++k) {
    MeasureFlow next;
    if (!model.law_dependent && k > 1) {
      // The frozen flow never enters the dynamics and the noise is fixed by the seed,
      // so psi would return the same flow bit for bit.
      next = current;
      rep.pullback_stages.push_back(0);
    } else {
      auto pb = psi(model, current, window, anchor, pb_tol, cfg, options.pullback);
      rep.pullback_stages.push_back(static_cast<int>(pb.report.start_times.size()));
      next = std::move(pb.flow);
      next.set_extension(ext);
    }
    if (averaging) next = node_average(next, current);
    const double r = window_sup_distance(next, current, 2.0);
    rep.residuals.push_back(r);
    rep.iterates = k;

    if (!averaging && previous && r > tol) {
      const double back = window_sup_distance(next, *previous, 2.0);
      if (back < r / 4.0) {
        rep.cycle_detected = true;
        rep.averaging_engaged = true;
        averaging = true;
        next = node_average(next, current);
      }
    }
    previous = std::move(current);
    current = std::move(next);
    if (r <= tol) {
      rep.converged = true;
      break;
    }
  }
  out.flow = std::move(current);

  if (rep.converged) {
    rep.cycle_detected = false;
    if (options.check_entrance) {
      const auto er = entrance_residual(model, out.flow, options.entrance_pairs, cfg, options.pullback.relaxation_time);
      rep.entrance_residual = er.value;
      rep.entrance_noise_floor = er.noise_floor;
      if (er.value > 3.0 * tol) {
        rep.converged = false;
        rep.message = "iteration settled but the entrance residual exceeds 3 * tol";
      }
    }
  } else if (rep.message.empty()) {
    rep.message = rep.cycle_detected ? "two-cycle detected; averaged iteration did not settle within max_iter"
                                     : "max_iter reached without convergence";
  }
  return out;
}

}  // namespace mckv
