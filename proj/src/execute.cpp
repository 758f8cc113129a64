#include "mckv/execute.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "mckv/entrance.hpp"
#include "mckv/errors.hpp"
#include "mckv/io.hpp"
#include "mckv/lift.hpp"
#include "mckv/plot.hpp"
#include "mckv/verify.hpp"

namespace mckv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

namespace {

class Writer {
public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void put(const std::string& name, const std::string& content) {
    io::write_file(dir_ / name, content);
    set_.files.push_back({name, content.size(), sha256_hex(content)});
  }
  void put_json(const std::string& name, const json& j) { put(name, j.dump(2) + "\n"); }

  void put_flow(const std::string& stem, const MeasureFlow& flow) {
    std::ostringstream csv, summary, bin(std::ios::binary);
    io::write_flow_csv(csv, flow);
    io::write_flow_summary_csv(summary, flow);
    io::write_flow_binary(bin, flow);
    put(stem + ".csv", csv.str());
    put(stem + "_summary.csv", summary.str());
    put(stem + ".bin", bin.str());
  }

  void put_plot(const std::string& stem, const PlotData& data, PlotKind kind) {
    const auto out = render_plot(data, kind);
    put(stem + ".svg", out.svg);
    put(stem + ".csv", out.csv);
  }

  ArtifactSet& set() { return set_; }
  const fs::path& dir() const { return dir_; }

private:
  fs::path dir_;
  ArtifactSet set_;
};

PlotData mean_band(const MeasureFlow& flow, const std::string& title) {
  PlotData d;
  d.title = title;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const auto& mu = flow.node(i);
    double m = 0.0, v = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a) m += mu.weight(a) * mu.point(a)[0];
    for (std::size_t a = 0; a < mu.size(); ++a) v += mu.weight(a) * (mu.point(a)[0] - m) * (mu.point(a)[0] - m);
    const double sd = std::sqrt(v);
    d.x.push_back(flow.time(i));
    d.y.push_back(m);
    d.lower.push_back(m - sd);
    d.upper.push_back(m + sd);
  }
  return d;
}

// max over nodes of ||rho_t||_2^2 / theta_t; null when the profile is not dissipative.
json moment_check(const MeasureFlow& flow, const DissipativityProfile& profile, std::span<const double> shift) {
  try {
    const bool constant = profile.alpha.terms.empty() && profile.beta.terms.empty() && profile.gamma.terms.empty();
    const double th0 = constant ? theta(profile, 0.0, 1e-8) : 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < flow.size(); ++i) {
      const double th = constant ? th0 : theta(profile, flow.time(i), 1e-8);
      auto node = shift.empty() ? flow.node(i) : shift_measure(flow.node(i), shift);
      worst = std::max(worst, node.moment(2.0) / th);
    }
    return json{{"max_ratio", worst}, {"within_10pct", worst <= 1.1}};
  } catch (const NotDissipativeError& e) {
    return json{{"max_ratio", nullptr}, {"note", e.what()}};
  }
}

double single_period(const CoefficientModel& model) {
  if (!model.qp || model.qp->periods.size() != 1) {
    throw ValidationError("model.forcing", "this command needs a forcing with exactly one frequency");
  }
  return model.qp->periods[0];
}

int run_command(const RunSpec& spec, Writer& w) {
  const auto model = build_model(spec.model);
  SimConfig cfg = spec.sim;
  if (auto adv = dt_advisory(model, cfg)) {
    w.set().notes.push_back(*adv);
    std::cerr << "warning: " << *adv << "\n";
  }
  const auto anchor = std::span<const double>(spec.anchor);

  switch (spec.command) {
    case Command::simulate: {
      const auto flow = run_selfconsistent(model, EmpiricalMeasure::dirac(anchor), spec.window.start, spec.window.end, cfg);
      w.put_flow("flow", flow);
      if (spec.emit_plots) w.put_plot("flow_mean_band", mean_band(flow, model.label + ": mean +- sd"), PlotKind::flow_mean_band);
      return kExitOk;
    }
    case Command::entrance: {
      const auto pb = pullback_entrance(model, nullptr, spec.window, anchor, spec.tol, cfg);
      w.put_flow("flow", pb.flow);
      w.put_json("pullback.json", io::to_json(pb.report));
      if (spec.emit_plots) {
        w.put_plot("flow_mean_band", mean_band(pb.flow, model.label + ": entrance mean +- sd"), PlotKind::flow_mean_band);
        if (!pb.report.gaps.empty()) {
          PlotData d;
          d.title = "pull-back stage gaps";
          d.y = pb.report.gaps;
          d.reference = spec.tol;
          w.put_plot("pullback_gaps", d, PlotKind::residual_history);
        }
      }
      return pb.report.converged ? kExitOk : kExitNotConverged;
    }
    case Command::fixed_point: {
      const auto fp = solve_fixed_point(model, spec.window, anchor, spec.tol, spec.max_iter, cfg);
      w.put_flow("flow", fp.flow);
      json j = io::to_json(fp.report);
      j["moment_bound"] = moment_check(fp.flow, build_profile(spec.model), {});
      w.put_json("fixed_point.json", j);
      if (spec.emit_plots) {
        w.put_plot("flow_mean_band", mean_band(fp.flow, model.label + ": fixed point mean +- sd"), PlotKind::flow_mean_band);
        PlotData d;
        d.title = "fixed-point residuals";
        d.y = fp.report.residuals;
        d.reference = spec.tol;
        w.put_plot("residual_history", d, PlotKind::residual_history);
      }
      return fp.report.converged ? kExitOk : kExitNotConverged;
    }
    case Command::lift_invariance: {
      const double tau = single_period(model);
      const auto fp = solve_fixed_point(model, spec.window, anchor, spec.tol, spec.max_iter, cfg);
      const std::vector<double> periods{tau};
      const std::vector<std::size_t> grid{spec.lift.base_grid};
      const auto lifted = cesaro_lift(fp.flow, spec.lift.horizon_periods * tau, periods, grid, cfg.canon_size());
      std::vector<double> times;
      for (double t : spec.lift.times) times.push_back(t * tau);
      LiftedDistanceOptions opts;
      opts.samples = spec.lift.samples;
      if (opts.samples > kExactAssignmentLimit) opts.method = OtMethod::entropic;
      const auto res = invariance_residual(model, lifted, times, cfg, opts);
      std::ostringstream csv;
      io::write_lifted_csv(csv, lifted);
      w.put("lifted.csv", csv.str());
      w.put_json("lift.json", json{{"fixed_point", io::to_json(fp.report)},
                                   {"times", times},
                                   {"invariance_residual", res},
                                   {"lifted", io::lifted_summary(lifted)}});
      if (spec.emit_plots) {
        PlotData d;
        d.title = "fiber means over the torus";
        d.rows = 1;
        d.cols = lifted.fibers.size();
        d.x = {tau};
        d.y = {1.0};
        for (const auto& f : lifted.fibers) d.values.push_back(f.measure.mean()[0]);
        w.put_plot("torus_heatmap", d, PlotKind::torus_heatmap);
      }
      return fp.report.converged ? kExitOk : kExitNotConverged;
    }
    case Command::qp_rep: {
      if (!model.qp) throw ValidationError("model.forcing", "qp_rep needs a quasi-periodic forcing");
      const auto& periods = model.qp->periods;
      const std::vector<std::size_t> res(periods.size(), spec.lift.base_grid);
      const auto bases = torus_grid(periods, res);
      const auto qp = qp_representation(model, bases, spec.window, anchor, spec.tol, spec.max_iter, cfg);
      std::ostringstream csv;
      io::write_lifted_csv(csv, qp.lifted);
      w.put("lifted.csv", csv.str());
      w.put_json("qp.json", io::to_json(qp));
      if (spec.emit_plots) {
        PlotData d;
        d.title = "fiber means over the torus";
        d.rows = periods.size() >= 2 ? spec.lift.base_grid : 1;
        d.cols = qp.lifted.fibers.size() / d.rows;
        d.x = {periods.size() >= 2 ? periods[1] : periods[0]};
        d.y = {periods.size() >= 2 ? periods[0] : 1.0};
        for (const auto& f : qp.lifted.fibers) d.values.push_back(f.measure.mean()[0]);
        d.values.resize(d.rows * d.cols);
        w.put_plot("torus_heatmap", d, PlotKind::torus_heatmap);
      }
      return qp.all_converged ? kExitOk : kExitNotConverged;
    }
    case Command::check: {
      const auto profile = build_profile(spec.model);
      SampleSpec sample;
      sample.seed = cfg.seed;
      const auto rep = check_assumptions(model, profile, sample);
      json j = io::to_json(rep);
      try {
        j["theta_at_window_start"] = theta(profile, spec.window.start);
      } catch (const NotDissipativeError& e) {
        j["theta_at_window_start"] = nullptr;
        j["theta_note"] = e.what();
      }
      if (spec.model.name == "curie_weiss") {
        const auto cw = curie_weiss_params(spec.model);
        json conds = json::array();
        for (int a : {-1, 0, 1}) {
          const double th = a == 0 ? 1.5 : cw_theta_star();
          const auto c = cw_conditions(cw, a, th);
          conds.push_back({{"a", a},
                           {"theta", th},
                           {"satisfied", c.satisfied},
                           {"reason", c.reason},
                           {"beta_threshold", std::isfinite(c.beta_threshold) ? json(c.beta_threshold) : json(nullptr)}});
        }
        j["curie_weiss"] = {{"regime", cw_regime(cw)}, {"conditions", conds}};
      }
      w.put_json("check.json", j);
      std::ostringstream csv;
      csv << "inequality,samples,violations,worst_margin\n";
      for (const auto& c : rep.checks) {
        csv << c.name << ',' << c.samples << ',' << c.violations << ',' << io::format_double(c.worst_margin) << '\n';
      }
      w.put("margins.csv", csv.str());
      return kExitOk;
    }
    case Command::bistable: {
      const auto cw = curie_weiss_params(spec.model);
      const auto run = multistability_run(cw, spec.bistable.anchors, spec.bistable.thetas, spec.window, spec.tol,
                                          spec.max_iter, cfg);
      json j = io::to_json(run.report);
      const auto profile = profile_curie_weiss(cw);
      for (std::size_t i = 0; i < run.flows.size(); ++i) {
        const double a = spec.bistable.anchors[i];
        // moments are taken in the frame centred at the anchor
        const double neg = -a;
        j["anchors"][i]["moment_bound"] = moment_check(run.flows[i], profile, std::span<const double>(&neg, 1));
        w.put_flow("flow_anchor" + std::to_string(i), run.flows[i]);
        if (spec.emit_plots) {
          w.put_plot("flow_mean_band_anchor" + std::to_string(i),
                     mean_band(run.flows[i], "anchor " + io::format_double(a) + ": mean +- sd"), PlotKind::flow_mean_band);
        }
      }
      w.put_json("bistable.json", j);
      if (run.report.refused) return kExitOk;
      const bool all_conv = std::all_of(run.report.anchors.begin(), run.report.anchors.end(),
                                        [](const AnchorOutcome& a) { return a.converged; });
      return all_conv ? kExitOk : kExitNotConverged;
    }
  }
  return kExitOk;
}

}  // namespace

ArtifactSet execute(const RunSpec& spec) {
  Writer w(spec.output_dir);
  w.put("spec.json", emit_spec(spec, true));
  int code = kExitOk;
  std::string status = "ok";
  try {
    code = run_command(spec, w);
    if (code == kExitNotConverged) status = "not converged";
  } catch (const BlowUpError& e) {
    code = kExitBlowUp;
    status = std::string("blow-up: ") + e.what();
  } catch (const ModelError& e) {
    code = kExitBlowUp;
    status = std::string("model error: ") + e.what();
  } catch (const ValidationError& e) {
    code = kExitValidation;
    status = "validation error at " + e.field() + ": " + e.what();
  } catch (const ConstructionError& e) {
    code = kExitValidation;
    status = std::string("invalid input: ") + e.what();
  } catch (const UnsupportedModelError& e) {
    code = kExitValidation;
    status = std::string("unsupported: ") + e.what();
  }
  auto& set = w.set();
  set.exit_code = code;
  set.status = status;
  set.partial = code == kExitBlowUp || code == kExitValidation;
  json run{{"command", command_name(spec.command)},
           {"exit_code", code},
           {"status", status},
           {"partial", set.partial},
           {"notes", set.notes}};
  w.put_json("run.json", run);
  std::ostringstream manifest;
  manifest << "file,bytes,sha256\n";
  for (const auto& a : set.files) manifest << a.file << ',' << a.bytes << ',' << a.sha256 << '\n';
  io::write_file(w.dir() / "manifest.csv", manifest.str());
  return set;
}

}  // namespace mckv
