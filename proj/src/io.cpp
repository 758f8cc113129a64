#include "mckv/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mckv/errors.hpp"

namespace mckv::io {

namespace {

using nlohmann::json;

json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json num_array(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> split_numbers(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t comma = std::min(line.find(',', pos), line.size());
    const char* b = line.data() + pos;
    const char* e = line.data() + comma;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ParseError(line_no, "bad number in CSV row");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("truncated binary snapshot");
  return v;
}

void put_measure(std::ostream& os, const EmpiricalMeasure& mu) {
  put<std::uint64_t>(os, mu.dim());
  put<std::uint64_t>(os, mu.size());
  os.write(reinterpret_cast<const char*>(mu.points().data()), static_cast<std::streamsize>(mu.points().size_bytes()));
  os.write(reinterpret_cast<const char*>(mu.weights().data()), static_cast<std::streamsize>(mu.weights().size_bytes()));
}

EmpiricalMeasure get_measure(std::istream& is) {
  const auto d = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  if (d == 0 || n == 0 || d > (1u << 16) || n > (std::uint64_t{1} << 34)) throw Error("corrupt binary snapshot header");
  std::vector<double> pts(d * n), w(n);
  is.read(reinterpret_cast<char*>(pts.data()), static_cast<std::streamsize>(pts.size() * sizeof(double)));
  is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
  if (!is) throw Error("truncated binary snapshot");
  return EmpiricalMeasure::from_samples(std::move(pts), d, std::move(w));
}

void check_version(std::istream& is) {
  const auto v = get<std::uint8_t>(is);
  if (v != kSnapshotVersion) throw Error("unsupported snapshot version " + std::to_string(v));
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu, std::size_t time_index) {
  for (std::size_t i = 0; i < mu.size(); ++i) {
    os << time_index << ',' << format_double(mu.weight(i));
    for (double x : mu.point(i)) os << ',' << format_double(x);
    os << '\n';
  }
}

void write_flow_csv(std::ostream& os, const MeasureFlow& flow) {
  os << "time_index,weight";
  for (std::size_t j = 0; j < flow.dim(); ++j) os << ",x" << j + 1;
  os << '\n';
  for (std::size_t i = 0; i < flow.size(); ++i) write_measure_csv(os, flow.node(i), i);
}

MeasureFlow read_flow_csv(std::istream& is, double t_start, double dt_grid) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<EmpiricalMeasure> nodes;
  std::vector<double> pts, w;
  std::size_t current = 0, dim = 0;
  auto flush = [&] {
    if (!w.empty()) nodes.push_back(EmpiricalMeasure::from_samples(std::move(pts), dim, std::move(w)));
    pts.clear();
    w.clear();
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line.rfind("time_index", 0) == 0) continue;
    const auto row = split_numbers(line, line_no);
    if (row.size() < 3) throw ParseError(line_no, "CSV row needs time_index, weight and coordinates");
    if (dim == 0) dim = row.size() - 2;
    if (row.size() - 2 != dim) throw ParseError(line_no, "inconsistent dimension");
    const auto idx = static_cast<std::size_t>(row[0]);
    if (idx != current) {
      if (idx != current + 1) throw ParseError(line_no, "time indices must be consecutive");
      flush();
      current = idx;
    }
    w.push_back(row[1]);
    pts.insert(pts.end(), row.begin() + 2, row.end());
  }
  flush();
  if (nodes.empty()) throw ParseError(line_no, "no rows");
  return MeasureFlow(t_start, dt_grid, std::move(nodes));
}

EmpiricalMeasure read_measure_csv(std::istream& is) { return read_flow_csv(is, 0.0, 1.0).node(0); }

void write_flow_binary(std::ostream& os, const MeasureFlow& flow) {
  put<std::uint8_t>(os, kSnapshotVersion);
  put<double>(os, flow.t_start());
  put<double>(os, flow.dt_grid());
  put<std::uint8_t>(os, static_cast<std::uint8_t>(flow.extension().kind));
  put<double>(os, flow.extension().period);
  put<std::uint64_t>(os, flow.size());
  for (const auto& node : flow.nodes()) put_measure(os, node);
}

MeasureFlow read_flow_binary(std::istream& is) {
  check_version(is);
  const double t0 = get<double>(is);
  const double dt = get<double>(is);
  const auto kind = get<std::uint8_t>(is);
  const double period = get<double>(is);
  if (kind > 2) throw Error("corrupt extension kind in snapshot");
  const auto n = get<std::uint64_t>(is);
  std::vector<EmpiricalMeasure> nodes;
  nodes.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) nodes.push_back(get_measure(is));
  return MeasureFlow(t0, dt, std::move(nodes), FlowExtension{static_cast<ExtensionKind>(kind), period});
}

void write_measure_binary(std::ostream& os, const EmpiricalMeasure& mu) {
  put<std::uint8_t>(os, kSnapshotVersion);
  put_measure(os, mu);
}

EmpiricalMeasure read_measure_binary(std::istream& is) {
  check_version(is);
  return get_measure(is);
}

void write_lifted_csv(std::ostream& os, const LiftedMeasure& m) {
  os << "fiber";
  for (std::size_t j = 0; j < m.periods.size(); ++j) os << ",s" << j + 1;
  os << ",fiber_weight,atom_weight";
  for (std::size_t j = 0; j < m.dim(); ++j) os << ",x" << j + 1;
  os << '\n';
  for (std::size_t f = 0; f < m.fibers.size(); ++f) {
    const auto& fb = m.fibers[f];
    std::string prefix = std::to_string(f);
    for (double s : fb.base.coords) prefix += ',' + format_double(s);
    prefix += ',' + format_double(fb.weight);
    for (std::size_t i = 0; i < fb.measure.size(); ++i) {
      os << prefix << ',' << format_double(fb.measure.weight(i));
      for (double x : fb.measure.point(i)) os << ',' << format_double(x);
      os << '\n';
    }
  }
}

void write_flow_summary_csv(std::ostream& os, const MeasureFlow& flow) {
  const std::size_t d = flow.dim();
  os << "time";
  for (std::size_t j = 0; j < d; ++j) os << ",mean" << j + 1;
  for (std::size_t j = 0; j < d; ++j) os << ",var" << j + 1;
  os << '\n';
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const auto& mu = flow.node(i);
    const auto mean = mu.mean();
    std::vector<double> var(d, 0.0);
    for (std::size_t a = 0; a < mu.size(); ++a) {
      const auto x = mu.point(a);
      for (std::size_t j = 0; j < d; ++j) var[j] += mu.weight(a) * (x[j] - mean[j]) * (x[j] - mean[j]);
    }
    os << format_double(flow.time(i));
    for (double m : mean) os << ',' << format_double(m);
    for (double v : var) os << ',' << format_double(v);
    os << '\n';
  }
}

json to_json(const PullbackReport& r) {
  return json{{"start_times", num_array(r.start_times)},
              {"gaps", num_array(r.gaps)},
              {"converged", r.converged},
              {"final_gap", num(r.final_gap)},
              {"burn_in", num(r.burn_in)}};
}

json to_json(const FixedPointReport& r) {
  json j{{"iterates", r.iterates},
         {"residuals", num_array(r.residuals)},
         {"window", {num(r.window.start), num(r.window.end)}},
         {"anchor", num_array(r.anchor)},
         {"converged", r.converged},
         {"cycle_detected", r.cycle_detected},
         {"averaging_engaged", r.averaging_engaged},
         {"pullback_stages", r.pullback_stages},
         {"message", r.message}};
  j["entrance_residual"] = r.entrance_residual >= 0.0 ? num(r.entrance_residual) : json(nullptr);
  j["entrance_noise_floor"] = num(r.entrance_noise_floor);
  return j;
}

json to_json(const AssumptionReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"samples", c.samples},
                      {"violations", c.violations},
                      {"worst_margin", num(c.worst_margin)},
                      {"witnesses", c.witnesses}});
  }
  return json{{"checks", checks}, {"violation_found", r.violation_found}, {"summary", r.summary}};
}

json to_json(const BistabilityReport& r) {
  json anchors = json::array();
  for (const auto& a : r.anchors) {
    anchors.push_back({{"anchor", num(a.anchor)},
                       {"theta", num(a.theta)},
                       {"conditions_hold", a.conditions_hold},
                       {"converged", a.converged},
                       {"worst_w1", num(a.worst_w1)},
                       {"ball_margin", num(a.theta - a.worst_w1)},
                       {"in_ball", a.in_ball},
                       {"moment_ratio", num(a.moment_ratio)},
                       {"fixed_point", to_json(a.fixed_point)}});
  }
  return json{{"anchors", anchors},
              {"separation_lower_bound", num(r.separation_lower_bound)},
              {"measured_min_separation", num(r.measured_min_separation)},
              {"mc_slack", num(r.mc_slack)},
              {"refused", r.refused},
              {"certified", r.certified},
              {"message", r.message}};
}

json lifted_summary(const LiftedMeasure& m) {
  json fibers = json::array();
  for (const auto& f : m.fibers) {
    fibers.push_back({{"base", num_array(f.base.coords)},
                      {"weight", num(f.weight)},
                      {"atoms", f.measure.size()},
                      {"mean", num_array(f.measure.mean())},
                      {"second_moment", num(f.measure.moment(2.0))}});
  }
  return json{{"periods", num_array(m.periods)},
              {"grid", m.grid},
              {"second_moment", num(m.second_moment())},
              {"fibers", fibers}};
}

json to_json(const QpRepresentation& r) {
  json bases = json::array();
  for (const auto& b : r.bases) {
    bases.push_back({{"base", num_array(b.base.coords)},
                     {"converged", b.converged},
                     {"iterates", b.iterates},
                     {"final_residual", num(b.final_residual)}});
  }
  return json{{"all_converged", r.all_converged}, {"bases", bases}, {"lifted", lifted_summary(r.lifted)}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw Error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace mckv::io
