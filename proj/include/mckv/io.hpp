#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mckv/entrance.hpp"
#include "mckv/flow.hpp"
#include "mckv/lift.hpp"
#include "mckv/measure.hpp"
#include "mckv/verify.hpp"

namespace mckv::io {

/// Leading byte of every binary snapshot.
inline constexpr std::uint8_t kSnapshotVersion = 1;

/// Shortest text that reads back to the same double.
std::string format_double(double v);

// CSV: one row per atom, columns time_index, weight, x1..xd.
void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu, std::size_t time_index = 0);
void write_flow_csv(std::ostream& os, const MeasureFlow& flow);
/// Reads rows back into nodes; times are rebuilt from t_start and dt_grid.
MeasureFlow read_flow_csv(std::istream& is, double t_start, double dt_grid);
EmpiricalMeasure read_measure_csv(std::istream& is);

/// Binary snapshot: version byte, then grid, extension and nodes in native little-endian layout.
void write_flow_binary(std::ostream& os, const MeasureFlow& flow);
MeasureFlow read_flow_binary(std::istream& is);
void write_measure_binary(std::ostream& os, const EmpiricalMeasure& mu);
EmpiricalMeasure read_measure_binary(std::istream& is);

/// Rows: fiber, s_1..s_n, fiber_weight, atom_weight, x_1..x_d.
void write_lifted_csv(std::ostream& os, const LiftedMeasure& m);

/// Node-wise mean and variance table: time, mean_1..mean_d, var_1..var_d.
void write_flow_summary_csv(std::ostream& os, const MeasureFlow& flow);

nlohmann::json to_json(const PullbackReport& r);
nlohmann::json to_json(const FixedPointReport& r);
nlohmann::json to_json(const AssumptionReport& r);
nlohmann::json to_json(const BistabilityReport& r);
nlohmann::json to_json(const QpRepresentation& r);
/// Per-base weight, mean and second moment.
nlohmann::json lifted_summary(const LiftedMeasure& m);

/// Writes bytes exactly; throws Error on I/O failure.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace mckv::io
