#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mckv/runspec.hpp"

namespace mckv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitBlowUp = 4;

struct Artifact {
  std::string file;
  std::size_t bytes = 0;
  std::string sha256;
};

struct ArtifactSet {
  std::vector<Artifact> files;
  int exit_code = kExitOk;
  std::string status;
  /// true when the run stopped on an error after writing some outputs
  bool partial = false;
  std::vector<std::string> notes;
};

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Runs the run spec and writes its outputs plus run.json and manifest.csv into spec.output_dir.
/// Numerical failures are caught and reported through exit_code and run.json.
ArtifactSet execute(const RunSpec& spec);

}  // namespace mckv
