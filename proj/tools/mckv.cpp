#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "mckv/errors.hpp"
#include "mckv/execute.hpp"
#include "mckv/runspec.hpp"

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle solver for entrance measures of McKean-Vlasov equations"};
  std::string command, spec_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("command", command, "simulate | entrance | fixed_point | lift_invariance | qp_rep | check | bistable")
      ->required();
  app.add_option("--spec", spec_path, "run specification (JSON)")->required();
  app.add_option("--seed", seed, "overrides sim.seed");
  app.add_option("--out", out_dir, "output directory (env MCKV_OUT)");
  app.add_option("--threads", threads, "worker threads (env MCKV_THREADS)");
  CLI11_PARSE(app, argc, argv);

  mckv::RunSpec spec;
  try {
    spec = mckv::load_spec_file(spec_path);
    spec.command = mckv::parse_command(command);
    if (seed) spec.sim.seed = *seed;
    if (auto e = env("MCKV_OUT")) spec.output_dir = *e;
    if (!out_dir.empty()) spec.output_dir = out_dir;
    if (auto e = env("MCKV_THREADS")) {
      try {
        spec.sim.threads = std::stoi(*e);
      } catch (const std::exception&) {
        throw mckv::ValidationError("MCKV_THREADS", "not an integer");
      }
    }
    if (threads) spec.sim.threads = *threads;
    mckv::validate(spec);
  } catch (const mckv::ParseError& e) {
    std::cerr << "parse error (line " << e.line() << "): " << e.what() << "\n";
    return mckv::kExitValidation;
  } catch (const mckv::ValidationError& e) {
    std::cerr << "validation error at " << e.field() << ": " << e.what() << "\n";
    return mckv::kExitValidation;
  }
  if (spec.sim.threads > 0) omp_set_num_threads(spec.sim.threads);

  try {
    const auto result = mckv::execute(spec);
    std::cout << mckv::command_name(spec.command) << ": " << result.status << "\n";
    for (const auto& a : result.files) std::cout << "  " << a.file << "  " << a.sha256 << "\n";
    return result.exit_code;
  } catch (const mckv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mckv::kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 1;
  }
}
