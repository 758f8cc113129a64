#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

#include "mckv/errors.hpp"
#include "mckv/execute.hpp"
#include "mckv/io.hpp"
#include "mckv/plot.hpp"
#include "mckv/runspec.hpp"

using namespace mckv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mckv_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmallOu = R"({
  "command": "entrance",
  "model": {"name": "ou"},
  "sim": {"n_particles": 2000, "dt": 0.01, "record_stride": 10},
  "window": [0, 1],
  "tol": 0.05
})";

}  // namespace

TEST_CASE("defaults are filled") {
  const auto s = load_spec(R"({"command": "entrance", "model": {"name": "ou"}})");
  CHECK(s.sim.n_particles == 20000);
  CHECK(s.sim.dt == 1e-3);
  CHECK(s.model.params.at("theta") == 1.0);
  CHECK(s.model.params.at("sigma") == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.anchor == std::vector<double>{0.0});
  const auto lp = load_spec(R"({"command": "fixed_point", "model": {"name": "linear_periodic"}})");
  CHECK(lp.model.forcing == ForcingSpec::sine(1.0, 1.0));
}

TEST_CASE("validation errors name the field") {
  auto field_of = [](const char* text) -> std::string {
    try {
      load_spec(text);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return "";
  };
  CHECK(field_of(R"({"command": "entrance", "model": {}})") == "model.name");
  CHECK(field_of(R"({"command": "entrance", "model": {"name": "nope"}})") == "model.name");
  CHECK(field_of(R"({"command": "launch", "model": {"name": "ou"}})") == "command");
  CHECK(field_of(R"({"command": "entrance", "model": {"name": "ou"}, "sim": {"dt": -1}})") == "sim.dt");
  CHECK(field_of(R"({"command": "entrance", "model": {"name": "ou", "params": {"beta": 1}}})") == "model.params.beta");
  CHECK(field_of(R"({"command": "entrance", "model": {"name": "ou"}, "window": [1, 0]})") == "window");
  CHECK(field_of(R"({"command": "entrance", "model": {"name": "ou"}, "colour": 1})") == "colour");
  CHECK(field_of(R"({"command": "bistable", "model": {"name": "ou"}})") == "model.name");
}

TEST_CASE("parse errors carry the line") {
  try {
    load_spec("{\n  \"command\": \"entrance\",\n  \"model\": {\"name\": \"ou\"\n  ,,\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("emit and load are inverse") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* names[] = {"ou", "meanfield_ou", "linear_periodic", "curie_weiss"};
  for (int i = 0; i < 50; ++i) {
    RunSpec s;
    s.command = static_cast<Command>(i % 6 == 5 ? 2 : i % 5);
    s.model.name = names[i % 4];
    if (s.model.name == "curie_weiss") {
      s.model.params["beta"] = 0.1 + 10.0 * u(rng);
      s.model.forcing = ForcingSpec{u(rng), {{u(rng), 0.5 + u(rng), u(rng), i % 2 == 0}}};
      s.model.forcing_set = true;
    } else if (s.model.name != "linear_periodic") {
      s.model.params["sigma"] = 0.5 + u(rng);
    }
    s.sim.n_particles = 2 + static_cast<std::size_t>(1e5 * u(rng));
    s.sim.dt = std::ldexp(1.0, -static_cast<int>(3 + 10 * u(rng)));
    s.sim.seed = rng();
    s.sim.record_stride = 1 + i;
    s.sim.tamed = i % 3 == 0;
    s.window = {-s.sim.dt * (i + 1), s.sim.dt * 17 * (i + 2)};
    s.tol = 1e-3 + u(rng);
    s.max_iter = 1 + i;
    s.emit_plots = i % 2 == 0;
    s.lift.times = {u(rng), u(rng)};
    s.bistable.thetas = {0.1 + u(rng), 0.1 + u(rng)};
    s.output_dir = "dir" + std::to_string(i);
    const bool lift = s.command == Command::lift_invariance || s.command == Command::qp_rep;
    if (lift && s.model.forcing.terms.empty() && s.model.name != "linear_periodic") {
      s.command = Command::simulate;
    }
    validate(s);
    CHECK(load_spec(emit_spec(s)) == s);
  }
}

TEST_CASE("execute writes outputs and a deterministic manifest") {
  auto spec = load_spec(kSmallOu);
  const auto dir_a = scratch("a");
  spec.output_dir = dir_a.string();
  const auto a = execute(spec);
  CHECK(a.exit_code == kExitOk);
  for (const char* f : {"spec.json", "flow.csv", "flow.bin", "pullback.json", "run.json", "manifest.csv",
                        "flow_mean_band.svg", "flow_mean_band.csv"}) {
    CHECK(fs::exists(fs::path(spec.output_dir) / f));
  }
  spec.output_dir = scratch("b").string();
  spec.sim.threads = 3;
  const auto b = execute(spec);
  CHECK(b.exit_code == kExitOk);
  CHECK(io::read_file(dir_a / "manifest.csv") ==
        io::read_file(fs::path(spec.output_dir) / "manifest.csv"));
  const auto echoed = load_spec(io::read_file(fs::path(spec.output_dir) / "spec.json"));
  CHECK(echoed.sim.seed == spec.sim.seed);
  CHECK(io::read_file(fs::path(spec.output_dir) / "spec.json").find("output_dir") == std::string::npos);
}

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("plots") {
  PlotData one;
  one.title = "single";
  one.x = {0.0};
  one.y = {1.0};
  one.lower = {0.5};
  one.upper = {1.5};
  const auto p = render_plot(one, PlotKind::flow_mean_band);
  CHECK(p.svg.find("<circle") != std::string::npos);
  CHECK(p.csv == "x,mean,lower,upper\n0,1,0.5,1.5\n");

  PlotData empty;
  CHECK_THROWS_AS(render_plot(empty, PlotKind::flow_mean_band), ConstructionError);
  CHECK_THROWS_AS(render_plot(empty, PlotKind::residual_history), ConstructionError);
  CHECK_THROWS_AS(render_plot(empty, PlotKind::torus_heatmap), ConstructionError);

  PlotData r;
  r.y = {1.0, 0.1, 0.01};
  r.reference = 0.02;
  const auto h = render_plot(r, PlotKind::residual_history);
  CHECK(h.svg.find("monotone decrease") != std::string::npos);
  CHECK(h.svg.find("stroke-dasharray") != std::string::npos);
  r.y = {1.0, 0.1, 0.2};
  CHECK(render_plot(r, PlotKind::residual_history).svg.find("non-monotone") != std::string::npos);
}

#ifdef MCKV_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MCKV_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  io::write_file(dir / "ok.json", kSmallOu);
  io::write_file(dir / "bad.json", R"({"command": "entrance", "model": {"name": "ou"}, "sim": {"dt": 0}})");
  io::write_file(dir / "broken.json", "{ not json");
  CHECK(run_cli("entrance --spec " + (dir / "ok.json").string() + " --out " + (dir / "o1").string() +
                " --threads 2 --seed 5") == kExitOk);
  const auto echoed = load_spec(io::read_file(dir / "o1" / "spec.json"));
  CHECK(echoed.sim.seed == 5);
  CHECK(fs::exists(dir / "o1" / "manifest.csv"));
  CHECK(run_cli("entrance --spec " + (dir / "bad.json").string() + " --out " + (dir / "o2").string()) ==
        kExitValidation);
  CHECK(run_cli("entrance --spec " + (dir / "broken.json").string()) == kExitValidation);
  CHECK(run_cli("launch --spec " + (dir / "ok.json").string()) == kExitValidation);
}
#endif
