#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dmnls/config.hpp"
#include "dmnls/random.hpp"
#include "dmnls/snapshot.hpp"

using namespace dmnls;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("dmnls_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd =
      env_prefix + DMNLS_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Error message of parse_config, or "" when it accepts the text.
std::string parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& message, const std::string& needle) {
  return message.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("empty config materializes every default") {
  ExperimentConfig c = parse_config("{}");
  CHECK(c.L_box == 20.0);
  CHECK(c.n_points == 1024);
  CHECK(c.nl_kind == "kerr");
  CHECK(c.d_av == 1.0);
  CHECK(!c.use_psi);
  REQUIRE(c.segments.size() == 2);
  CHECK(c.segments[0].tau == 1.0);
  CHECK(c.segments[0].slope == 1.0);
  CHECK(c.segments[1].slope == -1.0);
  CHECK(c.quad_rule == "gauss-legendre");
  CHECK(c.nodes_per_piece == 32);
  CHECK(c.evolution.dt == 1e-3);
  CHECK(c.evolution.t_end == 1.0);
  CHECK(c.evolution.integrator == Integrator::interaction_rk4);
  CHECK(c.evolution.stride == 10);
  CHECK(!c.evolution.dealias.has_value());
  CHECK(c.initial.kind == "gaussian");
  CHECK(c.initial.amplitude == 1.0);
  CHECK(c.initial.width == 1.0);
  CHECK(c.groundstate.lambda == 8.0);
  CHECK(c.groundstate.tol == 1e-6);
  CHECK(c.groundstate.max_iter == 5000);
  CHECK(c.stability.delta == 1e-3);
  CHECK(c.stability.kind == "random-smooth");
  CHECK(c.stability.k_stab == 50.0);
  CHECK(c.audit.assumptions ==
        std::vector<std::string>{"A1", "A2", "A3", "A4", "A6"});
  CHECK(c.seed == 20250816);
}

TEST_CASE("errors carry the offending field path") {
  CHECK(mentions(parse_error("not json"), "config:"));
  CHECK(mentions(parse_error("[1, 2]"), "expected a JSON object"));
  CHECK(mentions(parse_error(R"({"bogus": 1})"), "bogus: unknown key"));
  CHECK(mentions(parse_error(R"({"grid": {"n_pointz": 64}})"),
                 "grid.n_pointz: unknown key"));
  CHECK(mentions(parse_error(R"({"grid": {"n_points": 7}})"),
                 "grid.n_points: must be even and at least 8"));
  CHECK(mentions(parse_error(R"({"grid": {"L_box": -2}})"),
                 "grid.L_box: must be positive"));
  CHECK(mentions(parse_error(R"({"grid": {"L_box": "wide"}})"),
                 "grid.L_box: expected a number"));
  CHECK(mentions(parse_error(R"({"evolution": {"dt": -1}})"),
                 "evolution.dt: must be positive"));
  CHECK(mentions(parse_error(R"({"evolution": {"t_end": 0}})"),
                 "evolution.t_end: must be positive"));
  CHECK(mentions(parse_error(R"({"evolution": {"stride": 0}})"),
                 "evolution.stride: must be >= 1"));
  CHECK(mentions(parse_error(R"({"evolution": {"integrator": "euler"}})"),
                 "evolution.integrator"));
  CHECK(mentions(parse_error(R"({"evolution": {"dealias": 1}})"),
                 "evolution.dealias: expected a boolean"));
  CHECK(mentions(parse_error(R"({"quadrature": {"nodes_per_piece": 0}})"),
                 "quadrature.nodes_per_piece: must be >= 1"));
  CHECK(mentions(parse_error(R"({"quadrature": {"rule": "simpson"}})"),
                 "quadrature.rule"));
  CHECK(mentions(parse_error(R"({"groundstate": {"lambda": 0}})"),
                 "groundstate.lambda: must be positive"));
  CHECK(mentions(parse_error(R"({"groundstate": {"max_iter": 0}})"),
                 "groundstate.max_iter: must be >= 1"));
  CHECK(mentions(parse_error(R"({"stability": {"kind": "wobble"}})"),
                 "stability.kind"));
  CHECK(mentions(parse_error(R"({"stability": {"delta": 0}})"),
                 "stability.delta: must be positive"));
  CHECK(mentions(parse_error(R"({"audit": {"assumptions": ["A7"]}})"),
                 "audit.assumptions: unknown assumption id A7"));
  CHECK(mentions(parse_error(R"({"audit": {"n_samples": 10}})"),
                 "audit.n_samples: must be >= 100"));
  CHECK(mentions(parse_error(R"({"seed": -3})"),
                 "seed: expected a non-negative integer"));
}

TEST_CASE("nonlinearity parameter rules") {
  CHECK(mentions(parse_error(R"({"nonlinearity": {"kind": "kerr", "p": 2}})"),
                 "takes no parameters"));
  CHECK(mentions(parse_error(R"({"nonlinearity": {"kind": "power"}})"),
                 "nonlinearity.p: required for kind power"));
  CHECK(mentions(
      parse_error(R"({"nonlinearity": {"kind": "power", "p": 4.5}})"),
      "must satisfy 0 < p <= 4"));
  CHECK(mentions(parse_error(R"({"nonlinearity": {"kind": "power", "p": 0}})"),
                 "must satisfy 0 < p <= 4"));
  CHECK(mentions(
      parse_error(R"({"nonlinearity": {"kind": "power", "p": 2, "delta": 1}})"),
      "kind power takes only p"));
  CHECK(mentions(
      parse_error(R"({"nonlinearity": {"kind": "oscillating", "delta": 2}})"),
      "needs delta and kappa"));
  CHECK(mentions(
      parse_error(
          R"({"nonlinearity": {"kind": "oscillating", "delta": 2, "kappa": 1, "p": 2}})"),
      "nonlinearity.p: derived"));
  CHECK(mentions(
      parse_error(
          R"({"nonlinearity": {"kind": "oscillating", "delta": 1, "kappa": 2}})"),
      "need 0 < kappa < delta"));
  CHECK(mentions(parse_error(R"({"nonlinearity": {"kind": "cubic"}})"),
                 "must be kerr, power, saturating, or oscillating"));

  ExperimentConfig c =
      parse_config(R"({"nonlinearity": {"kind": "power", "p": 3}})");
  CHECK(c.nl_kind == "power");
  CHECK(c.nl_p == 3.0);
  c = parse_config(
      R"({"nonlinearity": {"kind": "oscillating", "delta": 2, "kappa": 0.5}})");
  CHECK(c.nl_delta == 2.0);
  CHECK(c.nl_kappa == 0.5);
  c = parse_config(R"({"nonlinearity": {"kind": "saturating"}})");
  CHECK(c.nl_kind == "saturating");
}

TEST_CASE("dispersion source rules") {
  CHECK(mentions(
      parse_error(
          R"({"profile": {"segments": [[1, 1], [1, -1]]}, "psi": {"pieces": [[0, 1, 1.0]]}})"),
      "give either profile or psi, not both"));
  CHECK(mentions(
      parse_error(
          R"({"d_av": 1.0, "profile": {"d_av": 0.5, "segments": [[1, 1], [1, -1]]}})"),
      "profile.d_av: conflicts with top-level d_av"));
  CHECK(mentions(
      parse_error(R"({"profile": {"segments": [[1, 1], [1, -0.5]]}})"),
      "profile.segments: segments must be mean-zero"));
  CHECK(mentions(parse_error(R"({"profile": {"segments": [[1]]}})"),
                 "each entry must be [tau, slope]"));
  CHECK(mentions(parse_error(R"({"psi": {"pieces": [[0, 1, 0.5]]}})"),
                 "total mass is 0.5"));
  CHECK(mentions(parse_error(R"({"psi": {"pieces": [[1, 0, 1.0]]}})"),
                 "psi.pieces"));

  ExperimentConfig c = parse_config(
      R"({"profile": {"d_av": 0.25, "segments": [[0.5, 3], [1.5, -1]]}})");
  CHECK(c.d_av == 0.25);
  CHECK(!c.use_psi);
  REQUIRE(c.segments.size() == 2);
  CHECK(c.segments[0].slope == 3.0);

  c = parse_config(
      R"({"psi": {"pieces": [[0, 0.5, 1.0], [0.5, 1.0, 1.0]]}, "d_av": 0})");
  CHECK(c.use_psi);
  CHECK(c.psi_pieces.size() == 2);
  CHECK(c.d_av == 0.0);
}

TEST_CASE("initial data rules") {
  CHECK(mentions(parse_error(R"({"initial": {"kind": "snapshot"}})"),
                 "initial.path: required for kind snapshot"));
  CHECK(mentions(
      parse_error(R"({"initial": {"kind": "gaussian", "path": "f.bin"}})"),
      "initial.path: only valid for kind snapshot"));
  CHECK(mentions(
      parse_error(
          R"({"initial": {"kind": "snapshot", "path": "f.bin", "width": 2}})"),
      "initial.width: only valid for kind gaussian"));
  CHECK(mentions(parse_error(R"({"initial": {"width": 0}})"),
                 "initial.width: must be positive"));
  CHECK(mentions(parse_error(R"({"initial": {"kind": "bessel"}})"),
                 "initial.kind: must be gaussian or snapshot"));

  ExperimentConfig c = parse_config(
      R"({"initial": {"amplitude": 2, "width": 0.5, "center": 1, "chirp": 0.3}})");
  CHECK(c.initial.amplitude == 2.0);
  CHECK(c.initial.width == 0.5);
  CHECK(c.initial.center == 1.0);
  CHECK(c.initial.chirp == 0.3);
}

TEST_CASE("echo materializes defaults and is a parse fixed point") {
  const std::string e1 = config_echo_json(parse_config("{}"));
  CHECK(mentions(e1, "\"dealias\": true"));  // kerr resolves to dealiased
  CHECK(mentions(e1, "\"n_points\": 1024"));
  CHECK(mentions(e1, "\"seed\": 20250816"));
  const std::string e2 = config_echo_json(parse_config(e1));
  CHECK(e1 == e2);

  const std::string sat =
      config_echo_json(parse_config(R"({"nonlinearity": {"kind": "saturating"}})"));
  CHECK(mentions(sat, "\"dealias\": false"));

  const std::string rich = R"({
    "grid": {"L_box": 12.5, "n_points": 256},
    "nonlinearity": {"kind": "oscillating", "delta": 3, "kappa": 1.25},
    "psi": {"pieces": [[0, 0.25, 2.0], [0.25, 1.25, 0.5]]},
    "d_av": 0.125,
    "quadrature": {"rule": "midpoint", "nodes_per_piece": 7},
    "evolution": {"dt": 2e-3, "t_end": 0.5, "integrator": "strang",
                  "stride": 5, "dealias": true, "snapshot_stride": 20},
    "initial": {"amplitude": 1.5, "width": 0.7, "center": -1, "chirp": 0.2},
    "groundstate": {"lambda": 4, "tol": 1e-7, "max_iter": 900, "init_width": 2},
    "stability": {"delta": 1e-4, "kind": "mode-k", "mode_k": 3, "t_end": 2,
                  "dt": 5e-4, "stride": 50, "k_stab": 25},
    "audit": {"assumptions": ["A1", "A5"], "a_min": 1e-4, "a_max": 10,
              "n_samples": 500, "p_table": [[0.1, 4.0], [10.0, 3.0]]},
    "seed": 99
  })";
  const std::string r1 = config_echo_json(parse_config(rich));
  const std::string r2 = config_echo_json(parse_config(r1));
  CHECK(r1 == r2);
  CHECK(r1 != e1);
}

TEST_CASE("config hash keys on content") {
  const std::string h0 = config_hash(parse_config("{}"));
  CHECK(h0.size() == 16);
  CHECK(h0.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(h0 == config_hash(parse_config("{}")));
  CHECK(h0 == config_hash(parse_config(config_echo_json(parse_config("{}")))));
  CHECK(h0 != config_hash(parse_config(R"({"seed": 1})")));
  CHECK(h0 != config_hash(parse_config(R"({"grid": {"n_points": 512}})")));
}

TEST_CASE("snapshot initial data round trips through a config") {
  TempDir dir;
  auto g = make_grid(10.0, 64);
  std::mt19937_64 rng(7);
  Field f = random_band_limited(g, rng, 8);
  write_snapshot(dir.file("f.bin"), f, 0.33);

  std::ostringstream cfg;
  cfg << R"({"grid": {"L_box": 10, "n_points": 64}, )"
      << R"("initial": {"kind": "snapshot", "path": ")" << dir.file("f.bin")
      << R"("}})";
  ExperimentConfig c = parse_config(cfg.str());
  Field loaded = build_initial(c, g);
  REQUIRE(loaded.values.size() == f.values.size());
  for (size_t j = 0; j < f.values.size(); ++j)
    CHECK(loaded.values[j] == f.values[j]);

  ExperimentConfig mismatched = c;
  mismatched.n_points = 128;
  auto g2 = make_grid(10.0, 128);
  CHECK_THROWS_AS(build_initial(mismatched, g2), ConfigError);

  ExperimentConfig missing = c;
  missing.initial.path = dir.file("absent.bin");
  CHECK_THROWS_AS(build_initial(missing, g), ConfigError);
}

TEST_CASE("cli psi-from-profile writes canonical artifacts") {
  TempDir dir;
  write_file(dir.file("cfg.json"), "{}");
  const int code = run_cli("psi-from-profile --config " + dir.file("cfg.json") +
                           " --out " + dir.path.string());
  REQUIRE(code == 0);

  json pieces = json::parse(read_file(dir.file("pieces.json")));
  REQUIRE(pieces["pieces"].size() == 1);
  CHECK(pieces["pieces"][0][0].get<double>() == 0.0);
  CHECK(pieces["pieces"][0][1].get<double>() == 1.0);
  CHECK(pieces["pieces"][0][2].get<double>() == 1.0);
  CHECK(pieces["total_mass"].get<double>() == 1.0);
  CHECK(pieces["l2_membership"].get<double>() == 1.0);
  CHECK(read_file(dir.file("psi.csv")).rfind("r,density\n", 0) == 0);

  json run = json::parse(read_file(dir.file("run.json")));
  CHECK(run["status"] == "ok");
  CHECK(run["subcommand"] == "psi-from-profile");
  CHECK(run["version"].get<std::string>() == kVersion);
  CHECK(run["seed"].get<uint64_t>() == 20250816);
  ExperimentConfig echoed = parse_config(run["config"].dump());
  CHECK(config_hash(echoed) == run["config_hash"].get<std::string>());
}

TEST_CASE("cli rejects bad invocations and configs with exit 2") {
  TempDir dir;
  CHECK(run_cli("psi-from-profile") == 2);  // --config is required
  CHECK(run_cli("psi-from-profile --config " + dir.file("absent.json")) == 2);

  write_file(dir.file("broken.json"), "{not json");
  CHECK(run_cli("evolve --config " + dir.file("broken.json")) == 2);

  write_file(dir.file("bad_field.json"), R"({"evolution": {"dt": -1}})");
  CHECK(run_cli("evolve --config " + dir.file("bad_field.json")) == 2);

  write_file(dir.file("ok.json"), "{}");
  CHECK(run_cli("groundstate --config " + dir.file("ok.json") +
                " --lambda -4 --out " + dir.path.string()) == 2);
}

TEST_CASE("cli groundstate non-convergence exits 4") {
  TempDir dir;
  write_file(dir.file("cfg.json"), R"({
    "grid": {"L_box": 20, "n_points": 128},
    "groundstate": {"lambda": 8, "max_iter": 1, "init_width": 1.0}
  })");
  const int code = run_cli("groundstate --config " + dir.file("cfg.json") +
                           " --out " + dir.path.string());
  CHECK(code == 4);
  json result = json::parse(read_file(dir.file("result.json")));
  CHECK(!result["converged"].get<bool>());
  CHECK(result["init_width"].get<double>() == 1.0);
  json run = json::parse(read_file(dir.file("run.json")));
  CHECK(run["status"] == "failed");
}

TEST_CASE("cli evolve reports blowup with exit 3") {
  TempDir dir;
  write_file(dir.file("cfg.json"), R"({
    "grid": {"L_box": 20, "n_points": 512},
    "nonlinearity": {"kind": "power", "p": 4},
    "psi": {"pieces": [[-0.5, 0.5, 1.0]]},
    "d_av": 1.0,
    "quadrature": {"rule": "midpoint", "nodes_per_piece": 1},
    "initial": {"amplitude": 4, "width": 0.5},
    "evolution": {"dt": 1e-3, "t_end": 2.0, "blowup_threshold": 50}
  })");
  const int code = run_cli("evolve --config " + dir.file("cfg.json") +
                           " --out " + dir.path.string());
  CHECK(code == 3);
  json run = json::parse(read_file(dir.file("run.json")));
  CHECK(run["status"] == "failed");
  CHECK(mentions(run["error"].get<std::string>(), "blowup-threshold"));
  CHECK(run["metrics"]["termination"] == "blowup-threshold");
}

TEST_CASE("cli evolve runs are bit-reproducible") {
  TempDir a, b, c, d;
  const std::string cfg_text = R"({
    "grid": {"L_box": 20, "n_points": 256},
    "evolution": {"dt": 1e-3, "t_end": 0.05, "stride": 10},
    "initial": {"amplitude": 1.2, "width": 0.9}
  })";
  write_file(a.file("cfg.json"), cfg_text);
  const std::string cfg = a.file("cfg.json");

  REQUIRE(run_cli("evolve --config " + cfg + " --out " + a.path.string()) == 0);
  REQUIRE(run_cli("evolve --config " + cfg + " --out " + b.path.string()) == 0);
  CHECK(read_file(a.file("observables.csv")) ==
        read_file(b.file("observables.csv")));
  CHECK(read_file(a.file("final.bin")) == read_file(b.file("final.bin")));

  REQUIRE(run_cli("evolve --config " + cfg + " --out " + c.path.string(),
                  "DMNLS_THREADS=1 ") == 0);
  REQUIRE(run_cli("evolve --config " + cfg + " --out " + d.path.string(),
                  "DMNLS_THREADS=3 ") == 0);
  CHECK(read_file(c.file("observables.csv")) ==
        read_file(d.file("observables.csv")));
  CHECK(read_file(c.file("final.bin")) == read_file(d.file("final.bin")));
  CHECK(read_file(a.file("observables.csv")) ==
        read_file(c.file("observables.csv")));

  const std::string csv = read_file(a.file("observables.csv"));
  CHECK(csv.rfind("t,mass,energy,h1_norm\n", 0) == 0);
}
