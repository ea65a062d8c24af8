#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmnls/dispersion.hpp"
#include "dmnls/evolution.hpp"
#include "dmnls/nonlocal.hpp"

namespace dmnls {

inline constexpr const char* kVersion = "1.0.0";

// Schema or range violation; the message names the offending field path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InitialSpec {
  std::string kind = "gaussian";  // gaussian | snapshot
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  double chirp = 0.0;
  std::string path;
};

struct GroundStateConfig {
  double lambda = 8.0;
  double tol = 1e-6;
  int max_iter = 5000;
  double init_width = 0.0;  // 0 = pick by Gaussian trial scan
};

struct StabilityConfig {
  double delta = 1e-3;
  std::string kind = "random-smooth";
  int mode_k = 1;
  double t_end = 10.0;
  double dt = 1e-3;
  int stride = 100;
  double k_stab = 50.0;
  double accept_residual = 1e-5;
  std::string groundstate_path;  // usually supplied via --groundstate
};

struct AuditConfig {
  std::vector<std::string> assumptions = {"A1", "A2", "A3", "A4", "A6"};
  double a_min = 1e-6;
  double a_max = 1e3;
  int n_samples = 4096;
  double p0 = 4.0;
  // decreasing exponent profile for A5, as (a, p(a)) knots
  std::vector<std::pair<double, double>> p_table;
};

struct ExperimentConfig {
  double L_box = 20.0;
  int n_points = 1024;

  std::string nl_kind = "kerr";
  double nl_p = 0.0;
  double nl_delta = 0.0;
  double nl_kappa = 0.0;

  double d_av = 1.0;
  bool use_psi = false;
  std::vector<DispersionSegment> segments = {{1.0, 1.0}, {1.0, -1.0}};
  std::vector<PsiPiece> psi_pieces;

  std::string quad_rule = "gauss-legendre";
  int nodes_per_piece = 32;

  EvolutionConfig evolution;
  InitialSpec initial;
  GroundStateConfig groundstate;
  StabilityConfig stability;
  AuditConfig audit;

  uint64_t seed = 20250816;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical echo with every default materialized; parse(echo(c)) reproduces
// the same echo, which is the round-trip contract.
std::string config_echo_json(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);  // FNV-1a 64 of the echo

// Runtime objects assembled from a validated config.
struct Experiment {
  GridPtr grid;
  NonlinearitySpec spec;
  PsiMeasure psi;
  Quadrature quad;
  NonlocalContext ctx;
};

Experiment build_experiment(const ExperimentConfig& c);
Field build_initial(const ExperimentConfig& c, const GridPtr& grid);
NonlinearitySpec build_nonlinearity(const ExperimentConfig& c);

}  // namespace dmnls
