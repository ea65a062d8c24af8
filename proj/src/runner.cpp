#include "dmnls/runner.hpp"

#include <fftw3.h>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmnls/evolution.hpp"
#include "dmnls/random.hpp"
#include "dmnls/snapshot.hpp"
#include "dmnls/stability.hpp"
#include "dmnls/variational.hpp"

namespace dmnls {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

struct DriftSummary {
  double mass_drift_rel = 0.0;
  double energy_drift_rel = 0.0;
};

DriftSummary drift_summary(const Trajectory& traj) {
  DriftSummary s;
  if (traj.mass.empty()) return s;
  const double m0 = traj.mass.front();
  const double e0 = traj.energy.front();
  const double mass_scale = std::max(std::abs(m0), 1e-300);
  const double energy_scale = std::max(std::abs(e0), 1e-12);
  for (size_t i = 0; i < traj.mass.size(); ++i) {
    s.mass_drift_rel =
        std::max(s.mass_drift_rel, std::abs(traj.mass[i] - m0) / mass_scale);
    s.energy_drift_rel = std::max(s.energy_drift_rel,
                                  std::abs(traj.energy[i] - e0) / energy_scale);
  }
  return s;
}

json run_evolve(const ExperimentConfig& cfg, const std::filesystem::path& out,
                RunOutcome& outcome) {
  Experiment ex = build_experiment(cfg);
  Field u0 = build_initial(cfg, ex.grid);
  Trajectory traj = evolve(ex.ctx, cfg.evolution, u0);

  std::ostringstream csv;
  csv << "t,mass,energy,h1_norm\n";
  for (size_t i = 0; i < traj.times.size(); ++i)
    csv << fmt(traj.times[i]) << ',' << fmt(traj.mass[i]) << ','
        << fmt(traj.energy[i]) << ',' << fmt(traj.h1[i]) << '\n';
  write_text(out / "observables.csv", csv.str());

  for (size_t i = 0; i < traj.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "snap_%06zu.bin", i);
    write_snapshot((out / name).string(), traj.snapshots[i],
                   traj.snapshot_times[i]);
  }
  write_snapshot((out / "final.bin").string(), traj.final_field,
                 traj.final_time);

  const DriftSummary drift = drift_summary(traj);
  json metrics = {{"mass_drift_rel", drift.mass_drift_rel},
                  {"energy_drift_rel", drift.energy_drift_rel},
                  {"final_time", traj.final_time},
                  {"final_h1", traj.h1.empty() ? 0.0 : traj.h1.back()},
                  {"termination", traj.termination}};
  if (traj.termination != "completed") {
    outcome.exit_code = 3;
    outcome.message = "evolution terminated early: " + traj.termination;
  }
  return metrics;
}

json run_groundstate(const ExperimentConfig& cfg,
                     const std::filesystem::path& out, RunOutcome& outcome) {
  if (cfg.d_av < 0.0)
    throw ConfigError("d_av: must be >= 0 for groundstate runs");
  Experiment ex = build_experiment(cfg);
  const double lambda = cfg.groundstate.lambda;

  double width = cfg.groundstate.init_width;
  if (width == 0.0) {
    ThresholdScan scan = threshold_scan(ex.ctx, {lambda}, default_sigma_grid());
    width = scan.rows.front().best_sigma;
  }
  const double amp = std::sqrt(lambda / (width * std::sqrt(M_PI)));
  Field init = gaussian_field(ex.grid, amp, width);

  GroundStateResult gs = ground_state(ex.ctx, lambda, init,
                                      cfg.groundstate.tol,
                                      cfg.groundstate.max_iter);

  std::ostringstream csv;
  csv << "iter,energy,residual\n";
  const size_t rows =
      std::min(gs.energy_history.size(), gs.residual_history.size());
  for (size_t i = 0; i < rows; ++i)
    csv << i << ',' << fmt(gs.energy_history[i]) << ','
        << fmt(gs.residual_history[i]) << '\n';
  write_text(out / "descent.csv", csv.str());

  write_snapshot((out / "groundstate.bin").string(), gs.f, 0.0);

  json result = {{"lambda", gs.lambda},
                 {"omega", gs.omega},
                 {"energy", gs.energy},
                 {"residual", gs.residual},
                 {"iterations", gs.iterations},
                 {"converged", gs.converged},
                 {"likely_no_ground_state", gs.likely_no_ground_state},
                 {"init_width", width}};
  write_json(out / "result.json", result);

  if (!gs.converged) {
    outcome.exit_code = 4;
    std::ostringstream os;
    os << "groundstate did not reach tol " << cfg.groundstate.tol << " in "
       << cfg.groundstate.max_iter << " iterations (residual " << gs.residual
       << ")";
    outcome.message = os.str();
  }
  return result;
}

json run_stability(const ExperimentConfig& cfg,
                   const std::filesystem::path& out, RunOutcome& outcome) {
  if (cfg.stability.groundstate_path.empty())
    throw ConfigError(
        "stability.groundstate_path: required (pass --groundstate)");
  Experiment ex = build_experiment(cfg);

  Snapshot snap;
  try {
    snap = read_snapshot(cfg.stability.groundstate_path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("stability.groundstate_path: ") + e.what());
  }
  if (snap.field.grid->n_points() != ex.grid->n_points() ||
      snap.field.grid->half_width() != ex.grid->half_width())
    throw ConfigError(
        "stability.groundstate_path: snapshot grid does not match the "
        "configured grid");
  Field f{ex.grid, std::move(snap.field.values)};

  GroundStateResult ground;
  ground.f = f;
  ground.lambda = inner(f, f).real();
  Field grad = energy_gradient(ex.ctx, f);
  ground.omega = std::real(inner(f, grad)) / ground.lambda;
  Field tangent = grad - cx(ground.omega, 0.0) * f;
  ground.residual =
      std::sqrt(std::max(0.0, inner(tangent, tangent).real())) /
      std::sqrt(ground.lambda);
  ground.energy = energy(ex.ctx, f);
  ground.converged = true;
  if (ground.residual > cfg.stability.accept_residual) {
    std::ostringstream os;
    os << "stability.groundstate_path: minimizer residual " << ground.residual
       << " exceeds accept_residual " << cfg.stability.accept_residual;
    throw ConfigError(os.str());
  }

  StabilityOptions opt;
  opt.delta = cfg.stability.delta;
  opt.kind = perturbation_from_name(cfg.stability.kind);
  opt.mode_k = cfg.stability.mode_k;
  opt.t_end = cfg.stability.t_end;
  opt.dt = cfg.stability.dt;
  opt.stride = cfg.stability.stride;
  opt.k_stab = cfg.stability.k_stab;
  opt.seed = cfg.seed;

  StabilityReport rep = stability_experiment(ex.ctx, ground, opt);

  std::ostringstream csv;
  csv << "t,d\n";
  for (size_t i = 0; i < rep.times.size(); ++i)
    csv << fmt(rep.times[i]) << ',' << fmt(rep.distance[i]) << '\n';
  write_text(out / "distance.csv", csv.str());

  json report = {{"delta", rep.delta},
                 {"k_stab", rep.k_stab},
                 {"norm", rep.norm},
                 {"kind", rep.kind},
                 {"verdict", rep.verdict},
                 {"max_distance", rep.max_distance},
                 {"termination", rep.termination},
                 {"lambda", ground.lambda},
                 {"omega", ground.omega},
                 {"residual", ground.residual}};
  write_json(out / "report.json", report);

  if (rep.termination != "completed") {
    outcome.exit_code = 3;
    outcome.message = "perturbed evolution terminated early: " + rep.termination;
  }
  return report;
}

json run_psi(const ExperimentConfig& cfg, const std::filesystem::path& out,
             RunOutcome&) {
  const PsiMeasure psi =
      cfg.use_psi ? psi_from_pieces(cfg.psi_pieces)
                  : psi_from_profile(make_profile(cfg.d_av, cfg.segments));

  json pieces = json::array();
  std::ostringstream csv;
  csv << "r,density\n";
  for (const PsiPiece& p : psi.pieces) {
    pieces.push_back({p.r_lo, p.r_hi, p.density});
    csv << fmt(p.r_lo) << ',' << fmt(p.density) << '\n';
    csv << fmt(p.r_hi) << ',' << fmt(p.density) << '\n';
  }
  write_text(out / "psi.csv", csv.str());

  json result = {{"pieces", pieces},
                 {"total_mass", psi.total_mass},
                 {"l2_membership", lq_membership(psi, 2.0)}};
  write_json(out / "pieces.json", result);
  return result;
}

json run_audit(const ExperimentConfig& cfg, const std::filesystem::path& out,
               RunOutcome&) {
  const NonlinearitySpec spec = build_nonlinearity(cfg);
  AuditParams params;
  params.p0 = cfg.audit.p0;
  if (!cfg.audit.p_table.empty()) {
    const auto table = cfg.audit.p_table;
    params.p_of_a = [table](double a) {
      if (a <= table.front().first) return table.front().second;
      if (a >= table.back().first) return table.back().second;
      for (size_t i = 1; i < table.size(); ++i) {
        if (a <= table[i].first) {
          const auto& [a0, p0] = table[i - 1];
          const auto& [a1, p1] = table[i];
          return p0 + (p1 - p0) * (a - a0) / (a1 - a0);
        }
      }
      return table.back().second;
    };
  }

  json reports = json::array();
  bool all_pass = true;
  for (const std::string& id : cfg.audit.assumptions) {
    AssumptionReport r = audit_assumption(spec, id, cfg.audit.a_min,
                                          cfg.audit.a_max, cfg.audit.n_samples,
                                          params);
    all_pass = all_pass && r.pass;
    reports.push_back({{"id", r.id},
                       {"pass", r.pass},
                       {"worst_ratio", r.worst_ratio},
                       {"worst_point", r.worst_point},
                       {"samples", r.samples},
                       {"detail", r.detail}});
  }
  json result = {{"nonlinearity", cfg.nl_kind},
                 {"assumptions", reports},
                 {"all_pass", all_pass}};
  write_json(out / "audit.json", result);
  return result;
}

}  // namespace

RunOutcome run_subcommand(const std::string& subcommand,
                          const ExperimentConfig& cfg,
                          const std::string& out_dir) {
  RunOutcome outcome;
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path out(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(out);

  json meta;
  meta["subcommand"] = subcommand;
  meta["version"] = kVersion;
  meta["fftw"] = std::string(fftw_version);
  meta["seed"] = cfg.seed;
  meta["config_hash"] = config_hash(cfg);
  meta["config"] = json::parse(config_echo_json(cfg));

  try {
    json metrics;
    if (subcommand == "evolve") {
      metrics = run_evolve(cfg, out, outcome);
    } else if (subcommand == "groundstate") {
      metrics = run_groundstate(cfg, out, outcome);
    } else if (subcommand == "stability") {
      metrics = run_stability(cfg, out, outcome);
    } else if (subcommand == "psi-from-profile") {
      metrics = run_psi(cfg, out, outcome);
    } else if (subcommand == "audit") {
      metrics = run_audit(cfg, out, outcome);
    } else {
      throw ConfigError("unknown subcommand " + subcommand);
    }
    meta["metrics"] = metrics;
    meta["status"] = outcome.exit_code == 0 ? "ok" : "failed";
    if (outcome.exit_code != 0) meta["error"] = outcome.message;
  } catch (const ConfigError& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
  } catch (const std::invalid_argument& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = 3;
    outcome.message = e.what();
  }
  if (outcome.exit_code != 0 && !meta.contains("status")) {
    meta["status"] = "failed";
    meta["error"] = outcome.message;
  }

  const auto stop = std::chrono::steady_clock::now();
  meta["wall_time_s"] =
      std::chrono::duration<double>(stop - start).count();
  try {
    write_json(out / "run.json", meta);
  } catch (const std::exception& e) {
    if (outcome.exit_code == 0) {
      outcome.exit_code = 3;
      outcome.message = e.what();
    }
  }
  return outcome;
}

}  // namespace dmnls
