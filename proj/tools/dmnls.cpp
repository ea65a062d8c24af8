#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "dmnls/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: .)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dispersion-managed NLS toolkit"};
  app.require_subcommand(1);

  CommonArgs evolve_args, gs_args, stab_args, psi_args, audit_args;
  double lambda_override = 0.0;
  std::string groundstate_path;

  CLI::App* evolve = app.add_subcommand("evolve", "integrate the averaged equation");
  add_common(evolve, evolve_args);

  CLI::App* gs = app.add_subcommand("groundstate", "constrained energy minimization");
  add_common(gs, gs_args);
  gs->add_option("--lambda", lambda_override, "mass constraint (overrides config)");

  CLI::App* stab = app.add_subcommand("stability", "perturb a minimizer and track orbit distance");
  add_common(stab, stab_args);
  stab->add_option("--groundstate", groundstate_path, "minimizer snapshot (.bin)");

  CLI::App* psi = app.add_subcommand("psi-from-profile", "pushforward density of a dispersion profile");
  add_common(psi, psi_args);

  CLI::App* audit = app.add_subcommand("audit", "sample-based nonlinearity assumption checks");
  add_common(audit, audit_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string subcommand;
  CommonArgs* args = nullptr;
  if (evolve->parsed()) subcommand = "evolve", args = &evolve_args;
  if (gs->parsed()) subcommand = "groundstate", args = &gs_args;
  if (stab->parsed()) subcommand = "stability", args = &stab_args;
  if (psi->parsed()) subcommand = "psi-from-profile", args = &psi_args;
  if (audit->parsed()) subcommand = "audit", args = &audit_args;

  dmnls::ExperimentConfig cfg;
  try {
    cfg = dmnls::load_config_file(args->config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  if (gs->parsed() && gs->count("--lambda") > 0) {
    if (!(lambda_override > 0.0)) {
      std::fprintf(stderr, "error: --lambda must be positive\n");
      return 2;
    }
    cfg.groundstate.lambda = lambda_override;
  }
  if (stab->parsed() && !groundstate_path.empty())
    cfg.stability.groundstate_path = groundstate_path;

  const dmnls::RunOutcome outcome =
      dmnls::run_subcommand(subcommand, cfg, args->out_dir);
  if (outcome.exit_code != 0)
    std::fprintf(stderr, "error: %s\n", outcome.message.c_str());
  else
    std::printf("%s: ok (artifacts in %s)\n", subcommand.c_str(),
                args->out_dir.c_str());
  return outcome.exit_code;
}
