#pragma once

#include <string>

#include "dmnls/config.hpp"

namespace dmnls {

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 config error, 3 numerical failure, 4 non-convergence
  std::string message;
};

// Executes one subcommand (evolve, groundstate, stability, psi-from-profile,
// audit) and writes its artifacts plus run.json into out_dir.  Data outputs
// (CSV and the result/report JSONs) are deterministic for a fixed config and
// seed; run.json additionally carries the wall time.
RunOutcome run_subcommand(const std::string& subcommand,
                          const ExperimentConfig& cfg,
                          const std::string& out_dir);

}  // namespace dmnls
