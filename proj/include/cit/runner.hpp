#pragma once

#include <ostream>

#include "cit/config.hpp"

namespace cit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 1;
inline constexpr int kExitPlanFailed = 2;
inline constexpr int kExitOracleFailed = 3;

struct RunOptions {
  bool oracle = true;  // off: plan and frames only
};

/// Plans, verifies and checks one task, writing artifacts under cfg.out:
/// plan.json, runlog.jsonl, oracle.csv and trace.csv (sweep.csv for sweeps)
/// and frames/NNNN.pgm when rendering. Every input is checked and loaded
/// before the output directory is touched, so a bad config throws and
/// leaves nothing behind. Returns one of the exit codes above. Timings go
/// to `out` only; plan.json is byte-identical for equal config and seed.
int run(const RunConfig& cfg, std::ostream& out, const RunOptions& opts = {});

}  // namespace cit::cli
