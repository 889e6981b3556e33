#pragma once

#include <cstddef>
#include <vector>

#include "interleave/environment.hpp"
#include "interleave/evaluation.hpp"
#include "interleave/hrl_agent.hpp"

namespace interleave {

/// Per-episode returns of `runs` independent trainings; run r uses seed
/// training_seed(config.seed, r). The parallel variant matches the serial
/// one exactly.
std::vector<std::vector<double>> hrl_runs(const Environment& env, const LearningConfig& config, int runs,
                                          bool parallel = true);
std::vector<std::vector<double>> flat_runs(const Environment& env, const LearningConfig& config, int runs,
                                           bool parallel = true);

struct CurveSummary {
  double asymptote = 0.0;          // mean of the last 10% of the mean curve
  std::size_t first_reach_90 = 0;  // first episode with mean >= 0.9 * asymptote
};

CurveSummary summarize_curve(const std::vector<CurvePoint>& curve);

struct FlatComparison {
  std::vector<CurvePoint> hrl;
  std::vector<CurvePoint> flat;
  CurveSummary hrl_summary;
  CurveSummary flat_summary;
  double hrl_entries = 0.0;   // mean populated entries per run
  double flat_entries = 0.0;
};

FlatComparison compare_flat(const Environment& env, const LearningConfig& config, int runs, bool parallel = true);

}  // namespace interleave
