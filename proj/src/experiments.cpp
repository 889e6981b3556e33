#include "interleave/experiments.hpp"

#include <algorithm>

#include "interleave/fitting.hpp"
#include "interleave/flat_agent.hpp"
#include "interleave/kernels.hpp"

namespace interleave {

namespace {

template <class T, class Fn>
std::vector<T> map_runs(int runs, bool parallel, Fn&& fn) {
  if (runs < 1) throw ValidationError("runs must be >= 1");
  const auto n = static_cast<std::size_t>(runs);
  return parallel ? kernels::map_parallel<T>(n, fn) : kernels::map_serial<T>(n, fn);
}

LearningConfig seeded(const LearningConfig& config, std::size_t r) {
  LearningConfig c = config;
  c.seed = training_seed(config.seed, r);
  return c;
}

struct RunOutcome {
  std::vector<double> returns;
  double entries = 0.0;
};

}  // namespace

std::vector<std::vector<double>> hrl_runs(const Environment& env, const LearningConfig& config, int runs,
                                          bool parallel) {
  validate_config(config);
  return map_runs<std::vector<double>>(runs, parallel,
                                       [&](std::size_t r) { return train(env, seeded(config, r)).episode_returns; });
}

std::vector<std::vector<double>> flat_runs(const Environment& env, const LearningConfig& config, int runs,
                                           bool parallel) {
  validate_config(config);
  return map_runs<std::vector<double>>(
      runs, parallel, [&](std::size_t r) { return train_flat(env, seeded(config, r)).episode_returns; });
}

CurveSummary summarize_curve(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw ValidationError("empty learning curve");
  const std::size_t n = curve.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  CurveSummary s;
  for (std::size_t e = n - tail; e < n; ++e) s.asymptote += curve[e].mean;
  s.asymptote /= static_cast<double>(tail);
  s.first_reach_90 = n;
  for (std::size_t e = 0; e < n; ++e) {
    if (curve[e].mean >= 0.9 * s.asymptote) {
      s.first_reach_90 = e;
      break;
    }
  }
  return s;
}

FlatComparison compare_flat(const Environment& env, const LearningConfig& config, int runs, bool parallel) {
  validate_config(config);
  const auto hrl = map_runs<RunOutcome>(runs, parallel, [&](std::size_t r) {
    HierarchicalPolicy p = train(env, seeded(config, r));
    const auto [type_entries, root_entries] = distinct_entries(p);
    return RunOutcome{std::move(p.episode_returns), static_cast<double>(type_entries + root_entries)};
  });
  const auto flat = map_runs<RunOutcome>(runs, parallel, [&](std::size_t r) {
    FlatAgent a = train_flat(env, seeded(config, r));
    return RunOutcome{std::move(a.episode_returns), static_cast<double>(a.table.populated_count())};
  });

  FlatComparison out;
  std::vector<std::vector<double>> hr, fr;
  for (const auto& o : hrl) {
    hr.push_back(o.returns);
    out.hrl_entries += o.entries;
  }
  for (const auto& o : flat) {
    fr.push_back(o.returns);
    out.flat_entries += o.entries;
  }
  out.hrl_entries /= static_cast<double>(runs);
  out.flat_entries /= static_cast<double>(runs);
  out.hrl = learning_curve(hr);
  out.flat = learning_curve(fr);
  out.hrl_summary = summarize_curve(out.hrl);
  out.flat_summary = summarize_curve(out.flat);
  return out;
}

}  // namespace interleave
