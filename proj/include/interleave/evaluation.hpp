#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interleave/environment.hpp"

namespace interleave {

/// A leave followed by the selection of a different instance: the root
/// state right after the leave and the instance chosen there.
struct SwitchEvent {
  EnvState state;
  std::size_t chosen = 0;
};

std::vector<SwitchEvent> switch_events(const Trace& trace);

// Teacher-forced accuracies: the policy is queried at the reference's own
// states. Absent (nullopt) when the reference has no event of the kind.
std::optional<double> next_task_accuracy(const Trace& reference, Policy& policy);
std::optional<double> leave_accuracy(const Trace& reference, Policy& policy);
std::optional<double> continue_accuracy(const Trace& reference, Policy& policy);

/// Positionwise mismatches; the shorter sequence is padded with a sentinel
/// that matches nothing.
std::size_t order_error(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Normalized counts of continue-step pre-states of every instance of the
/// type. Empty when the type was never worked on.
std::vector<double> state_visitation_histogram(std::span<const Trace> traces, const Environment& env,
                                               const std::string& type_id);

/// Sum of elementwise minima. 0 when either histogram is empty.
double histogram_intersection(std::span<const double> h1, std::span<const double> h2);

struct CurvePoint {
  double mean = 0.0;
  double std = 0.0;
};

/// Per-episode mean and population standard deviation across runs.
std::vector<CurvePoint> learning_curve(const std::vector<std::vector<double>>& runs);

struct MetricReport {
  double reward = 0.0;  // mean total reward of the free-running rollouts
  std::optional<double> next_task_accuracy;
  std::optional<double> leave_accuracy;
  std::optional<double> continue_accuracy;
  std::size_t order_error = 0;
  std::map<std::string, std::vector<double>> visitation;            // policy rollouts
  std::map<std::string, std::vector<double>> reference_visitation;  // reference traces
  std::map<std::string, double> intersections;
  double pooled_intersection = 0.0;
  bool teacher_forced = true;
};

/// Full metric battery of `policy` against reference traces. Free-running
/// rollouts start from each reference's initial state.
MetricReport evaluate_policy(const Environment& env, Policy& policy, std::span<const Trace> references,
                             std::uint64_t seed);

/// Answers with the reference's own action at each of its states.
class ReplayPolicy : public Policy {
 public:
  explicit ReplayPolicy(const Trace& trace) : trace_(trace) {}
  Primitive type_action(const EnvState& s) override;
  std::size_t root_action(const EnvState& s) override;

 private:
  const TransitionRecord& find(const EnvState& s) const;
  const Trace& trace_;
};

}  // namespace interleave
