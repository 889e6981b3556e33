#include "interleave/baselines.hpp"

#include <algorithm>
#include <limits>

namespace interleave {

namespace {

int successor(const TaskTypeSpec& type, int s) { return std::min(s + 1, type.length - 1); }

}  // namespace

FlatAction myopic_action(const Environment& env, const EnvState& s) {
  const std::optional<std::size_t> ongoing = s.active ? s.active : s.just_left;
  const double leave_cost = ongoing ? cost_at(env.type_of(*ongoing), s.progress[*ongoing]) : 0.0;

  std::optional<std::size_t> best;
  double best_v = -std::numeric_limits<double>::infinity();
  if (s.active) {
    const auto& type = env.type_of(*s.active);
    best_v = reward_at(type, successor(type, s.progress[*s.active]));
  }
  const std::vector<std::size_t> candidates = [&] {
    if (!s.active) return env.available_root_actions(s);
    std::vector<std::size_t> out;
    for (const auto& a : env.flat_actions(s)) {
      if (a.target) out.push_back(*a.target);
    }
    return out;
  }();
  for (std::size_t j : candidates) {
    const auto& type = env.type_of(j);
    const int next = successor(type, s.progress[j]);
    const double v = reward_at(type, next) - (cost_at(type, next) + leave_cost);
    if (v > best_v) {
      best_v = v;
      best = j;
    }
  }
  if (!best) {
    if (s.active) return FlatAction::cont();
    throw EnvironmentError("myopic policy queried at a terminal state");
  }
  return FlatAction::switch_to(*best);
}

FlatAction random_action(const Environment& env, const EnvState& s, std::mt19937_64& rng) {
  const auto acts = env.flat_actions(s);
  if (acts.empty()) throw EnvironmentError("random policy queried at a terminal state");
  return acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)];
}

}  // namespace interleave
