#include "interleave/environment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace interleave {

bool EnvState::all_completed() const {
  return std::all_of(completed.begin(), completed.end(), [](bool c) { return c; });
}

std::size_t TransitionRecord::instance() const {
  if (const auto* sel = std::get_if<Select>(&action)) return sel->instance;
  return *pre.active;
}

Primitive FlatPolicy::type_action(const EnvState& s) {
  return act(s).is_continue() ? Primitive::Continue : Primitive::Leave;
}

std::size_t FlatPolicy::root_action(const EnvState& s) {
  const FlatAction a = act(s);
  if (!a.target) throw EnvironmentError("flat policy returned continue at a root decision");
  return *a.target;
}

Environment::Environment(Scenario scenario, EnvOptions options)
    : scenario_(validate_scenario(std::move(scenario))), options_(std::move(options)) {
  type_of_.reserve(scenario_.instances.size());
  for (const auto& inst : scenario_.instances) type_of_.push_back(scenario_.type_index(inst.type_id));
  if (options_.perceived) validate_params(*options_.perceived, scenario_.type_ids());
}

EnvState Environment::reset(const EpisodeMode& mode, std::uint64_t seed) const {
  EnvState s;
  s.progress.reserve(num_instances());
  for (const auto& inst : scenario_.instances) s.progress.push_back(inst.start_state);
  s.completed.assign(num_instances(), false);
  if (mode.kind == EpisodeMode::Kind::Budget) {
    if (!(mode.budget_min > 0.0) || mode.budget_max < mode.budget_min) {
      throw ValidationError("budget must be positive");
    }
    if (mode.budget_max == mode.budget_min) {
      s.budget = mode.budget_min;
    } else {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> draw(mode.budget_min, mode.budget_max);
      s.budget = draw(rng);
    }
  }
  return s;
}

std::vector<std::size_t> Environment::available_root_actions(const EnvState& s) const {
  std::vector<std::size_t> out;
  if (s.active || s.all_completed()) return out;
  if (s.selections == 0 && scenario_.forced_start) {
    const auto forced = scenario_.instance_index(*scenario_.forced_start);
    if (!s.completed[forced]) return {forced};
  }
  for (std::size_t i = 0; i < num_instances(); ++i) {
    if (!s.completed[i] && s.just_left != i) out.push_back(i);
  }
  return out;
}

bool Environment::can_leave(const EnvState& s) const {
  if (!s.active) return false;
  for (std::size_t i = 0; i < num_instances(); ++i) {
    if (i != *s.active && !s.completed[i]) return true;
  }
  return false;
}

bool Environment::continue_fits(const EnvState& s) const {
  if (!s.budget || !s.active) return true;
  return s.clock + type_of(*s.active).dwell <= *s.budget + 1e-12;
}

bool Environment::is_terminal(const EnvState& s) const {
  if (s.truncated || s.all_completed()) return true;
  return s.budget && s.clock >= *s.budget;
}

double Environment::switch_cost(std::size_t instance, int s) const {
  const auto& type = type_of(instance);
  if (options_.perceived) return personalized_cost(*options_.perceived, type, s);
  return cost_at(type, s);
}

double Environment::selection_reward(const EnvState& s, std::size_t chosen) const {
  if (s.selections == 0 && options_.free_first_selection) return 0.0;
  return -switch_cost(chosen, s.progress[chosen]);
}

TransitionRecord Environment::step_type(const EnvState& s, Primitive a) const {
  if (!s.active) throw EnvironmentError("type-level step without an active instance");
  const std::size_t i = *s.active;
  if (s.completed[i]) throw EnvironmentError("type-level step on completed instance");
  const auto& type = type_of(i);
  const int state = s.progress[i];

  TransitionRecord rec{s, a, 0.0, 0.0, s, false};
  EnvState& post = rec.post;
  if (a == Primitive::Continue) {
    if (!continue_fits(s)) throw EnvironmentError("continue overshoots the time budget");
    rec.reward = reward_at(type, state);
    rec.duration = type.dwell;
    post.clock += type.dwell;
    post.progress[i] = state + 1;
    if (post.progress[i] == type.length) {
      post.completed[i] = true;
      post.active.reset();
      rec.exited = true;
    }
  } else {
    if (!can_leave(s)) throw EnvironmentError("leave with no other instance available");
    rec.reward = -switch_cost(i, state);
    post.active.reset();
    post.just_left = i;
    rec.exited = true;
  }
  return rec;
}

TransitionRecord Environment::step_root(const EnvState& s, std::size_t chosen) const {
  if (s.active) throw EnvironmentError("root selection while an instance is active");
  if (chosen >= num_instances()) throw EnvironmentError("unknown instance index " + std::to_string(chosen));
  const auto avail = available_root_actions(s);
  if (std::find(avail.begin(), avail.end(), chosen) == avail.end()) {
    throw EnvironmentError("instance '" + scenario_.instances[chosen].instance_id + "' is not available");
  }
  TransitionRecord rec{s, Select{chosen}, selection_reward(s, chosen), 0.0, s, false};
  rec.post.active = chosen;
  rec.post.just_left.reset();
  rec.post.selections += 1;
  return rec;
}

TransitionRecord Environment::step(const EnvState& s, const Action& a) const {
  if (const auto* sel = std::get_if<Select>(&a)) return step_root(s, sel->instance);
  return step_type(s, std::get<Primitive>(a));
}

std::vector<FlatAction> Environment::flat_actions(const EnvState& s) const {
  std::vector<FlatAction> out;
  if (s.active) {
    out.push_back(FlatAction::cont());
    for (std::size_t i = 0; i < num_instances(); ++i) {
      if (i != *s.active && !s.completed[i]) out.push_back(FlatAction::switch_to(i));
    }
  } else {
    for (std::size_t i : available_root_actions(s)) out.push_back(FlatAction::switch_to(i));
  }
  return out;
}

double FlatTransition::discount(double gamma_t, double gamma_r) const {
  double d = 1.0;
  for (const auto& rec : records) {
    d *= std::pow(gamma_t, rec.duration);
    if (rec.exited) d *= gamma_r;
  }
  return d;
}

FlatTransition flat_step(const Environment& env, const EnvState& s, const FlatAction& a) {
  FlatTransition out;
  if (s.active) {
    if (a.is_continue()) {
      out.records.push_back(env.step_type(s, Primitive::Continue));
    } else {
      if (*a.target == *s.active) throw EnvironmentError("switch to the active instance");
      out.records.push_back(env.step_type(s, Primitive::Leave));
      out.records.push_back(env.step_root(out.records.back().post, *a.target));
    }
  } else {
    if (a.is_continue()) throw EnvironmentError("continue without an active instance");
    out.records.push_back(env.step_root(s, *a.target));
  }
  for (const auto& rec : out.records) out.reward += rec.reward;
  return out;
}

std::size_t Environment::step_cap() const {
  std::size_t states = 0;
  for (std::size_t i = 0; i < num_instances(); ++i) states += static_cast<std::size_t>(length_of(i));
  // A uniformly random policy needs about 2n - 1 records per unit of work;
  // the factor 8 on top keeps the chance of hitting the cap negligible.
  const std::size_t n = num_instances();
  return 8 * (2 * n + 1) * (states + n) + 64;
}

Trace rollout(const Environment& env, Policy& policy, const EnvState& s0, std::uint64_t seed) {
  Trace trace;
  trace.scenario_id = env.scenario().scenario_id;
  trace.seed = seed;
  trace.initial = s0;
  for (std::size_t i = 0; i < env.num_instances(); ++i) {
    trace.instance_ids.push_back(env.scenario().instances[i].instance_id);
    trace.lengths.push_back(env.length_of(i));
  }
  EnvState s = s0;
  const std::size_t cap = env.step_cap();
  while (!env.is_terminal(s)) {
    if (trace.records.size() >= cap) {
      throw EnvironmentError("policy did not terminate within " + std::to_string(cap) + " steps");
    }
    const std::size_t step = trace.records.size();
    TransitionRecord rec;
    try {
      if (s.active) {
        const Primitive a = policy.type_action(s);
        if (a == Primitive::Continue && !env.continue_fits(s)) {
          // Refused continue: the episode ends at the current clock.
          trace.truncated = true;
          break;
        }
        rec = env.step_type(s, a);
      } else {
        rec = env.step_root(s, policy.root_action(s));
      }
    } catch (const EnvironmentError& e) {
      throw EnvironmentError("step " + std::to_string(step) + ": " + e.what());
    }
    trace.total_reward += rec.reward;
    s = rec.post;
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

void validate_trace(const Trace& trace) {
  double sum = 0.0;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& expected_pre = k == 0 ? trace.initial : trace.records[k - 1].post;
    if (!(trace.records[k].pre == expected_pre)) {
      throw ValidationError("trace chain broken at record " + std::to_string(k));
    }
    sum += trace.records[k].reward;
  }
  if (std::abs(sum - trace.total_reward) > 1e-9 * std::max(1.0, std::abs(sum))) {
    std::ostringstream msg;
    msg << "trace total_reward " << trace.total_reward << " != record sum " << sum;
    throw ValidationError(msg.str());
  }
}

std::vector<std::size_t> visit_sequence(const Trace& trace) {
  std::vector<std::size_t> seq;
  for (const auto& rec : trace.records) {
    if (!rec.is_root()) continue;
    const std::size_t i = rec.instance();
    if (seq.empty() || seq.back() != i) seq.push_back(i);
  }
  return seq;
}

double discounted_return(const Trace& trace, double gamma_t, double gamma_r) {
  double discount = 1.0;
  double total = 0.0;
  for (const auto& rec : trace.records) {
    total += discount * rec.reward;
    discount *= std::pow(gamma_t, rec.duration);
    if (rec.exited) discount *= gamma_r;
  }
  return total;
}

}  // namespace interleave
