#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "interleave/scenario.hpp"
#include "interleave/task_model.hpp"

namespace interleave {

/// Raised when a policy or caller drives the environment into an illegal step.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Primitive { Continue, Leave };

/// Root-level action: resume the given instance (index into Scenario::instances).
struct Select {
  std::size_t instance = 0;
  bool operator==(const Select&) const = default;
};

using Action = std::variant<Primitive, Select>;

/// Root-level snapshot. `progress[i] == length` once instance i is completed.
struct EnvState {
  std::vector<int> progress;
  std::vector<bool> completed;
  std::optional<std::size_t> active;
  /// Instance left by the most recent leave; cleared by the next selection.
  std::optional<std::size_t> just_left;
  int selections = 0;
  double clock = 0.0;
  std::optional<double> budget;
  /// Set when a continue was refused because it would overshoot the budget.
  bool truncated = false;

  bool operator==(const EnvState&) const = default;

  bool all_completed() const;
};

struct TransitionRecord {
  EnvState pre;
  Action action;
  double reward = 0.0;
  double duration = 0.0;
  EnvState post;
  /// True when a type-level step returned control to the root.
  bool exited = false;

  bool is_root() const { return std::holds_alternative<Select>(action); }
  /// Chosen instance for root records, active instance for type records.
  std::size_t instance() const;
};

struct Trace {
  std::string scenario_id;
  std::uint64_t seed = 0;
  EnvState initial;
  std::vector<TransitionRecord> records;
  double total_reward = 0.0;
  bool truncated = false;
  /// Instance ids and lengths in index order, so a stored trace can be read
  /// back without its scenario.
  std::vector<std::string> instance_ids;
  std::vector<int> lengths;

  const EnvState& final_state() const { return records.empty() ? initial : records.back().post; }
};

struct EnvOptions {
  /// The first selection of an episode is free instead of paying R_r.
  bool free_first_selection = false;
  /// When set, personalized costs c_P + s_PT c_T replace c_T everywhere.
  std::optional<ParamSet> perceived;
};

/// Action source for rollouts. `type_action` is queried while an instance is
/// active, `root_action` when none is.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Primitive type_action(const EnvState& s) = 0;
  virtual std::size_t root_action(const EnvState& s) = 0;
};

/// Action of a single-level (flat) agent: continue the active instance or
/// switch to another one. A switch folds leave + select into one decision.
struct FlatAction {
  std::optional<std::size_t> target;  // empty = continue

  static FlatAction cont() { return {}; }
  static FlatAction switch_to(std::size_t i) { return {i}; }
  bool is_continue() const { return !target.has_value(); }
  bool operator==(const FlatAction&) const = default;
};

/// Policy that decides with flat actions. At a root state left by a leave,
/// `act` must return the switch target (the just-left instance counts as the
/// ongoing task there).
class FlatPolicy : public Policy {
 public:
  virtual FlatAction act(const EnvState& s) = 0;
  Primitive type_action(const EnvState& s) override;
  std::size_t root_action(const EnvState& s) override;
};

/// Two-level semi-Markov environment over a validated scenario. Stepping is
/// pure: a state goes in, a transition record comes out.
class Environment {
 public:
  explicit Environment(Scenario scenario, EnvOptions options = {});

  const Scenario& scenario() const { return scenario_; }
  const EnvOptions& options() const { return options_; }
  std::size_t num_instances() const { return scenario_.instances.size(); }
  const TaskTypeSpec& type_of(std::size_t instance) const { return scenario_.task_types[type_of_[instance]]; }
  std::size_t type_index_of(std::size_t instance) const { return type_of_[instance]; }
  int length_of(std::size_t instance) const { return type_of(instance).length; }

  EnvState reset(const EpisodeMode& mode, std::uint64_t seed) const;
  EnvState reset(std::uint64_t seed) const { return reset(scenario_.default_mode, seed); }

  std::vector<std::size_t> available_root_actions(const EnvState& s) const;
  /// Leave requires another non-completed instance to switch to.
  bool can_leave(const EnvState& s) const;
  bool continue_fits(const EnvState& s) const;
  bool is_terminal(const EnvState& s) const;

  TransitionRecord step_type(const EnvState& s, Primitive a) const;
  TransitionRecord step_root(const EnvState& s, std::size_t chosen) const;
  TransitionRecord step(const EnvState& s, const Action& a) const;

  /// Switch cost of instance i at state s (personalized when configured).
  double switch_cost(std::size_t instance, int s) const;
  /// R_r for selecting `chosen` from root state s.
  double selection_reward(const EnvState& s, std::size_t chosen) const;

  /// Flat actions available at s (continue first, then switches by index).
  std::vector<FlatAction> flat_actions(const EnvState& s) const;

  /// Upper bound on records of any terminating rollout of a sane policy.
  std::size_t step_cap() const;

 private:
  Scenario scenario_;
  EnvOptions options_;
  std::vector<std::size_t> type_of_;
};

/// Outcome of one flat decision: one record (continue, selection) or two
/// (leave followed by selection).
struct FlatTransition {
  std::vector<TransitionRecord> records;
  double reward = 0.0;
  /// gamma_t^duration times gamma_r if a subroutine exit happened.
  double discount(double gamma_t, double gamma_r) const;
  const EnvState& post() const { return records.back().post; }
};

FlatTransition flat_step(const Environment& env, const EnvState& s, const FlatAction& a);

/// Drives `policy` from `s0` until terminal. A refused continue in budget
/// mode truncates the episode without a record.
Trace rollout(const Environment& env, Policy& policy, const EnvState& s0, std::uint64_t seed);

/// Checks chaining (post of k == pre of k+1) and the reward sum.
void validate_trace(const Trace& trace);

/// Visit order: selected instances with consecutive duplicates collapsed.
std::vector<std::size_t> visit_sequence(const Trace& trace);

/// Return under the SMDP objective shared by all agents: each record's
/// reward is weighted by the running discount, which shrinks by
/// gamma_t^duration per step and by gamma_r at every subroutine exit.
double discounted_return(const Trace& trace, double gamma_t, double gamma_r);

}  // namespace interleave
