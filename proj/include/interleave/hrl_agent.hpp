#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "interleave/environment.hpp"
#include "interleave/scenario.hpp"

namespace interleave {

struct LearningConfig {
  int episodes = 250;
  double alpha = 0.1;
  double epsilon_start = 0.3;
  double epsilon_end = 0.01;
  double gamma_t = 0.9;
  double gamma_r = 0.99;
  std::uint64_t seed = 0;

  bool operator==(const LearningConfig&) const = default;

  /// Linear decay from epsilon_start (first episode) to epsilon_end (last).
  double epsilon_at(int episode) const;
};

void validate_config(const LearningConfig& config);

/// Q-values of one task type over (state, primitive); shared by all
/// instances of the type.
class TypeQTable {
 public:
  TypeQTable() = default;
  explicit TypeQTable(int length) : q_(static_cast<std::size_t>(length)), set_(static_cast<std::size_t>(length)) {}

  int length() const { return static_cast<int>(q_.size()); }
  double q(int s, Primitive a) const { return q_[static_cast<std::size_t>(s)][index(a)]; }
  bool populated(int s, Primitive a) const { return set_[static_cast<std::size_t>(s)][index(a)]; }
  void set(int s, Primitive a, double value);
  /// Max over continue and, when allowed, leave.
  double value(int s, bool leave_allowed) const;
  std::size_t populated_count() const;

  bool operator==(const TypeQTable&) const = default;

 private:
  static std::size_t index(Primitive a) { return a == Primitive::Continue ? 0 : 1; }
  std::vector<std::array<double, 2>> q_;
  std::vector<std::array<bool, 2>> set_;
};

/// Root state key: per-instance progress (== length once completed).
struct RootKey {
  std::vector<std::uint8_t> cells;
  bool operator==(const RootKey&) const = default;
  bool operator<(const RootKey& o) const { return cells < o.cells; }
};

struct RootKeyHash {
  std::size_t operator()(const RootKey& key) const noexcept;
};

RootKey root_key(const EnvState& s);

/// Q-values over (root key, instance). Only visited keys are stored.
class RootQTable {
 public:
  struct Row {
    std::vector<double> q;
    std::vector<bool> set;
    bool operator==(const Row&) const = default;
  };

  RootQTable() = default;
  explicit RootQTable(std::size_t num_instances) : num_instances_(num_instances) {}

  std::size_t num_instances() const { return num_instances_; }
  /// 0 for unseen entries.
  double q(const RootKey& key, std::size_t instance) const;
  void set(const RootKey& key, std::size_t instance, double value);
  std::size_t populated_count() const;
  const std::unordered_map<RootKey, Row, RootKeyHash>& rows() const { return rows_; }

  bool operator==(const RootQTable&) const = default;

 private:
  std::size_t num_instances_ = 0;
  std::unordered_map<RootKey, Row, RootKeyHash> rows_;
};

struct HierarchicalPolicy {
  std::vector<TypeQTable> types;  // indexed like Scenario::task_types
  RootQTable root;
  LearningConfig config;          // gamma_t is the discount actually used
  std::vector<double> episode_returns;
  std::string scenario_fingerprint;

  int episodes_run() const { return static_cast<int>(episode_returns.size()); }
};

/// Empty tables shaped for the environment's scenario.
HierarchicalPolicy make_hierarchical_policy(const Environment& env, const LearningConfig& config);

/// max over available instances of Q_r at the root state reached by an
/// exit; 0 once every instance is completed.
double root_value(const RootQTable& root, const Environment& env, const EnvState& s);

/// Sample backup of a type-level record. Internal steps bootstrap on the
/// type table, exits on gamma_r times the root value of the post state.
void update_type_q(TypeQTable& table, const TransitionRecord& rec, const RootQTable& root, const Environment& env,
                   const LearningConfig& config);

/// Root backup for a selection: R_r plus the current subroutine estimate at
/// the resumed state. The subroutine estimate already contains the
/// discounted root continuation through its exit branch.
void update_root_q(RootQTable& root, const TransitionRecord& selection, const std::vector<TypeQTable>& types,
                   const Environment& env, const LearningConfig& config);

/// Discounted HO-MAXQ training with epsilon-greedy exploration at both
/// levels. The environment's perceived costs (if any) are the ones learned.
HierarchicalPolicy train(const Environment& env, const LearningConfig& config);

/// Convenience overload: builds the environment, taking gamma_t and
/// personalized costs from `params` when given.
HierarchicalPolicy train(const Scenario& scenario, const LearningConfig& config,
                         const std::optional<ParamSet>& params = std::nullopt, EnvOptions options = {});

Primitive greedy_type_action(const TypeQTable& table, int s, bool leave_allowed);
std::size_t greedy_root_action(const RootQTable& root, const Environment& env, const EnvState& s);

/// Greedy action at s: a Primitive when an instance is active, else a Select.
Action greedy_action(const HierarchicalPolicy& policy, const Environment& env, const EnvState& s);

/// (type-level entries, root-level entries) that were ever written.
std::pair<std::size_t, std::size_t> distinct_entries(const HierarchicalPolicy& policy);

/// Greedy rollout adapter.
class HierarchicalGreedy : public Policy {
 public:
  HierarchicalGreedy(const HierarchicalPolicy& policy, const Environment& env) : policy_(policy), env_(env) {}
  Primitive type_action(const EnvState& s) override;
  std::size_t root_action(const EnvState& s) override;

 private:
  const HierarchicalPolicy& policy_;
  const Environment& env_;
};

}  // namespace interleave
