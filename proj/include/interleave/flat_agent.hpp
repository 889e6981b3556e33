#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "interleave/environment.hpp"
#include "interleave/hrl_agent.hpp"
#include "interleave/kernels.hpp"

namespace interleave {

/// Joint state key of the flat agent: active instance (+1, 0 = none)
/// followed by the per-instance progress.
struct FlatKey {
  std::vector<std::uint8_t> cells;
  bool operator==(const FlatKey&) const = default;
  bool operator<(const FlatKey& o) const { return cells < o.cells; }
};

struct FlatKeyHash {
  std::size_t operator()(const FlatKey& key) const noexcept;
};

FlatKey flat_key(const EnvState& s);

/// Q over (joint state, flat action). Slot 0 is continue, slot 1 + i is
/// switch_to(i).
class FlatQTable {
 public:
  struct Row {
    std::vector<double> q;
    std::vector<bool> set;
    bool operator==(const Row&) const = default;
  };

  FlatQTable() = default;
  explicit FlatQTable(std::size_t num_instances) : num_instances_(num_instances) {}

  static std::size_t slot(const FlatAction& a) { return a.target ? *a.target + 1 : 0; }

  std::size_t num_instances() const { return num_instances_; }
  double q(const FlatKey& key, const FlatAction& a) const;
  void set(const FlatKey& key, const FlatAction& a, double value);
  std::size_t populated_count() const;
  const std::unordered_map<FlatKey, Row, FlatKeyHash>& rows() const { return rows_; }

  bool operator==(const FlatQTable&) const = default;

 private:
  std::size_t num_instances_ = 0;
  std::unordered_map<FlatKey, Row, FlatKeyHash> rows_;
};

struct FlatAgent {
  FlatQTable table;
  LearningConfig config;
  std::vector<double> episode_returns;
  std::string scenario_fingerprint;
};

/// Epsilon-greedy SMDP Q-learning over joint states, with the same reward
/// and discount semantics as the hierarchical agent.
FlatAgent train_flat(const Environment& env, const LearningConfig& config);
FlatAgent train_flat(const Scenario& scenario, const LearningConfig& config,
                     const std::optional<ParamSet>& params = std::nullopt, EnvOptions options = {});

/// Argmax with continue preferred on ties, then the lowest instance index.
FlatAction greedy_flat(const FlatQTable& table, const Environment& env, const EnvState& s);

class FlatGreedy : public FlatPolicy {
 public:
  FlatGreedy(const FlatQTable& table, const Environment& env) : table_(table), env_(env) {}
  FlatAction act(const EnvState& s) override { return greedy_flat(table_, env_, s); }

 private:
  const FlatQTable& table_;
  const Environment& env_;
};

struct ValueIterationOptions {
  std::size_t state_cap = 1'000'000;
  double tolerance = 1e-12;
  int max_sweeps = 1'000'000;
  bool parallel = true;
};

/// Exact optimal values of the joint SMDP (to-completion semantics, the
/// budget is ignored). Decision nodes mirror the hierarchical environment:
/// type nodes offer continue/leave, root nodes offer selections.
class ValueIterationResult {
 public:
  std::size_t num_states() const { return actions_.size(); }
  /// Sup-norm change of each sweep, in order.
  const std::vector<double>& sweep_residuals() const { return residuals_; }
  /// max_n |T V - V|(n) for the returned values.
  double bellman_residual() const { return bellman_residual_; }

  bool contains(const EnvState& s) const;
  double value(const EnvState& s) const;
  /// Action values at s in node order (continue before leave, selections by index).
  std::vector<std::pair<Action, double>> q_values(const EnvState& s) const;
  /// Greedy action with the hierarchical tie rules.
  Action greedy(const EnvState& s) const;

 private:
  friend ValueIterationResult value_iteration(const Environment&, double, double, const ValueIterationOptions&);
  std::size_t node_of(const EnvState& s) const;

  std::unordered_map<FlatKey, std::size_t, FlatKeyHash> index_;
  std::vector<std::vector<Action>> actions_;
  kernels::BellmanGraph graph_;
  std::vector<double> values_;
  std::vector<double> residuals_;
  double bellman_residual_ = 0.0;
};

ValueIterationResult value_iteration(const Environment& env, double gamma_t, double gamma_r,
                                     const ValueIterationOptions& options = {});

class ValueIterationGreedy : public Policy {
 public:
  explicit ValueIterationGreedy(const ValueIterationResult& vi) : vi_(vi) {}
  Primitive type_action(const EnvState& s) override { return std::get<Primitive>(vi_.greedy(s)); }
  std::size_t root_action(const EnvState& s) override { return std::get<Select>(vi_.greedy(s)).instance; }

 private:
  const ValueIterationResult& vi_;
};

}  // namespace interleave
