#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "interleave/environment.hpp"
#include "interleave/scenario.hpp"
#include "interleave/task_model.hpp"

namespace test {

using namespace interleave;

inline TaskTypeSpec make_type(const std::string& id, std::vector<double> rewards, std::vector<double> costs,
                              double dwell = 1.0) {
  TaskTypeSpec t;
  t.type_id = id;
  t.length = static_cast<int>(rewards.size());
  t.rewards = std::move(rewards);
  t.costs = std::move(costs);
  t.dwell = dwell;
  t.label = id;
  return t;
}

/// One instance per type, instance id = "i_" + type id.
inline Scenario make_scenario(std::vector<TaskTypeSpec> types, EpisodeMode mode = EpisodeMode::to_completion()) {
  Scenario s;
  s.scenario_id = "test";
  for (const auto& t : types) s.instances.push_back({"i_" + t.type_id, t.type_id, 0});
  s.task_types = std::move(types);
  s.default_mode = mode;
  return validate_scenario(s);
}

/// Policy built from two callbacks.
class LambdaPolicy : public Policy {
 public:
  LambdaPolicy(std::function<Primitive(const EnvState&)> type, std::function<std::size_t(const EnvState&)> root)
      : type_(std::move(type)), root_(std::move(root)) {}
  Primitive type_action(const EnvState& s) override { return type_(s); }
  std::size_t root_action(const EnvState& s) override { return root_(s); }

 private:
  std::function<Primitive(const EnvState&)> type_;
  std::function<std::size_t(const EnvState&)> root_;
};

/// Always continues; at the root picks the lowest available index.
class ContinuePolicy : public Policy {
 public:
  explicit ContinuePolicy(const Environment& env) : env_(env) {}
  Primitive type_action(const EnvState&) override { return Primitive::Continue; }
  std::size_t root_action(const EnvState& s) override { return env_.available_root_actions(s).front(); }

 private:
  const Environment& env_;
};

}  // namespace test
