#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "interleave/task_model.hpp"

namespace interleave {

/// How an episode ends. A budget range with min == max is a fixed budget;
/// otherwise the budget is drawn uniformly per episode from the seed.
struct EpisodeMode {
  enum class Kind { ToCompletion, Budget };
  Kind kind = Kind::ToCompletion;
  double budget_min = 0.0;
  double budget_max = 0.0;

  static EpisodeMode to_completion() { return {}; }
  static EpisodeMode budget(double b) { return {Kind::Budget, b, b}; }
  static EpisodeMode budget_range(double lo, double hi) { return {Kind::Budget, lo, hi}; }

  bool operator==(const EpisodeMode&) const = default;
};

/// A multi-task environment. Instances are kept sorted by instance_id so
/// that "lowest id" tie-breaks coincide with the lowest index.
struct Scenario {
  std::string scenario_id;
  std::vector<TaskTypeSpec> task_types;
  std::vector<TaskInstanceSpec> instances;
  EpisodeMode default_mode;
  /// Instance the first root selection is forced to, if any.
  std::optional<std::string> forced_start;
  /// Discount at which switches out of long tasks land on subtask boundaries.
  std::optional<double> boundary_gamma_t;
  /// Free text describing where the numeric constants come from.
  std::string description;

  bool operator==(const Scenario&) const = default;

  std::size_t type_index(const std::string& type_id) const;
  std::size_t instance_index(const std::string& instance_id) const;
  std::vector<std::string> type_ids() const;
};

/// Validates ids, references, start states and every task type; sorts
/// instances by id. Returns the canonical scenario.
Scenario validate_scenario(Scenario scenario);

/// Stable 64-bit FNV-1a digest of the scenario content, as 16 hex digits.
std::string scenario_fingerprint(const Scenario& scenario);

}  // namespace interleave
