#include "interleave/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <set>
#include <sstream>

namespace interleave {

std::size_t Scenario::type_index(const std::string& type_id) const {
  for (std::size_t i = 0; i < task_types.size(); ++i) {
    if (task_types[i].type_id == type_id) return i;
  }
  throw ValidationError("unknown task type '" + type_id + "'");
}

std::size_t Scenario::instance_index(const std::string& instance_id) const {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].instance_id == instance_id) return i;
  }
  throw ValidationError("unknown instance '" + instance_id + "'");
}

std::vector<std::string> Scenario::type_ids() const {
  std::vector<std::string> ids;
  ids.reserve(task_types.size());
  for (const auto& t : task_types) ids.push_back(t.type_id);
  return ids;
}

Scenario validate_scenario(Scenario scenario) {
  if (scenario.instances.empty()) throw ValidationError("scenario '" + scenario.scenario_id + "' has no instances");
  if (scenario.instances.size() > 250) throw ValidationError("too many instances (max 250)");

  std::set<std::string> type_ids;
  for (const auto& t : scenario.task_types) {
    validate_task_type(t);
    if (t.length > 250) throw ValidationError("type '" + t.type_id + "': length above 250");
    if (!type_ids.insert(t.type_id).second) throw ValidationError("duplicate type id '" + t.type_id + "'");
  }

  std::set<std::string> instance_ids;
  for (const auto& inst : scenario.instances) {
    if (!instance_ids.insert(inst.instance_id).second) {
      throw ValidationError("duplicate instance id '" + inst.instance_id + "'");
    }
    if (!type_ids.contains(inst.type_id)) {
      throw ValidationError("instance '" + inst.instance_id + "' references undeclared type '" + inst.type_id + "'");
    }
    const auto& type = scenario.task_types[scenario.type_index(inst.type_id)];
    if (inst.start_state < 0 || inst.start_state >= type.length) {
      throw ValidationError("instance '" + inst.instance_id + "': start_state out of range");
    }
  }
  std::sort(scenario.instances.begin(), scenario.instances.end(),
            [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });

  if (scenario.forced_start && !instance_ids.contains(*scenario.forced_start)) {
    throw ValidationError("forced_start references unknown instance '" + *scenario.forced_start + "'");
  }
  const auto& mode = scenario.default_mode;
  if (mode.kind == EpisodeMode::Kind::Budget) {
    if (!(mode.budget_min > 0.0) || !(mode.budget_max >= mode.budget_min) || !std::isfinite(mode.budget_max)) {
      throw ValidationError("budget range must satisfy 0 < min <= max");
    }
  }
  if (scenario.boundary_gamma_t && !(*scenario.boundary_gamma_t > 0.0 && *scenario.boundary_gamma_t < 1.0)) {
    throw ValidationError("boundary_gamma_t must lie in (0, 1)");
  }
  return scenario;
}

std::string scenario_fingerprint(const Scenario& scenario) {
  std::ostringstream text;
  text << std::setprecision(17) << scenario.scenario_id << '|';
  for (const auto& t : scenario.task_types) {
    text << t.type_id << ':' << t.length << ':' << t.dwell << ':';
    for (double r : t.rewards) text << r << ',';
    text << ':';
    for (double c : t.costs) text << c << ',';
    text << '|';
  }
  for (const auto& i : scenario.instances) text << i.instance_id << ':' << i.type_id << ':' << i.start_state << '|';
  const auto& m = scenario.default_mode;
  text << static_cast<int>(m.kind) << ':' << m.budget_min << ':' << m.budget_max << '|' << scenario.forced_start.value_or("");

  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text.str()) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << hash;
  return hex.str();
}

}  // namespace interleave
