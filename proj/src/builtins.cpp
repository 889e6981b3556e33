#include "interleave/io.hpp"

#include <algorithm>

namespace interleave {

namespace {

TaskTypeSpec make_type(std::string id, std::string label, std::vector<double> rewards, std::vector<double> costs,
                       double dwell = 1.0) {
  TaskTypeSpec t;
  t.type_id = std::move(id);
  t.label = std::move(label);
  t.length = static_cast<int>(rewards.size());
  t.rewards = std::move(rewards);
  t.costs = std::move(costs);
  t.dwell = dwell;
  return t;
}

std::vector<double> constant(int n, double v) { return std::vector<double>(static_cast<std::size_t>(n), v); }

Scenario toy_two_task() {
  Scenario s;
  s.scenario_id = "toy_two_task";
  s.description =
      "Writing vs browsing. Writing pays only on completion and is costly to leave except at the three chapter "
      "boundaries (states 0, 4, 8). Browsing pays 1 per state and is cheap to leave. Writing is the task at hand "
      "when the episode starts.";
  std::vector<double> writing_rewards = constant(12, 0.0);
  writing_rewards.back() = 30.0;
  s.task_types.push_back(make_type("writing", "Writing (chapters of four pages)", writing_rewards,
                                   {0, 3, 3, 3, 0, 3, 3, 3, 0, 3, 3, 3}));
  s.task_types.push_back(make_type("browsing", "Browsing", constant(12, 1.0), constant(12, 0.2)));
  s.instances = {{"W", "writing", 0}, {"B", "browsing", 0}};
  s.default_mode = EpisodeMode::to_completion();
  s.forced_start = "W";
  s.boundary_gamma_t = 0.7;
  return s;
}

Scenario comparison_ten_instance() {
  Scenario s;
  s.scenario_id = "comparison_ten_instance";
  s.description =
      "Ten instances over six task types with mixed reward shapes (terminal spike, constant, increasing, "
      "decreasing, front-loaded, staircase). The time budget covers roughly half of the total work, so the "
      "order of instances matters.";
  s.task_types.push_back(make_type("spike", "Terminal spike", {0, 0, 0, 0, 0, 8}, {0.5, 1, 1, 1, 1, 1}));
  s.task_types.push_back(make_type("flat", "Constant", constant(6, 1.0), constant(6, 0.2)));
  s.task_types.push_back(make_type("rising", "Increasing", {0.2, 0.5, 0.8, 1.2, 1.6, 2.0}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  s.task_types.push_back(make_type("falling", "Decreasing", {2.0, 1.6, 1.2, 0.8, 0.5, 0.2}, constant(6, 0.3)));
  s.task_types.push_back(make_type("front", "Front-loaded", {3.0, 0.5, 0.5, 0.5, 0.5, 0.5}, {0.1, 0.6, 0.6, 0.6, 0.6, 0.6}));
  s.task_types.push_back(make_type("stairs", "Staircase", {0.5, 0.5, 1.5, 0.5, 0.5, 1.5}, {0, 0.5, 0.5, 0, 0.5, 0.5}));
  s.instances = {{"t01", "spike", 0},   {"t02", "flat", 0},  {"t03", "rising", 0}, {"t04", "falling", 0},
                 {"t05", "front", 0},   {"t06", "stairs", 0}, {"t07", "spike", 0},  {"t08", "flat", 0},
                 {"t09", "rising", 0},  {"t10", "falling", 0}};
  s.default_mode = EpisodeMode::budget_range(25.0, 35.0);
  return s;
}

Scenario study_six_instance() {
  Scenario s;
  s.scenario_id = "study_six_instance";
  s.description =
      "Six instances of the four study task types under a random time budget. Reading pays per passage with the "
      "comprehension-relevant passage (state 4) weighted and the two questions at the end; visual matching pays "
      "per identification, rising with difficulty; math pays per equation with costs growing with the number of "
      "terms; typing pays per phrase at constant cost.";
  s.task_types.push_back(make_type("reading", "Reading (avalanche bulletin)", {0.5, 0.5, 0.5, 0.5, 2.0, 0.5, 1.5, 1.5},
                                   constant(8, 0.4)));
  s.task_types.push_back(make_type("visual_matching", "Visual matching", {1.0, 1.0, 1.4, 1.4, 1.8, 1.8},
                                   {0.2, 0.2, 0.3, 0.3, 0.4, 0.4}));
  s.task_types.push_back(make_type("math", "Math", {1.0, 1.0, 1.5, 1.5, 2.0, 2.0}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  s.task_types.push_back(make_type("typing", "Typing", constant(6, 1.2), constant(6, 0.2)));
  s.instances = {{"math_1", "math", 0},       {"reading_1", "reading", 0}, {"reading_2", "reading", 0},
                 {"typing_1", "typing", 0},   {"visual_1", "visual_matching", 0},
                 {"visual_2", "visual_matching", 0}};
  s.default_mode = EpisodeMode::budget_range(24.0, 32.0);
  return s;
}

Scenario mini_two_task() {
  Scenario s;
  s.scenario_id = "mini_two_task";
  s.description = "Small two-task problem for exact comparison against value iteration.";
  s.task_types.push_back(make_type("report", "Report", {0, 0, 0, 6}, {0, 1, 0, 1}));
  s.task_types.push_back(make_type("chat", "Chat", {1, 1, 1, 1}, constant(4, 0.1)));
  s.instances = {{"C", "chat", 0}, {"R", "report", 0}};
  s.default_mode = EpisodeMode::to_completion();
  return s;
}

Scenario mini_three_task() {
  Scenario s;
  s.scenario_id = "mini_three_task";
  s.description = "Small three-instance problem with two instances of one type, for exact comparison against "
                  "value iteration.";
  s.task_types.push_back(make_type("essay", "Essay", {0, 0, 0, 0, 5}, {0, 0.8, 0.8, 0, 0.8}));
  s.task_types.push_back(make_type("email", "Email", {1, 0.5, 0.5}, constant(3, 0.2)));
  s.instances = {{"E1", "email", 0}, {"E2", "email", 0}, {"S", "essay", 0}};
  s.default_mode = EpisodeMode::to_completion();
  return s;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"toy_two_task", "comparison_ten_instance", "study_six_instance", "mini_two_task", "mini_three_task"};
}

Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  if (name == "toy_two_task") {
    s = toy_two_task();
  } else if (name == "comparison_ten_instance") {
    s = comparison_ten_instance();
  } else if (name == "study_six_instance") {
    s = study_six_instance();
  } else if (name == "mini_two_task") {
    s = mini_two_task();
  } else if (name == "mini_three_task") {
    s = mini_three_task();
  } else {
    throw ValidationError("unknown builtin scenario '" + name + "'");
  }
  return validate_scenario(std::move(s));
}

}  // namespace interleave
