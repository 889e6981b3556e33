#include "interleave/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace interleave {

namespace fs = std::filesystem;

std::string format_double(double v) {
  // nlohmann emits the shortest text that round-trips.
  return ordered_json(v).dump();
}

// ---------------------------------------------------------------------------
// JSON field access with path-qualified errors

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

const ordered_json& member(const ordered_json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where + "." + key, "missing");
  return *it;
}

double get_number(const ordered_json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int get_int(const ordered_json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

std::string get_string(const ordered_json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const ordered_json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected a boolean");
  return j.get<bool>();
}

std::vector<double> get_numbers(const ordered_json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(get_number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

double number_at(const ordered_json& j, const std::string& key, const std::string& where) {
  return get_number(member(j, key, where), where + "." + key);
}
int int_at(const ordered_json& j, const std::string& key, const std::string& where) {
  return get_int(member(j, key, where), where + "." + key);
}
std::string string_at(const ordered_json& j, const std::string& key, const std::string& where) {
  return get_string(member(j, key, where), where + "." + key);
}
bool bool_at(const ordered_json& j, const std::string& key, const std::string& where) {
  return get_bool(member(j, key, where), where + "." + key);
}

void check_version(const ordered_json& j, const std::string& where) {
  const int v = int_at(j, "format_version", where);
  if (v != kFormatVersion) fail(where + ".format_version", "unsupported version " + std::to_string(v));
}

}  // namespace

ordered_json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Scenarios

ordered_json scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["scenario_id"] = s.scenario_id;
  j["description"] = s.description;
  ordered_json mode;
  if (s.default_mode.kind == EpisodeMode::Kind::ToCompletion) {
    mode["kind"] = "to_completion";
  } else {
    mode["kind"] = "budget";
    mode["budget_min"] = s.default_mode.budget_min;
    mode["budget_max"] = s.default_mode.budget_max;
  }
  j["default_mode"] = mode;
  if (s.forced_start) j["forced_start"] = *s.forced_start;
  if (s.boundary_gamma_t) j["boundary_gamma_t"] = *s.boundary_gamma_t;
  j["task_types"] = ordered_json::array();
  for (const auto& t : s.task_types) {
    ordered_json tj;
    tj["type_id"] = t.type_id;
    tj["label"] = t.label;
    tj["length"] = t.length;
    tj["dwell"] = t.dwell;
    tj["rewards"] = t.rewards;
    tj["costs"] = t.costs;
    j["task_types"].push_back(tj);
  }
  j["instances"] = ordered_json::array();
  for (const auto& i : s.instances) {
    j["instances"].push_back({{"instance_id", i.instance_id}, {"type_id", i.type_id}, {"start_state", i.start_state}});
  }
  return j;
}

Scenario scenario_from_json(const ordered_json& j) {
  const std::string root = "scenario";
  check_version(j, root);
  Scenario s;
  s.scenario_id = string_at(j, "scenario_id", root);
  if (j.contains("description")) s.description = string_at(j, "description", root);

  const auto& mode = member(j, "default_mode", root);
  const std::string kind = string_at(mode, "kind", root + ".default_mode");
  if (kind == "to_completion") {
    s.default_mode = EpisodeMode::to_completion();
  } else if (kind == "budget") {
    s.default_mode = EpisodeMode::budget_range(number_at(mode, "budget_min", root + ".default_mode"),
                                               number_at(mode, "budget_max", root + ".default_mode"));
  } else {
    fail(root + ".default_mode.kind", "expected 'to_completion' or 'budget'");
  }
  if (j.contains("forced_start")) s.forced_start = string_at(j, "forced_start", root);
  if (j.contains("boundary_gamma_t")) s.boundary_gamma_t = number_at(j, "boundary_gamma_t", root);

  const auto& types = member(j, "task_types", root);
  if (!types.is_array()) fail(root + ".task_types", "expected an array");
  for (std::size_t k = 0; k < types.size(); ++k) {
    const std::string where = root + ".task_types[" + std::to_string(k) + "]";
    TaskTypeSpec t;
    t.type_id = string_at(types[k], "type_id", where);
    if (types[k].contains("label")) t.label = string_at(types[k], "label", where);
    t.length = int_at(types[k], "length", where);
    if (types[k].contains("dwell")) t.dwell = number_at(types[k], "dwell", where);
    t.rewards = get_numbers(member(types[k], "rewards", where), where + ".rewards");
    t.costs = get_numbers(member(types[k], "costs", where), where + ".costs");
    try {
      validate_task_type(t);
    } catch (const ValidationError& e) {
      fail(where, e.what());
    }
    s.task_types.push_back(std::move(t));
  }

  const auto& insts = member(j, "instances", root);
  if (!insts.is_array()) fail(root + ".instances", "expected an array");
  for (std::size_t k = 0; k < insts.size(); ++k) {
    const std::string where = root + ".instances[" + std::to_string(k) + "]";
    TaskInstanceSpec i;
    i.instance_id = string_at(insts[k], "instance_id", where);
    i.type_id = string_at(insts[k], "type_id", where);
    if (insts[k].contains("start_state")) i.start_state = int_at(insts[k], "start_state", where);
    s.instances.push_back(std::move(i));
  }
  return validate_scenario(std::move(s));
}

std::string dump_scenario(const Scenario& scenario) { return scenario_to_json(scenario).dump(2) + "\n"; }

Scenario load_scenario(const fs::path& path) {
  try {
    return scenario_from_json(read_json(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& scenario, const fs::path& path) {
  write_text(path, dump_scenario(validate_scenario(scenario)));
}

Scenario resolve_scenario(const std::string& name_or_path) {
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_scenario(name_or_path);
  return load_scenario(name_or_path);
}

// ---------------------------------------------------------------------------
// Traces

namespace {

ordered_json optional_index(const std::optional<std::size_t>& v) { return v ? ordered_json(*v) : ordered_json(); }

std::optional<std::size_t> index_from(const ordered_json& j, const std::string& where, std::size_t n) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number_unsigned() || j.get<std::size_t>() >= n) fail(where, "expected an instance index or null");
  return j.get<std::size_t>();
}

}  // namespace

ordered_json state_to_json(const EnvState& s) {
  ordered_json j;
  j["progress"] = s.progress;
  j["completed"] = s.completed;
  j["active"] = optional_index(s.active);
  j["just_left"] = optional_index(s.just_left);
  j["selections"] = s.selections;
  j["clock"] = s.clock;
  j["budget"] = s.budget ? ordered_json(*s.budget) : ordered_json();
  return j;
}

EnvState state_from_json(const ordered_json& j, const std::string& where) {
  EnvState s;
  const auto& progress = member(j, "progress", where);
  const auto& completed = member(j, "completed", where);
  if (!progress.is_array() || !completed.is_array() || progress.size() != completed.size()) {
    fail(where, "progress and completed must be arrays of equal length");
  }
  for (std::size_t k = 0; k < progress.size(); ++k) {
    s.progress.push_back(get_int(progress[k], where + ".progress[" + std::to_string(k) + "]"));
    s.completed.push_back(get_bool(completed[k], where + ".completed[" + std::to_string(k) + "]"));
  }
  const std::size_t n = s.progress.size();
  s.active = index_from(member(j, "active", where), where + ".active", n);
  s.just_left = index_from(member(j, "just_left", where), where + ".just_left", n);
  s.selections = int_at(j, "selections", where);
  s.clock = number_at(j, "clock", where);
  const auto& budget = member(j, "budget", where);
  if (!budget.is_null()) s.budget = get_number(budget, where + ".budget");
  return s;
}

namespace {

// Header fields that let a reader rebuild every state without the scenario.
struct TraceLayout {
  std::vector<std::string> instance_ids;
  std::vector<int> lengths;
};

const char* action_name(const Action& a) {
  if (std::holds_alternative<Select>(a)) return "select";
  return std::get<Primitive>(a) == Primitive::Continue ? "continue" : "leave";
}

struct Row {
  std::size_t step;
  double clock;
  std::string level;
  std::string instance;
  int state;
  std::string action;
  double reward;
  double duration;
  bool exited;
};

Row row_of(const TransitionRecord& rec, std::size_t step, const std::vector<std::string>& ids) {
  const std::size_t i = rec.instance();
  return {step,
          rec.pre.clock,
          rec.is_root() ? "root" : "type",
          ids.at(i),
          rec.pre.progress[i],
          action_name(rec.action),
          rec.reward + 0.0,  // no negative zero in files
          rec.duration,
          rec.exited};
}

std::vector<std::string> fallback_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

}  // namespace

namespace {

TraceLayout layout_from(const Trace& trace) {
  const std::size_t n = trace.initial.progress.size();
  if (trace.instance_ids.size() == n && trace.lengths.size() == n) return {trace.instance_ids, trace.lengths};
  // Hand-built traces without a layout: index names, lengths known only
  // for instances that completed.
  TraceLayout layout{fallback_ids(n), std::vector<int>(n, -1)};
  const EnvState& last = trace.final_state();
  for (std::size_t i = 0; i < n; ++i) {
    if (last.completed[i]) layout.lengths[i] = last.progress[i];
  }
  return layout;
}

std::string jsonl_with_layout(const Trace& trace, const TraceLayout& layout) {
  std::string out;
  ordered_json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = "header";
  header["scenario_id"] = trace.scenario_id;
  header["seed"] = trace.seed;
  header["total_reward"] = trace.total_reward;
  header["truncated"] = trace.truncated;
  header["records"] = trace.records.size();
  header["instances"] = layout.instance_ids;
  header["lengths"] = layout.lengths;
  header["initial"] = state_to_json(trace.initial);
  out += header.dump() + "\n";
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const Row r = row_of(trace.records[k], k, layout.instance_ids);
    ordered_json j;
    j["step"] = r.step;
    j["clock"] = r.clock;
    j["level"] = r.level;
    j["active_instance"] = r.instance;
    j["state"] = r.state;
    j["action"] = r.action;
    j["reward"] = r.reward;
    j["duration"] = r.duration;
    j["exited"] = r.exited;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace

std::string trace_to_jsonl(const Trace& trace) { return jsonl_with_layout(trace, layout_from(trace)); }

Trace trace_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ordered_json> lines;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      lines.push_back(ordered_json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  Trace trace;
  if (lines.empty()) return trace;

  const auto& h = lines.front();
  const std::string hw = "header";
  check_version(h, hw);
  if (string_at(h, "kind", hw) != "header") fail(hw + ".kind", "expected 'header'");
  trace.scenario_id = string_at(h, "scenario_id", hw);
  const auto& seed = member(h, "seed", hw);
  if (!seed.is_number_unsigned()) fail(hw + ".seed", "expected a non-negative integer");
  trace.seed = seed.get<std::uint64_t>();
  trace.total_reward = number_at(h, "total_reward", hw);
  trace.truncated = bool_at(h, "truncated", hw);
  trace.initial = state_from_json(member(h, "initial", hw), hw + ".initial");

  const std::size_t n = trace.initial.progress.size();
  const auto& ids_j = member(h, "instances", hw);
  const auto& lengths_j = member(h, "lengths", hw);
  if (!ids_j.is_array() || ids_j.size() != n || !lengths_j.is_array() || lengths_j.size() != n) {
    fail(hw, "instances and lengths must list every instance");
  }
  std::vector<std::string> ids;
  std::vector<int> lengths;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(get_string(ids_j[i], hw + ".instances[" + std::to_string(i) + "]"));
    lengths.push_back(get_int(lengths_j[i], hw + ".lengths[" + std::to_string(i) + "]"));
  }
  auto index_of = [&](const std::string& id, const std::string& where) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) fail(where, "unknown instance '" + id + "'");
    return static_cast<std::size_t>(it - ids.begin());
  };

  const std::size_t declared = static_cast<std::size_t>(int_at(h, "records", hw));
  if (declared != lines.size() - 1) {
    fail(hw + ".records", "declares " + std::to_string(declared) + " records, file has " +
                              std::to_string(lines.size() - 1));
  }

  EnvState s = trace.initial;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& j = lines[k];
    const std::string where = "record " + std::to_string(k - 1);
    if (static_cast<std::size_t>(int_at(j, "step", where)) != k - 1) fail(where + ".step", "out of sequence");
    if (number_at(j, "clock", where) != s.clock) fail(where + ".clock", "does not continue the previous record");
    const std::string level = string_at(j, "level", where);
    const std::string action = string_at(j, "action", where);
    const std::size_t i = index_of(string_at(j, "active_instance", where), where + ".active_instance");
    if (int_at(j, "state", where) != s.progress[i]) fail(where + ".state", "does not continue the previous record");

    TransitionRecord rec;
    rec.pre = s;
    rec.reward = number_at(j, "reward", where);
    rec.duration = number_at(j, "duration", where);
    rec.exited = bool_at(j, "exited", where);
    EnvState post = s;
    if (level == "root") {
      if (action != "select") fail(where + ".action", "root records must be 'select'");
      if (s.active || s.completed[i]) fail(where, "selection while an instance is active or of a completed instance");
      if (rec.duration != 0.0 || rec.exited) fail(where, "selections take no time and do not exit");
      rec.action = Select{i};
      post.active = i;
      post.just_left.reset();
      post.selections += 1;
    } else if (level == "type") {
      if (s.active != i) fail(where + ".active_instance", "is not the active instance");
      if (action == "continue") {
        if (!(rec.duration > 0.0)) fail(where + ".duration", "continue steps take positive time");
        rec.action = Primitive::Continue;
        post.clock += rec.duration;
        post.progress[i] += 1;
        const bool completes = lengths[i] >= 0 && post.progress[i] == lengths[i];
        if (completes) {
          post.completed[i] = true;
          post.active.reset();
        }
        if (rec.exited != completes) fail(where + ".exited", "inconsistent with the instance length");
      } else if (action == "leave") {
        if (rec.duration != 0.0 || !rec.exited) fail(where, "leave takes no time and exits");
        rec.action = Primitive::Leave;
        post.active.reset();
        post.just_left = i;
      } else {
        fail(where + ".action", "expected 'continue' or 'leave'");
      }
    } else {
      fail(where + ".level", "expected 'root' or 'type'");
    }
    rec.post = post;
    s = post;
    trace.records.push_back(std::move(rec));
  }
  trace.instance_ids = std::move(ids);
  trace.lengths = std::move(lengths);
  validate_trace(trace);
  return trace;
}

void write_trace(const Trace& trace, const fs::path& path) { write_text(path, trace_to_jsonl(trace)); }

Trace read_trace(const fs::path& path) {
  try {
    return trace_from_jsonl(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_trace_csv(const Trace& trace, const fs::path& path) {
  const TraceLayout layout = layout_from(trace);
  std::string out = "step,clock,level,active_instance,state,action,reward,duration,exited\n";
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const Row r = row_of(trace.records[k], k, layout.instance_ids);
    out += std::to_string(r.step) + "," + format_double(r.clock) + "," + r.level + "," + r.instance + "," +
           std::to_string(r.state) + "," + r.action + "," + format_double(r.reward) + "," +
           format_double(r.duration) + "," + (r.exited ? "true" : "false") + "\n";
  }
  write_text(path, out);
}

std::vector<Trace> read_trace_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Trace> out;
  for (const auto& f : files) out.push_back(read_trace(f));
  return out;
}

void check_trace_replays(const Environment& env, const Trace& trace) {
  if (trace.initial.progress.size() != env.num_instances()) {
    throw ValidationError("trace has " + std::to_string(trace.initial.progress.size()) + " instances, scenario has " +
                          std::to_string(env.num_instances()));
  }
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& rec = trace.records[k];
    TransitionRecord expected;
    try {
      expected = env.step(rec.pre, rec.action);
    } catch (const EnvironmentError& e) {
      throw ValidationError("record " + std::to_string(k) + ": " + e.what());
    }
    if (!(expected.post == rec.post) || expected.exited != rec.exited || expected.duration != rec.duration ||
        std::abs(expected.reward - rec.reward) > 1e-9) {
      throw ValidationError("record " + std::to_string(k) + " does not match the scenario dynamics");
    }
  }
}

// ---------------------------------------------------------------------------
// Policies

ordered_json config_to_json(const LearningConfig& c) {
  return {{"episodes", c.episodes},         {"alpha", c.alpha},     {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},   {"gamma_t", c.gamma_t}, {"gamma_r", c.gamma_r},
          {"seed", c.seed}};
}

LearningConfig config_from_json(const ordered_json& j) {
  const std::string w = "config";
  LearningConfig c;
  c.episodes = int_at(j, "episodes", w);
  c.alpha = number_at(j, "alpha", w);
  c.epsilon_start = number_at(j, "epsilon_start", w);
  c.epsilon_end = number_at(j, "epsilon_end", w);
  c.gamma_t = number_at(j, "gamma_t", w);
  c.gamma_r = number_at(j, "gamma_r", w);
  const auto& seed = member(j, "seed", w);
  if (!seed.is_number_unsigned()) fail(w + ".seed", "expected a non-negative integer");
  c.seed = seed.get<std::uint64_t>();
  validate_config(c);
  return c;
}

namespace {

void check_fingerprint(const ordered_json& j, const Scenario& scenario) {
  const std::string fp = string_at(j, "scenario_fingerprint", "policy");
  if (fp != scenario_fingerprint(scenario)) {
    throw ValidationError("policy was trained on a different scenario (fingerprint " + fp + ")");
  }
}

template <class Map>
auto sorted_rows(const Map& rows) {
  std::vector<const typename Map::value_type*> out;
  for (const auto& kv : rows) out.push_back(&kv);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->first < b->first; });
  return out;
}

std::vector<std::uint8_t> key_cells(const ordered_json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  std::vector<std::uint8_t> cells;
  for (const auto& c : j) {
    if (!c.is_number_unsigned() || c.get<unsigned>() > 255) fail(where, "key cells must be small integers");
    cells.push_back(static_cast<std::uint8_t>(c.get<unsigned>()));
  }
  return cells;
}

}  // namespace

ordered_json policy_to_json(const HierarchicalPolicy& p, const Scenario& scenario) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["agent"] = "hrl";
  j["scenario_id"] = scenario.scenario_id;
  j["scenario_fingerprint"] = p.scenario_fingerprint;
  j["config"] = config_to_json(p.config);
  j["types"] = ordered_json::array();
  for (std::size_t t = 0; t < p.types.size(); ++t) {
    ordered_json entries = ordered_json::array();
    for (int s = 0; s < p.types[t].length(); ++s) {
      for (Primitive a : {Primitive::Continue, Primitive::Leave}) {
        if (p.types[t].populated(s, a)) {
          entries.push_back({s, a == Primitive::Continue ? "continue" : "leave", p.types[t].q(s, a)});
        }
      }
    }
    j["types"].push_back({{"type_id", scenario.task_types[t].type_id}, {"entries", entries}});
  }
  j["root"] = ordered_json::array();
  for (const auto* kv : sorted_rows(p.root.rows())) {
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < kv->second.q.size(); ++i) {
      if (kv->second.set[i]) entries.push_back({i, kv->second.q[i]});
    }
    j["root"].push_back({{"key", kv->first.cells}, {"entries", entries}});
  }
  j["episode_returns"] = p.episode_returns;
  return j;
}

HierarchicalPolicy hierarchical_from_json(const ordered_json& j, const Scenario& scenario) {
  const std::string w = "policy";
  check_version(j, w);
  if (snapshot_kind(j) != "hrl") fail(w + ".agent", "expected 'hrl'");
  check_fingerprint(j, scenario);
  HierarchicalPolicy p;
  p.scenario_fingerprint = string_at(j, "scenario_fingerprint", w);
  p.config = config_from_json(member(j, "config", w));
  const auto& types = member(j, "types", w);
  if (!types.is_array() || types.size() != scenario.task_types.size()) fail(w + ".types", "one entry per task type");
  for (std::size_t t = 0; t < types.size(); ++t) {
    const std::string tw = w + ".types[" + std::to_string(t) + "]";
    if (string_at(types[t], "type_id", tw) != scenario.task_types[t].type_id) fail(tw + ".type_id", "order mismatch");
    TypeQTable table(scenario.task_types[t].length);
    for (const auto& e : member(types[t], "entries", tw)) {
      if (!e.is_array() || e.size() != 3) fail(tw + ".entries", "expected [state, action, value]");
      const int s = get_int(e[0], tw + ".entries.state");
      if (s < 0 || s >= table.length()) fail(tw + ".entries.state", "out of range");
      const std::string a = get_string(e[1], tw + ".entries.action");
      if (a != "continue" && a != "leave") fail(tw + ".entries.action", "expected 'continue' or 'leave'");
      table.set(s, a == "continue" ? Primitive::Continue : Primitive::Leave, get_number(e[2], tw + ".entries.value"));
    }
    p.types.push_back(std::move(table));
  }
  const std::size_t n = scenario.instances.size();
  p.root = RootQTable(n);
  for (const auto& row : member(j, "root", w)) {
    RootKey key{key_cells(member(row, "key", w + ".root"), w + ".root.key")};
    if (key.cells.size() != n) fail(w + ".root.key", "wrong length");
    for (const auto& e : member(row, "entries", w + ".root")) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || e[0].get<std::size_t>() >= n) {
        fail(w + ".root.entries", "expected [instance, value]");
      }
      p.root.set(key, e[0].get<std::size_t>(), get_number(e[1], w + ".root.entries.value"));
    }
  }
  p.episode_returns = get_numbers(member(j, "episode_returns", w), w + ".episode_returns");
  return p;
}

ordered_json policy_to_json(const FlatAgent& a, const Scenario& scenario) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["agent"] = "flat";
  j["scenario_id"] = scenario.scenario_id;
  j["scenario_fingerprint"] = a.scenario_fingerprint;
  j["config"] = config_to_json(a.config);
  j["rows"] = ordered_json::array();
  for (const auto* kv : sorted_rows(a.table.rows())) {
    ordered_json entries = ordered_json::array();
    for (std::size_t k = 0; k < kv->second.q.size(); ++k) {
      if (kv->second.set[k]) entries.push_back({k, kv->second.q[k]});
    }
    j["rows"].push_back({{"key", kv->first.cells}, {"entries", entries}});
  }
  j["episode_returns"] = a.episode_returns;
  return j;
}

FlatAgent flat_from_json(const ordered_json& j, const Scenario& scenario) {
  const std::string w = "policy";
  check_version(j, w);
  if (snapshot_kind(j) != "flat") fail(w + ".agent", "expected 'flat'");
  check_fingerprint(j, scenario);
  FlatAgent a;
  a.scenario_fingerprint = string_at(j, "scenario_fingerprint", w);
  a.config = config_from_json(member(j, "config", w));
  const std::size_t n = scenario.instances.size();
  a.table = FlatQTable(n);
  for (const auto& row : member(j, "rows", w)) {
    FlatKey key{key_cells(member(row, "key", w + ".rows"), w + ".rows.key")};
    if (key.cells.size() != n + 1) fail(w + ".rows.key", "wrong length");
    for (const auto& e : member(row, "entries", w + ".rows")) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || e[0].get<std::size_t>() > n) {
        fail(w + ".rows.entries", "expected [slot, value]");
      }
      const std::size_t slot = e[0].get<std::size_t>();
      const FlatAction act = slot == 0 ? FlatAction::cont() : FlatAction::switch_to(slot - 1);
      a.table.set(key, act, get_number(e[1], w + ".rows.entries.value"));
    }
  }
  a.episode_returns = get_numbers(member(j, "episode_returns", w), w + ".episode_returns");
  return a;
}

std::string snapshot_kind(const ordered_json& j) { return string_at(j, "agent", "policy"); }

// ---------------------------------------------------------------------------
// Reports

namespace {

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); }

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

ordered_json report_to_json(const MetricReport& r) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["teacher_forced"] = r.teacher_forced;
  j["reward"] = r.reward;
  j["next_task_accuracy"] = optional_number(r.next_task_accuracy);
  j["leave_accuracy"] = optional_number(r.leave_accuracy);
  j["continue_accuracy"] = optional_number(r.continue_accuracy);
  j["order_error"] = r.order_error;
  ordered_json vis, ref, inter;
  for (const auto& [k, v] : r.visitation) vis[k] = v;
  for (const auto& [k, v] : r.reference_visitation) ref[k] = v;
  for (const auto& [k, v] : r.intersections) inter[k] = v;
  j["visitation"] = vis;
  j["reference_visitation"] = ref;
  j["intersections"] = inter;
  j["pooled_intersection"] = r.pooled_intersection;
  return j;
}

std::string report_csv_header() {
  return "participant,model,teacher_forced,reward,next_task_accuracy,leave_accuracy,continue_accuracy,order_error,"
         "pooled_intersection\n";
}

std::string report_csv_row(const std::string& participant, const std::string& model, const MetricReport& r) {
  return participant + "," + model + "," + (r.teacher_forced ? "true" : "false") + "," + format_double(r.reward) +
         "," + optional_cell(r.next_task_accuracy) + "," + optional_cell(r.leave_accuracy) + "," +
         optional_cell(r.continue_accuracy) + "," + std::to_string(r.order_error) + "," +
         format_double(r.pooled_intersection) + "\n";
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "episode,mean,std\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    out += std::to_string(e) + "," + format_double(curve[e].mean) + "," + format_double(curve[e].std) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fits

ordered_json params_to_json(const ParamSet& p) {
  ordered_json j;
  j["gamma_t"] = p.gamma_t;
  j["c_p"] = p.c_p;
  ordered_json scales = ordered_json::object();
  for (const auto& [k, v] : p.s_pt) scales[k] = v;
  j["s_pt"] = scales;
  return j;
}

ParamSet params_from_json(const ordered_json& j, const std::string& where) {
  ParamSet p;
  p.gamma_t = number_at(j, "gamma_t", where);
  p.c_p = number_at(j, "c_p", where);
  const auto& scales = member(j, "s_pt", where);
  if (!scales.is_object()) throw ValidationError(where + ".s_pt: expected an object");
  for (const auto& [k, v] : scales.items()) p.s_pt[k] = get_number(v, where + ".s_pt." + k);
  validate_params(p);
  return p;
}

ordered_json fit_result_to_json(const FitResult& r) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["best_params"] = params_to_json(r.best_params);
  j["best_discrepancy"] = r.best_discrepancy;
  j["weight"] = r.weight;
  j["train_fraction"] = r.train_fraction;
  j["test_fraction"] = r.test_fraction;
  j["surrogate_fallback"] = r.surrogate_fallback;
  j["warnings"] = r.warnings;
  ordered_json history = ordered_json::array();
  for (const auto& rec : r.history) {
    ordered_json h;
    h["params"] = params_to_json(rec.params);
    h["discrepancy"] = rec.discrepancy;
    history.push_back(std::move(h));
  }
  j["history"] = std::move(history);
  return j;
}

std::string fit_csv_header() { return "participant,weight,best_discrepancy,train_fraction,test_fraction,gamma_t,c_p\n"; }

std::string fit_csv_row(const std::string& participant, const FitResult& r) {
  return participant + "," + format_double(r.weight) + "," + format_double(r.best_discrepancy) + "," +
         format_double(r.train_fraction) + "," + format_double(r.test_fraction) + "," +
         format_double(r.best_params.gamma_t) + "," + format_double(r.best_params.c_p) + "\n";
}

}  // namespace interleave
