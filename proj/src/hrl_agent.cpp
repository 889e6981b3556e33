#include "interleave/hrl_agent.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace interleave {

double LearningConfig::epsilon_at(int episode) const {
  if (episodes <= 1) return epsilon_start;
  const double frac = static_cast<double>(episode) / static_cast<double>(episodes - 1);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

void validate_config(const LearningConfig& c) {
  if (c.episodes < 1) throw ValidationError("episodes must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  if (!(c.epsilon_start >= 0.0 && c.epsilon_start <= 1.0) || !(c.epsilon_end >= 0.0 && c.epsilon_end <= 1.0)) {
    throw ValidationError("epsilon rates must lie in [0, 1]");
  }
  if (!(c.gamma_t >= 0.0 && c.gamma_t <= 1.0)) throw ValidationError("gamma_t must lie in [0, 1]");
  if (!(c.gamma_r >= 0.0 && c.gamma_r <= 1.0)) throw ValidationError("gamma_r must lie in [0, 1]");
}

void TypeQTable::set(int s, Primitive a, double value) {
  const auto i = static_cast<std::size_t>(s);
  q_[i][index(a)] = value;
  set_[i][index(a)] = true;
}

double TypeQTable::value(int s, bool leave_allowed) const {
  const double cont = q(s, Primitive::Continue);
  return leave_allowed ? std::max(cont, q(s, Primitive::Leave)) : cont;
}

std::size_t TypeQTable::populated_count() const {
  std::size_t n = 0;
  for (const auto& row : set_) n += static_cast<std::size_t>(row[0]) + static_cast<std::size_t>(row[1]);
  return n;
}

std::size_t RootKeyHash::operator()(const RootKey& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t c : key.cells) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

RootKey root_key(const EnvState& s) {
  RootKey key;
  key.cells.reserve(s.progress.size());
  for (int p : s.progress) key.cells.push_back(static_cast<std::uint8_t>(p));
  return key;
}

double RootQTable::q(const RootKey& key, std::size_t instance) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? 0.0 : it->second.q[instance];
}

void RootQTable::set(const RootKey& key, std::size_t instance, double value) {
  auto [it, inserted] = rows_.try_emplace(key);
  if (inserted) {
    it->second.q.assign(num_instances_, 0.0);
    it->second.set.assign(num_instances_, false);
  }
  it->second.q[instance] = value;
  it->second.set[instance] = true;
}

std::size_t RootQTable::populated_count() const {
  std::size_t n = 0;
  for (const auto& [key, row] : rows_) {
    for (bool b : row.set) n += b ? 1 : 0;
  }
  return n;
}

HierarchicalPolicy make_hierarchical_policy(const Environment& env, const LearningConfig& config) {
  HierarchicalPolicy policy;
  for (const auto& t : env.scenario().task_types) policy.types.emplace_back(t.length);
  policy.root = RootQTable(env.num_instances());
  policy.config = config;
  policy.scenario_fingerprint = scenario_fingerprint(env.scenario());
  return policy;
}

double root_value(const RootQTable& root, const Environment& env, const EnvState& s) {
  if (s.all_completed()) return 0.0;
  const auto avail = env.available_root_actions(s);
  if (avail.empty()) return 0.0;
  const RootKey key = root_key(s);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j : avail) best = std::max(best, root.q(key, j));
  return best;
}

namespace {

void check_finite(double v, const char* where, const EnvState& s) {
  if (std::isfinite(v)) return;
  std::ostringstream msg;
  msg << "non-finite Q target in " << where << " at clock " << s.clock << ", progress [";
  for (int p : s.progress) msg << ' ' << p;
  msg << " ]";
  throw std::runtime_error(msg.str());
}

}  // namespace

void update_type_q(TypeQTable& table, const TransitionRecord& rec, const RootQTable& root, const Environment& env,
                   const LearningConfig& config) {
  const std::size_t i = *rec.pre.active;
  const int s = rec.pre.progress[i];
  const Primitive a = std::get<Primitive>(rec.action);

  double bootstrap = 0.0;
  if (rec.exited) {
    bootstrap = config.gamma_r * root_value(root, env, rec.post);
  } else {
    bootstrap = table.value(rec.post.progress[i], env.can_leave(rec.post));
  }
  const double target = rec.reward + std::pow(config.gamma_t, rec.duration) * bootstrap;
  check_finite(target, "type backup", rec.pre);
  table.set(s, a, (1.0 - config.alpha) * table.q(s, a) + config.alpha * target);
}

void update_root_q(RootQTable& root, const TransitionRecord& selection, const std::vector<TypeQTable>& types,
                   const Environment& env, const LearningConfig& config) {
  const std::size_t j = selection.instance();
  const int z = selection.post.progress[j];
  const double sub = types[env.type_index_of(j)].value(z, env.can_leave(selection.post));
  const double target = selection.reward + sub;
  check_finite(target, "root backup", selection.pre);
  const RootKey key = root_key(selection.pre);
  root.set(key, j, (1.0 - config.alpha) * root.q(key, j) + config.alpha * target);
}

Primitive greedy_type_action(const TypeQTable& table, int s, bool leave_allowed) {
  if (leave_allowed && table.q(s, Primitive::Leave) > table.q(s, Primitive::Continue)) return Primitive::Leave;
  return Primitive::Continue;
}

std::size_t greedy_root_action(const RootQTable& root, const Environment& env, const EnvState& s) {
  const auto avail = env.available_root_actions(s);
  if (avail.empty()) throw EnvironmentError("no root action available");
  const RootKey key = root_key(s);
  std::size_t best = avail.front();
  double best_q = root.q(key, best);
  for (std::size_t j : avail) {
    const double q = root.q(key, j);
    if (q > best_q) {
      best = j;
      best_q = q;
    }
  }
  return best;
}

Action greedy_action(const HierarchicalPolicy& policy, const Environment& env, const EnvState& s) {
  if (s.active) {
    const std::size_t i = *s.active;
    return greedy_type_action(policy.types[env.type_index_of(i)], s.progress[i], env.can_leave(s));
  }
  return Select{greedy_root_action(policy.root, env, s)};
}

HierarchicalPolicy train(const Environment& env, const LearningConfig& config) {
  validate_config(config);
  HierarchicalPolicy policy = make_hierarchical_policy(env, config);
  policy.episode_returns.reserve(static_cast<std::size_t>(config.episodes));

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t cap = 100 * env.step_cap();

  for (int episode = 0; episode < config.episodes; ++episode) {
    const double epsilon = config.epsilon_at(episode);
    EnvState s = env.reset(rng());
    std::optional<TransitionRecord> selection;
    double episode_return = 0.0;
    std::size_t steps = 0;

    while (!env.is_terminal(s)) {
      if (++steps > cap) throw std::runtime_error("training episode exceeded step cap");
      if (!s.active) {
        const auto avail = env.available_root_actions(s);
        std::size_t j = 0;
        if (unit(rng) < epsilon) {
          j = avail[std::uniform_int_distribution<std::size_t>(0, avail.size() - 1)(rng)];
        } else {
          j = greedy_root_action(policy.root, env, s);
        }
        selection = env.step_root(s, j);
        episode_return += selection->reward;
        s = selection->post;
        continue;
      }

      const std::size_t i = *s.active;
      TypeQTable& table = policy.types[env.type_index_of(i)];
      const bool leave_ok = env.can_leave(s);
      Primitive a = Primitive::Continue;
      if (unit(rng) < epsilon) {
        a = (leave_ok && unit(rng) < 0.5) ? Primitive::Leave : Primitive::Continue;
      } else {
        a = greedy_type_action(table, s.progress[i], leave_ok);
      }
      if (a == Primitive::Continue && !env.continue_fits(s)) break;

      const TransitionRecord rec = env.step_type(s, a);
      episode_return += rec.reward;
      update_type_q(table, rec, policy.root, env, config);
      if (rec.exited && selection) {
        update_root_q(policy.root, *selection, policy.types, env, config);
        selection.reset();
      }
      s = rec.post;
    }
    if (selection) update_root_q(policy.root, *selection, policy.types, env, config);
    policy.episode_returns.push_back(episode_return);
  }
  return policy;
}

HierarchicalPolicy train(const Scenario& scenario, const LearningConfig& config, const std::optional<ParamSet>& params,
                         EnvOptions options) {
  LearningConfig used = config;
  if (params) {
    used.gamma_t = params->gamma_t;
    options.perceived = params;
  }
  const Environment env(scenario, std::move(options));
  return train(env, used);
}

std::pair<std::size_t, std::size_t> distinct_entries(const HierarchicalPolicy& policy) {
  std::size_t type_entries = 0;
  for (const auto& t : policy.types) type_entries += t.populated_count();
  return {type_entries, policy.root.populated_count()};
}

Primitive HierarchicalGreedy::type_action(const EnvState& s) {
  return std::get<Primitive>(greedy_action(policy_, env_, s));
}

std::size_t HierarchicalGreedy::root_action(const EnvState& s) {
  return std::get<Select>(greedy_action(policy_, env_, s)).instance;
}

}  // namespace interleave
