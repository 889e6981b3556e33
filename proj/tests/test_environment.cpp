#include <doctest.h>

#include <random>

#include "interleave/baselines.hpp"
#include "interleave/io.hpp"
#include "support.hpp"

using namespace interleave;

namespace {

Scenario w_and_b() {
  // W: chapter dips at 0 and 3, cost 2 mid-chapter. B: cheap and constant.
  return test::make_scenario({test::make_type("w", {0, 0, 0, 0, 9}, {0, 2, 2, 0, 2}),
                              test::make_type("b", {1, 1, 1}, {0.5, 0.5, 0.5})});
}

// Random legal hierarchical policy that continues right after every selection.
class SettledRandom : public Policy {
 public:
  SettledRandom(const Environment& env, std::uint64_t seed) : env_(env), rng_(seed) {}
  Primitive type_action(const EnvState& s) override {
    if (s.just_left || fresh_ || !env_.can_leave(s)) {
      fresh_ = false;
      return Primitive::Continue;
    }
    return std::bernoulli_distribution(0.3)(rng_) ? Primitive::Leave : Primitive::Continue;
  }
  std::size_t root_action(const EnvState& s) override {
    const auto avail = env_.available_root_actions(s);
    fresh_ = true;
    return avail[std::uniform_int_distribution<std::size_t>(0, avail.size() - 1)(rng_)];
  }

 private:
  const Environment& env_;
  std::mt19937_64 rng_;
  bool fresh_ = false;
};

}  // namespace

TEST_SUITE("environment") {
  TEST_CASE("reset") {
    const Environment env(builtin_scenario("toy_two_task"));
    const EnvState s = env.reset(EpisodeMode::to_completion(), 0);
    CHECK(s.progress == std::vector<int>{0, 0});
    CHECK_FALSE(s.active);
    CHECK(s.clock == 0.0);
    CHECK_FALSE(s.budget);
    CHECK(env.reset(EpisodeMode::budget(20), 0).budget == 20.0);
    Scenario empty = builtin_scenario("toy_two_task");
    empty.instances.clear();
    CHECK_THROWS_AS(validate_scenario(empty), ValidationError);
  }

  TEST_CASE("budget ranges are drawn per seed and reproducibly") {
    const Environment env(builtin_scenario("study_six_instance"));
    const EnvState a = env.reset(3), b = env.reset(3), c = env.reset(4);
    CHECK(a == b);
    CHECK(*a.budget >= 24.0);
    CHECK(*a.budget <= 32.0);
    CHECK(*a.budget != *c.budget);
  }

  TEST_CASE("available_root_actions") {
    const Environment env(w_and_b());
    EnvState s = env.reset(0);
    CHECK(env.available_root_actions(s) == std::vector<std::size_t>{0, 1});
    s.completed[env.scenario().instance_index("i_w")] = true;
    CHECK(env.available_root_actions(s) == std::vector<std::size_t>{env.scenario().instance_index("i_b")});
    s.completed.assign(2, true);
    CHECK(env.available_root_actions(s).empty());
    CHECK(env.is_terminal(s));

    const Environment toy(builtin_scenario("toy_two_task"));
    CHECK(toy.available_root_actions(toy.reset(0)) == std::vector<std::size_t>{toy.scenario().instance_index("W")});
  }

  TEST_CASE("step_type continue, leave and completion") {
    const Environment env(w_and_b());
    const std::size_t w = env.scenario().instance_index("i_w");
    EnvState s = env.step_root(env.reset(0), w).post;

    auto rec = env.step_type(s, Primitive::Continue);
    CHECK(rec.reward == 0.0);
    CHECK(rec.duration == 1.0);
    CHECK(rec.post.progress[w] == 1);
    CHECK_FALSE(rec.exited);
    CHECK(rec.post.clock == 1.0);

    rec = env.step_type(rec.post, Primitive::Leave);
    CHECK(rec.reward == -2.0);
    CHECK_FALSE(rec.post.active);
    CHECK(rec.exited);
    CHECK(rec.duration == 0.0);

    EnvState last = s;
    last.progress[w] = 4;
    rec = env.step_type(last, Primitive::Continue);
    CHECK(rec.reward == 9.0);
    CHECK(rec.post.completed[w]);
    CHECK(rec.exited);

    CHECK_THROWS_AS(env.step_type(env.reset(0), Primitive::Continue), EnvironmentError);
  }

  TEST_CASE("step_root penalties") {
    const Environment env(w_and_b());
    const std::size_t w = env.scenario().instance_index("i_w"), b = env.scenario().instance_index("i_b");
    const EnvState s0 = env.reset(0);
    auto first = env.step_root(s0, b);
    CHECK(first.reward == -0.5);
    CHECK(first.post.active == b);
    CHECK(first.duration == 0.0);

    EnvState s = env.step_root(s0, w).post;
    s = env.step_type(s, Primitive::Continue).post;
    s = env.step_type(s, Primitive::Leave).post;
    CHECK(env.step_root(s, b).reward == -0.5);
    CHECK_THROWS_AS(env.step_root(s, w), EnvironmentError);  // the instance just left

    EnvState done = s0;
    done.completed[w] = true;
    done.progress[w] = 5;
    CHECK_THROWS_AS(env.step_root(done, w), EnvironmentError);

    const Environment free_env(w_and_b(), EnvOptions{true, std::nullopt});
    CHECK(free_env.step_root(s0, b).reward == 0.0);
  }

  TEST_CASE("perceived costs replace the designed costs") {
    ParamSet p;
    p.gamma_t = 0.5;
    p.c_p = 0.1;
    p.s_pt = {{"w", 0.5}, {"b", 0.2}};
    const Environment env(w_and_b(), EnvOptions{false, p});
    const std::size_t w = env.scenario().instance_index("i_w");
    EnvState s = env.step_root(env.reset(0), w).post;
    s = env.step_type(s, Primitive::Continue).post;
    CHECK(env.step_type(s, Primitive::Leave).reward == doctest::Approx(-(0.1 + 0.5 * 2)));
  }

  TEST_CASE("rollout of an always-continue policy on a single task") {
    const Environment env(test::make_scenario({test::make_type("t", {1, 2, 3}, {0.7, 0, 0})}));
    test::ContinuePolicy pol(env);
    const Trace t = rollout(env, pol, env.reset(0), 0);
    CHECK(t.records.size() == 4);
    CHECK(t.total_reward == doctest::Approx(6 - 0.7));
    CHECK(env.is_terminal(t.final_state()));
    CHECK_NOTHROW(validate_trace(t));
  }

  TEST_CASE("rollout from a terminal state is empty") {
    const Environment env(w_and_b());
    EnvState s = env.reset(0);
    s.completed.assign(2, true);
    const Trace t = rollout(env, *std::make_unique<test::ContinuePolicy>(env), s, 0);
    CHECK(t.records.empty());
    CHECK(t.total_reward == 0.0);
  }

  TEST_CASE("illegal policy actions surface with the step index") {
    const Environment env(w_and_b());
    test::LambdaPolicy bad([](const EnvState&) { return Primitive::Continue; }, [](const EnvState&) { return 7; });
    CHECK_THROWS_WITH_AS(rollout(env, bad, env.reset(0), 0), doctest::Contains("step 0"), EnvironmentError);
  }

  TEST_CASE("budget truncation refuses an overshooting continue") {
    const Environment env(w_and_b());
    test::ContinuePolicy pol(env);
    const Trace t = rollout(env, pol, env.reset(EpisodeMode::budget(2.5), 0), 0);
    CHECK(t.truncated);
    CHECK(t.final_state().clock == 2.0);
    int continues = 0;
    for (const auto& r : t.records) continues += !r.is_root();
    CHECK(continues == 2);
  }

  TEST_CASE("rollouts are deterministic, conserve reward and only move forward") {
    const Scenario sc = builtin_scenario("study_six_instance");
    const Environment env(sc);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      SettledRandom p1(env, seed), p2(env, seed);
      const Trace a = rollout(env, p1, env.reset(seed), seed);
      const Trace b = rollout(env, p2, env.reset(seed), seed);
      CHECK(trace_to_jsonl(a) == trace_to_jsonl(b));

      // Conservation: rewards of continues minus every leave and resumption cost.
      double expected = 0.0;
      for (const auto& r : a.records) {
        const std::size_t i = r.instance();
        const int s = r.pre.progress[i];
        if (r.is_root()) expected -= cost_at(env.type_of(i), s);
        else if (std::get<Primitive>(r.action) == Primitive::Continue) expected += reward_at(env.type_of(i), s);
        else expected -= cost_at(env.type_of(i), s);
      }
      CHECK(a.total_reward == doctest::Approx(expected));

      std::size_t continues = 0;
      for (const auto& r : a.records) {
        continues += !r.is_root() && std::get<Primitive>(r.action) == Primitive::Continue;
        for (std::size_t i = 0; i < env.num_instances(); ++i) {
          CHECK(r.post.progress[i] >= r.pre.progress[i]);
          CHECK((!r.pre.completed[i] || r.post.completed[i]));
        }
      }
      // At most one root/leave pair per continue, plus the first selection.
      CHECK(a.records.size() <= 3 * continues + 1);
    }
  }

  TEST_CASE("flat steps and hierarchical steps agree on rewards") {
    const Environment env(builtin_scenario("study_six_instance"));
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      EnvState flat = env.reset(EpisodeMode::to_completion(), seed);
      EnvState hier = flat;
      double flat_total = 0.0, hier_total = 0.0;
      // First selection is a root step in both views.
      const auto first = env.available_root_actions(flat).front();
      auto r0 = env.step_root(flat, first);
      flat = hier = r0.post;
      flat_total = hier_total = r0.reward;
      while (!env.is_terminal(flat)) {
        const auto actions = env.flat_actions(flat);
        const FlatAction a = actions[std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng)];
        const FlatTransition ft = flat_step(env, flat, a);
        flat_total += ft.reward;
        flat = ft.post();
        if (a.is_continue()) {
          const auto rec = env.step_type(hier, Primitive::Continue);
          hier_total += rec.reward;
          hier = rec.post;
        } else {
          const auto leave = env.step_type(hier, Primitive::Leave);
          const auto sel = env.step_root(leave.post, *a.target);
          hier_total += leave.reward + sel.reward;
          hier = sel.post;
        }
        if (!hier.active && !env.is_terminal(hier)) {
          const auto sel = env.step_root(hier, env.available_root_actions(hier).front());
          hier_total += sel.reward;
          hier = sel.post;
          const auto fsel = flat_step(env, flat, FlatAction::switch_to(sel.instance()));
          flat_total += fsel.reward;
          flat = fsel.post();
        }
        REQUIRE(flat == hier);
        CHECK(flat_total == doctest::Approx(hier_total));
      }
    }
  }

  TEST_CASE("validate_trace rejects a broken chain") {
    const Environment env(w_and_b());
    test::ContinuePolicy pol(env);
    Trace t = rollout(env, pol, env.reset(0), 0);
    t.records[2].pre.clock += 1.0;
    CHECK_THROWS_AS(validate_trace(t), ValidationError);
  }

  TEST_CASE("visit_sequence collapses repeats") {
    const Environment env(w_and_b());
    test::ContinuePolicy pol(env);
    const Trace t = rollout(env, pol, env.reset(0), 0);
    CHECK(visit_sequence(t) == std::vector<std::size_t>{0, 1});
  }
}
