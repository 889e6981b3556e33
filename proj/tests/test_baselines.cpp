#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "interleave/baselines.hpp"
#include "interleave/io.hpp"
#include "support.hpp"

using namespace interleave;

namespace {

Environment two_tasks(double b_next_reward) {
  return Environment(test::make_scenario({test::make_type("a", {0, 2, 0}, {2, 0, 0}),
                                          test::make_type("b", {0, b_next_reward, 0}, {0, 1, 0})}));
}

EnvState with_a_active(const Environment& env) {
  return env.step_root(env.reset(0), env.scenario().instance_index("i_a")).post;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("myopic switches when the net next reward is higher") {
    const Environment env = two_tasks(6);
    CHECK(myopic_action(env, with_a_active(env)) == FlatAction::switch_to(env.scenario().instance_index("i_b")));
  }

  TEST_CASE("myopic ties go to the ongoing task") {
    const Environment env = two_tasks(5);
    CHECK(myopic_action(env, with_a_active(env)).is_continue());
  }

  TEST_CASE("myopic with zero costs picks the largest next reward") {
    const Environment env(test::make_scenario({test::make_type("a", {0, 1, 0}, {0, 0, 0}),
                                               test::make_type("b", {0, 3, 0}, {0, 0, 0}),
                                               test::make_type("c", {0, 2, 0}, {0, 0, 0})}));
    CHECK(myopic_action(env, with_a_active(env)) == FlatAction::switch_to(env.scenario().instance_index("i_b")));
    CHECK(myopic_action(env, env.reset(0)) == FlatAction::switch_to(env.scenario().instance_index("i_b")));
  }

  TEST_CASE("myopic ignores perceived costs") {
    ParamSet p;
    p.gamma_t = 0.5;
    p.c_p = 0.29;
    p.s_pt = {{"a", 0.99}, {"b", 0.99}};
    const Environment plain = two_tasks(5.5);
    const Environment perceived(plain.scenario(), EnvOptions{false, p});
    const EnvState s = with_a_active(plain);
    CHECK(myopic_action(plain, s) == myopic_action(perceived, s));
  }

  TEST_CASE("myopic is memoryless and never picks a completed task") {
    const Environment env(builtin_scenario("study_six_instance"));
    MyopicPolicy pol(env);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Trace t = rollout(env, pol, env.reset(seed), seed);
      for (const auto& r : t.records) {
        if (r.pre.active) continue;
        const FlatAction a = myopic_action(env, r.pre);
        CHECK(a == myopic_action(env, r.pre));
        CHECK_FALSE(r.pre.completed[*a.target]);
      }
    }
  }

  TEST_CASE("random with a single option") {
    const Environment env(test::make_scenario({test::make_type("a", {1, 1}, {0, 0})}));
    std::mt19937_64 rng(1);
    const EnvState s = with_a_active(env);
    for (int k = 0; k < 20; ++k) CHECK(random_action(env, s, rng).is_continue());
  }

  TEST_CASE("random is uniform within three sigma") {
    const Environment env(builtin_scenario("study_six_instance"));
    const EnvState s = env.step_root(env.reset(0), 0).post;
    const auto options = env.flat_actions(s);
    const std::size_t k = options.size();
    REQUIRE(k == 6);
    std::mt19937_64 rng(2024);
    std::map<std::size_t, int> counts;
    const int n = 10000;
    for (int d = 0; d < n; ++d) {
      const FlatAction a = random_action(env, s, rng);
      counts[FlatQTable::slot(a)]++;
      CHECK(std::find(options.begin(), options.end(), a) != options.end());
    }
    const double p = 1.0 / static_cast<double>(k);
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(counts.size() == k);
    for (const auto& [slot, c] : counts) CHECK(std::abs(c - n * p) <= 3 * sigma);
  }

  TEST_CASE("random is reproducible and errors at terminal states") {
    const Environment env(builtin_scenario("study_six_instance"));
    RandomPolicy a(env, 5), b(env, 5);
    CHECK(trace_to_jsonl(rollout(env, a, env.reset(1), 1)) == trace_to_jsonl(rollout(env, b, env.reset(1), 1)));
    EnvState done = env.reset(0);
    done.completed.assign(env.num_instances(), true);
    std::mt19937_64 rng(0);
    CHECK_THROWS_AS(random_action(env, done, rng), EnvironmentError);
  }
}
