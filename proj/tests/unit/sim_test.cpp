#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

using namespace fixtures;

namespace {

class ConstantController : public Controller {
 public:
  explicit ConstantController(Command c) : c_(c) {}
  void decide(const SimState&, std::span<const MalfunctionEvent>, std::span<Command> out) override {
    std::fill(out.begin(), out.end(), c_);
  }

 private:
  Command c_;
};

std::vector<Command> all(int m, Command c) { return std::vector<Command>(static_cast<std::size_t>(m), c); }

Cell where(const Environment& env, const SimState& st, int a) {
  return env.map().cell_of(st.agents[static_cast<std::size_t>(a)].cell);
}

}  // namespace

TEST_SUITE("simengine") {

TEST_CASE("free-flow arrival on a corridor") {
  for (int cmax = 1; cmax <= 4; ++cmax) {
    Environment env(make_instance(corridor(5), {train(0, {0, 0}, O::East, {4, 0}, cmax, 3, 30)}, 60));
    ConstantController go(Command::MoveForward);
    EpisodeOutcome out = run_episode(env, go, {});
    const AgentRuntime& ag = out.final_state.agents[0];
    REQUIRE(ag.status == AgentStatus::Done);
    CHECK(ag.arrival == 3 + 4 * cmax);
    CHECK(ag.arrival == env.free_flow_arrival(0));
    CHECK(ag.history.front().enter_t == 3);
    CHECK(ag.history.size() == 5);
  }
}

TEST_CASE("no entry before edt") {
  Environment env(make_instance(corridor(5), {train(0, {0, 0}, O::East, {4, 0}, 1, 5, 30)}, 60));
  SimState st = initial_state(env);
  for (int t = 0; t < 5; ++t) {
    step(env, st, all(1, Command::MoveForward));
    CHECK(st.agents[0].status == AgentStatus::OffMap);
  }
  step(env, st, all(1, Command::MoveForward));
  CHECK(st.agents[0].status == AgentStatus::OnMap);
}

TEST_CASE("head-on swap cancels both moves") {
  Environment env(make_instance(corridor(4), {train(0, {1, 0}, O::East, {3, 0}, 1, 0, 10),
                                              train(1, {2, 0}, O::West, {0, 0}, 1, 0, 10)},
                                30));
  SimState st = initial_state(env);
  step(env, st, all(2, Command::MoveForward));
  REQUIRE(st.count(AgentStatus::OnMap) == 2);
  for (int i = 0; i < 3; ++i) {
    step(env, st, all(2, Command::MoveForward));
    CHECK(where(env, st, 0) == Cell{1, 0});
    CHECK(where(env, st, 1) == Cell{2, 0});
  }
}

TEST_CASE("two movers into one cell both fail") {
  Environment env(make_instance(plus_map(), {train(0, {1, 2}, O::East, {4, 2}, 1, 0, 10),
                                             train(1, {2, 1}, O::South, {2, 4}, 1, 0, 10)},
                                30));
  SimState st = initial_state(env);
  step(env, st, all(2, Command::MoveForward));
  step(env, st, all(2, Command::MoveForward));
  CHECK(where(env, st, 0) == Cell{1, 2});
  CHECK(where(env, st, 1) == Cell{2, 1});
  step(env, st, std::vector<Command>{Command::MoveForward, Command::Stop});
  CHECK(where(env, st, 0) == Cell{2, 2});
}

TEST_CASE("a train follows a leaving train in the same step") {
  Environment env(make_instance(corridor(6), {train(0, {1, 0}, O::East, {5, 0}, 1, 0, 10),
                                              train(1, {0, 0}, O::East, {4, 0}, 1, 0, 10)},
                                30));
  SimState st = initial_state(env);
  step(env, st, all(2, Command::MoveForward));
  step(env, st, all(2, Command::MoveForward));
  CHECK(where(env, st, 0) == Cell{2, 0});
  CHECK(where(env, st, 1) == Cell{1, 0});
  // Blocked front train blocks the whole chain.
  step(env, st, std::vector<Command>{Command::Stop, Command::MoveForward});
  CHECK(where(env, st, 1) == Cell{1, 0});
  CHECK(st.agents[1].counter == 1);
}

TEST_CASE("entry loses to a train moving into the start cell") {
  Environment env(make_instance(corridor(5), {train(0, {0, 0}, O::East, {4, 0}, 1, 0, 10),
                                              train(1, {1, 0}, O::East, {4, 0}, 1, 1, 10)},
                                30));
  SimState st = initial_state(env);
  step(env, st, std::vector<Command>{Command::MoveForward, Command::Stop});
  step(env, st, all(2, Command::MoveForward));
  CHECK(where(env, st, 0) == Cell{1, 0});
  CHECK(st.agents[1].status == AgentStatus::OffMap);
}

TEST_CASE("malfunction holds the train, then it resumes") {
  Environment env(make_instance(corridor(5), {train(0, {0, 0}, O::East, {4, 0}, 1, 0, 10)}, 30));
  SimState st = initial_state(env, {{{0, 1, 3}}});
  step(env, st, all(1, Command::MoveForward));
  for (int i = 0; i < 3; ++i) {
    StepEvents ev = step(env, st, all(1, Command::MoveForward));
    CHECK(where(env, st, 0) == Cell{0, 0});
    CHECK(ev.onsets.size() == (i == 0 ? 1u : 0u));
  }
  CHECK(st.agents[0].malfunction_left == 0);
  step(env, st, all(1, Command::MoveForward));
  CHECK(where(env, st, 0) == Cell{1, 0});
}

TEST_CASE("malfunction freezes the speed counter") {
  Environment env(make_instance(corridor(5), {train(0, {0, 0}, O::East, {4, 0}, 3, 0, 30)}, 30));
  SimState st = initial_state(env, {{{0, 2, 4}}});
  step(env, st, all(1, Command::MoveForward));  // enter, counter 0
  step(env, st, all(1, Command::MoveForward));  // counter 1
  for (int i = 0; i < 4; ++i) step(env, st, all(1, Command::MoveForward));
  CHECK(st.agents[0].counter == 1);
  step(env, st, all(1, Command::MoveForward));
  step(env, st, all(1, Command::MoveForward));
  CHECK(where(env, st, 0) == Cell{1, 0});
  CHECK(st.t == 8);
}

TEST_CASE("turn commands follow the transition table") {
  RailMap map = two_route_map();
  const Transitions sw = map.at(Cell{1, 2});
  CHECK(resolve_heading(sw, O::East, Command::MoveForward) == O::East);
  CHECK(resolve_heading(sw, O::East, Command::MoveLeft) == O::North);
  CHECK_FALSE(resolve_heading(sw, O::East, Command::MoveRight));
  CHECK_FALSE(resolve_heading(sw, O::East, Command::Stop));
  const Transitions straight = map.at(Cell{3, 2});
  CHECK(resolve_heading(straight, O::East, Command::MoveLeft) == O::East);
  CHECK(command_towards(O::East, O::North) == Command::MoveLeft);
  CHECK(command_towards(O::East, O::South) == Command::MoveRight);
  CHECK(command_towards(O::East, O::East) == Command::MoveForward);
}

TEST_CASE("reward arithmetic") {
  CHECK(normalized_reward(0, 5, 100) == 1.0);
  CHECK(normalized_reward(10, 2, 100) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(normalized_reward(1000, 1, 100) == 0.0);
}

TEST_CASE("never-entered agent is charged tmax plus distance") {
  Environment env(make_instance(corridor(21), {train(0, {0, 0}, O::East, {20, 0}, 1, 0, 40)}, 100));
  REQUIRE(env.start_distance(0) == 20);
  EpisodeResult r = score(env, initial_state(env));
  REQUIRE(r.agents.size() == 1);
  CHECK(r.agents[0].act == 120);
  CHECK(r.agents[0].delay == 80);
  CHECK(r.reward == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.success == 0);
}

TEST_CASE("all arrivals on time give reward one") {
  Environment env(make_instance(corridor(5), {train(0, {0, 0}, O::East, {4, 0}, 1, 0, 4)}, 30));
  ConstantController go(Command::MoveForward);
  EpisodeOutcome out = run_episode(env, go, {});
  CHECK(out.result.reward == 1.0);
  CHECK(out.result.success_rate() == 1.0);
}

TEST_CASE("all-stop controller finishes nobody") {
  Environment env(generate_instance(level_preset(1), 2));
  ConstantController stop(Command::Stop);
  EpisodeOutcome out = run_episode(env, stop, {});
  CHECK(out.final_state.count(AgentStatus::Done) == 0);
  CHECK(out.final_state.t == env.tmax());
  for (int a = 0; a < env.agent_count(); ++a)
    CHECK(out.result.agents[static_cast<std::size_t>(a)].act == env.tmax() + env.start_distance(a));
}

TEST_CASE("horizon reached en route uses the current position") {
  Environment env(make_instance(corridor(10), {train(0, {0, 0}, O::East, {9, 0}, 1, 0, 5)}, 4));
  ConstantController go(Command::MoveForward);
  EpisodeOutcome out = run_episode(env, go, {});
  REQUIRE(out.final_state.agents[0].status == AgentStatus::OnMap);
  CHECK(where(env, out.final_state, 0) == Cell{3, 0});
  CHECK(out.result.agents[0].act == 4 + 6);
  CHECK(out.result.agents[0].delay == 5);
}

TEST_CASE("random commands keep every invariant") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Environment env(generate_instance(level_preset(2), seed));
    SimState st = initial_state(env, sample_malfunctions({0.02, 2, 8}, env.agent_count(), env.tmax(), seed));
    RandomController rc(seed);
    std::vector<Command> cmds(static_cast<std::size_t>(env.agent_count()));
    while (st.t < env.tmax()) {
      SimState before = st;
      std::fill(cmds.begin(), cmds.end(), Command::Stop);
      rc.decide(st, {}, cmds);
      step(env, st, cmds);
      auto v = step_violations(env, before, st);
      REQUIRE_MESSAGE(v.empty(), v.front());
    }
  }
}

TEST_CASE("identical inputs give identical logs and replay reproduces them") {
  Environment env(generate_instance(level_preset(1), 6));
  const auto schedule = sample_malfunctions({0.01, 3, 9}, env.agent_count(), env.tmax(), 6);
  std::ostringstream log1, log2, log3, cmds;
  RandomController a(1), b(1);
  EpisodeOptions o1;
  o1.trajectory = &log1;
  o1.commands = &cmds;
  EpisodeOutcome r1 = run_episode(env, a, schedule, o1);
  EpisodeOptions o2;
  o2.trajectory = &log2;
  run_episode(env, b, schedule, o2);
  CHECK(log1.str() == log2.str());
  std::istringstream in(cmds.str());
  ReplayController replay(in, env.agent_count());
  EpisodeOptions o3;
  o3.trajectory = &log3;
  EpisodeOutcome r3 = run_episode(env, replay, schedule, o3);
  CHECK(log1.str() == log3.str());
  CHECK(r1.result.total_delay == r3.result.total_delay);
  CHECK(log1.str().rfind("flatland-trajectory 1\nagents 7\n", 0) == 0);
}

TEST_CASE("controller failure aborts with the partial state") {
  struct Failing : Controller {
    void decide(const SimState& st, std::span<const MalfunctionEvent>, std::span<Command> out) override {
      if (st.t == 3) throw std::runtime_error("boom");
      std::fill(out.begin(), out.end(), Command::MoveForward);
    }
  } failing;
  Environment env(make_instance(corridor(8), {train(0, {0, 0}, O::East, {7, 0}, 1, 0, 10)}, 30));
  EpisodeOutcome out = run_episode(env, failing, {});
  CHECK(out.aborted);
  CHECK(out.error == "boom");
  CHECK(out.final_state.t == 3);
}

}  // TEST_SUITE
