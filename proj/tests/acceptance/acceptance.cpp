// Acceptance suite: one PASS/FAIL line per criterion with the measured numbers.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "flatland/bench.hpp"
#include "flatland/executor.hpp"
#include "flatland/lns.hpp"

using namespace fixtures;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

std::string num(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

Solution solved(const Environment& env, int lns_iterations) {
  SolverConfig sc;
  sc.lns_iterations = lns_iterations;
  sc.parallel = false;
  return solve(env, sc, 0).solution;
}

// Vertex and swap conflicts in executed trajectories.
int trajectory_conflicts(const Environment& env, const SimState& final_state) {
  const int end = final_state.t;
  std::map<std::pair<int, int>, int> at;         // (cell, t) -> agent
  std::map<std::tuple<int, int, int>, int> moves;  // (from, to, t) -> agent
  int conflicts = 0;
  for (int a = 0; a < env.agent_count(); ++a) {
    const auto& h = final_state.agents[static_cast<std::size_t>(a)].history;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const int leave = h[k].leave_t < 0 ? end : h[k].leave_t;
      for (int t = h[k].enter_t; t < leave; ++t)
        if (!at.emplace(std::pair{h[k].cell, t}, a).second) ++conflicts;
      if (k > 0) moves[{h[k - 1].cell, h[k].cell, h[k].enter_t}] = a;
    }
  }
  for (const auto& [key, a] : moves) {
    const auto& [from, to, t] = key;
    auto it = moves.find({to, from, t});
    if (from < to && it != moves.end() && it->second != a) ++conflicts;
  }
  return conflicts;
}

Verdict sipp_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  int cases = 0, reachable = 0, mismatches = 0;
  for (; cases < 200; ++cases) {
    OracleCase c = oracle_case(rng);
    DistanceField f(c.map, c.goal);
    SafeIntervalTable table = build_table(c.map.cell_count(), c.reserved);
    PlanRequest req = request_for(c.map, f, 0, c.start, c.cmax, c.edt, c.horizon);
    PlanResult res = plan(c.map, table, req);
    auto oracle = time_expanded_arrival(c.map, c.reserved, c.start, c.goal, c.cmax, c.edt, c.horizon);
    if (res.path.has_value() != oracle.has_value()) {
      ++mismatches;
      continue;
    }
    if (!oracle) continue;
    ++reachable;
    if (res.path->planned_arrival() != *oracle || !path_problems(c.map, table, *res.path, req).empty()) ++mismatches;
  }
  const double ms = ms_since(t0);
  return {mismatches == 0 && ms < 60000,
          std::to_string(cases) + " cases (" + std::to_string(reachable) + " reachable), " + std::to_string(mismatches) +
              " mismatches, " + num(ms / 1000, 3) + " s (limit 60 s)"};
}

Verdict simulator_fuzz() {
  long long steps = 0, violations = 0;
  std::string first;
  for (int i = 0; i < 50; ++i) {
    const int level = 1 + i % 5;
    Environment env(generate_instance(level_preset(level), 1000 + static_cast<std::uint64_t>(i)));
    SimState st = initial_state(env, sample_malfunctions({0.02, 1, 6}, env.agent_count(), 2000, static_cast<std::uint64_t>(i)));
    RandomController rc(static_cast<std::uint64_t>(i));
    std::vector<Command> cmds(static_cast<std::size_t>(env.agent_count()));
    for (int s = 0; s < 2000; ++s, ++steps) {
      SimState before = st;
      std::fill(cmds.begin(), cmds.end(), Command::Stop);
      rc.decide(st, {}, cmds);
      step(env, st, cmds);
      auto v = step_violations(env, before, st);
      violations += static_cast<long long>(v.size());
      if (!v.empty() && first.empty()) first = v.front();
    }
  }
  return {violations == 0 && steps == 100000,
          std::to_string(steps) + " steps over 50 instances, " + std::to_string(violations) + " violations" +
              (first.empty() ? "" : " (first: " + first + ")")};
}

Verdict replay_fidelity() {
  int reward_mismatch = 0, act_mismatch = 0, agents = 0;
  double max_gap = 0;
  for (int i = 0; i < 50; ++i) {
    Instance inst = generate_instance(level_preset(1 + i % 3), 2000 + static_cast<std::uint64_t>(i));
    inst.malfunction.rate = 0;
    Environment env(std::move(inst));
    Solution sol = solved(env, 20);
    ControllerReport rep = run_controller(env, sol, {20, 20, ExecutionMode::McpOnly, 0, 8}, {});
    const EpisodeResult& r = rep.outcome.result;
    if (rep.outcome.aborted || r.reward != sol.reward_estimate) ++reward_mismatch;
    max_gap = std::max(max_gap, std::abs(r.reward - sol.reward_estimate));
    for (int a = 0; a < env.agent_count(); ++a, ++agents)
      if (r.agents[static_cast<std::size_t>(a)].act != predicted_act(env, a, sol.paths[static_cast<std::size_t>(a)]))
        ++act_mismatch;
  }
  return {reward_mismatch == 0 && act_mismatch == 0,
          "50 episodes, " + std::to_string(reward_mismatch) + " reward mismatches (max gap " + num(max_gap, 17) + "), " +
              std::to_string(act_mismatch) + "/" + std::to_string(agents) + " ACT mismatches"};
}

Verdict pp_completeness() {
  int complete = 0;
  double worst = 0;
  std::string failed;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Instance inst = generate_instance(level_preset(1), seed);
    inst.malfunction.rate = 0;
    Environment env(std::move(inst));
    SolverConfig sc;
    SolveOutcome so = solve(env, sc, 0);
    worst = std::max(worst, so.planning_ms);
    if (so.solution.success == env.agent_count() && so.planning_ms < 1000)
      ++complete;
    else
      failed += " " + std::to_string(seed);
  }
  return {complete == 20, std::to_string(complete) + "/20 level-1 instances fully on time, slowest " + num(worst) +
                              " ms (limit 1000 ms)" + (failed.empty() ? "" : "; failed seeds:" + failed)};
}

Verdict lns_monotonicity() {
  long long violations = 0, total_improvement = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Environment env(congested(seed));
    LnsConfig lc;
    lc.iteration_limit = 500;
    lc.seed = seed;
    Lns lns(env, prioritized_plan(env, order(env, PriorityStrategy::ByIndex)).solution, lc);
    long long prev = make_solution(env, lns.incumbent().paths).total_delay;
    const long long start = prev;
    for (int it = 0; it < 500; ++it) {
      lns.iterate();
      Solution recomputed = make_solution(env, lns.incumbent().paths);
      if (recomputed.total_delay > prev || !find_conflicts(env, recomputed).empty()) ++violations;
      prev = recomputed.total_delay;
    }
    total_improvement += start - prev;
  }
  Environment env(bottleneck());
  LnsConfig lc;
  lc.iteration_limit = 50;
  Lns lns(env, prioritized_plan(env, order(env, PriorityStrategy::ByIndex)).solution, lc);
  const long long before = lns.incumbent().total_delay;
  int first_drop = -1;
  for (int it = 0; it < 50 && first_drop < 0; ++it) {
    lns.iterate();
    if (lns.incumbent().total_delay < before) first_drop = it + 1;
  }
  return {violations == 0 && first_drop > 0,
          "10 fixtures x 500 iterations, " + std::to_string(violations) + " violations, total improvement " +
              std::to_string(total_improvement) + "; bottleneck " + std::to_string(before) + " -> " +
              std::to_string(lns.incumbent().total_delay) + " at iteration " + std::to_string(first_drop) +
              " (limit 50)"};
}

Verdict portfolio_dominance() {
  int worse = 0;
  for (int i = 0; i < 30; ++i) {
    Environment env(generate_instance(level_preset(1 + i % 3), 3000 + static_cast<std::uint64_t>(i)));
    PortfolioResult pr = portfolio_plan(env, kDefaultPortfolio, std::nullopt, false);
    long long best = std::numeric_limits<long long>::max();
    for (PriorityStrategy s : kDefaultPortfolio) {
      const auto ord = order(env, s);
      best = std::min(best, prioritized_plan(env, ord).solution.total_delay);
    }
    if (pr.solution.total_delay > best) ++worse;
  }
  return {worse == 0, "30 instances, " + std::to_string(worse) + " where the portfolio is worse than a single strategy"};
}

Verdict slack_order() {
  double by_index = 0, by_slack = 0;
  for (int i = 0; i < 30; ++i) {
    GeneratorConfig c = level_preset(2);
    c.slack_margin_fraction = 0.1;
    c.departure_window = 0.2;
    c.speed_proportions = {0.25, 0.25, 0.25, 0.25};
    c.malfunction.rate = 0;
    Environment env(generate_instance(c, 4000 + static_cast<std::uint64_t>(i)));
    by_index += static_cast<double>(prioritized_plan(env, order(env, PriorityStrategy::ByIndex)).solution.total_delay);
    by_slack += static_cast<double>(prioritized_plan(env, order(env, PriorityStrategy::BySlack)).solution.total_delay);
  }
  by_index /= 30;
  by_slack /= 30;
  return {by_slack <= by_index, "30 instances, mean total delay BySlack " + num(by_slack) + " vs ByIndex " + num(by_index)};
}

// Trains the planner leaves unplanned are never dispatched, so arrivals are
// counted over trains with a planned path; the unplanned count is reported.
Verdict mcp_robustness() {
  int arrived = 0, routed = 0, unplanned = 0, conflicts = 0, aborted = 0, malfunctions = 0, stray = 0;
  for (int i = 0; i < 20; ++i) {
    Instance inst = generate_instance(level_preset(1 + i % 4), 5000 + static_cast<std::uint64_t>(i));
    inst.malfunction.rate = 0.005;
    Environment env(std::move(inst));
    Solution sol = solved(env, 20);
    const int horizon = 4 * env.tmax();
    const auto schedule = sample_malfunctions(env.instance().malfunction, env.agent_count(), horizon, static_cast<std::uint64_t>(i));
    for (const auto& a : schedule) malfunctions += static_cast<int>(a.size());
    EpisodeOptions opts;
    opts.horizon = horizon;
    ControllerReport rep = run_controller(env, sol, {20, 20, ExecutionMode::McpOnly, 0, 8}, schedule, opts);
    if (rep.outcome.aborted) ++aborted;
    for (int a = 0; a < env.agent_count(); ++a) {
      const bool done = rep.outcome.final_state.agents[static_cast<std::size_t>(a)].status == AgentStatus::Done;
      if (sol.paths[static_cast<std::size_t>(a)]) {
        ++routed;
        arrived += done;
      } else {
        ++unplanned;
        stray += rep.outcome.final_state.agents[static_cast<std::size_t>(a)].status != AgentStatus::OffMap;
      }
    }
    conflicts += trajectory_conflicts(env, rep.outcome.final_state);
  }
  return {arrived == routed && conflicts == 0 && aborted == 0 && stray == 0,
          "20 episodes, " + std::to_string(malfunctions) + " malfunctions, arrivals " + std::to_string(arrived) + "/" +
              std::to_string(routed) + " planned trains (" + std::to_string(unplanned) +
              " left unplanned by the planner, never dispatched), " + std::to_string(conflicts) + " conflicts, " +
              std::to_string(aborted) + " aborted"};
}

Verdict lns_pr_benefit() {
  std::map<ExecutionMode, double> mean;
  const std::vector<ExecutionMode> modes = {ExecutionMode::McpOnly, ExecutionMode::LnsPr, ExecutionMode::PerMalfunctionPr};
  int episodes = 0;
  for (int i = 0; i < 10; ++i) {
    Instance inst = generate_instance(level_preset(2), 6000 + static_cast<std::uint64_t>(i));
    inst.malfunction.rate = 0.005;
    Environment env(std::move(inst));
    Solution sol = solved(env, -1);
    for (std::uint64_t seed = 0; seed < 3; ++seed, ++episodes) {
      const auto schedule = sample_malfunctions(env.instance().malfunction, env.agent_count(), env.tmax(), seed);
      for (ExecutionMode m : modes) {
        ControllerReport rep = run_controller(env, sol, {20, 20, m, seed, 8}, schedule);
        mean[m] += static_cast<double>(rep.outcome.result.total_delay);
      }
    }
  }
  for (auto& [m, v] : mean) v /= episodes;
  const double mcp = mean[ExecutionMode::McpOnly], lns = mean[ExecutionMode::LnsPr],
               per = mean[ExecutionMode::PerMalfunctionPr];
  return {lns <= 1.02 * mcp && lns <= 1.05 * per,
          std::to_string(episodes) + " episodes, mean total delay lns-pr " + num(lns) + ", mcp-only " + num(mcp) +
              " (limit x1.02 = " + num(1.02 * mcp) + "), per-malfunction-pr " + num(per) + " (limit x1.05 = " +
              num(1.05 * per) + ")"};
}

Verdict scale_smoke() {
  Environment env(generate_instance(level_preset(15), 0));
  SolverConfig sc;
  sc.lns_iterations = 50;
  SolveOutcome so = solve(env, sc, 0);
  const auto schedule = sample_malfunctions(env.instance().malfunction, env.agent_count(), env.tmax(), 0);
  const auto t0 = Clock::now();
  ControllerReport rep = run_controller(env, so.solution, {20, 20, ExecutionMode::LnsPr, 0, 8}, schedule);
  const double episode_ms = ms_since(t0);
  return {so.planning_ms < 60000 && episode_ms < 120000 && !rep.outcome.aborted,
          std::to_string(env.agent_count()) + " agents on " + std::to_string(env.map().width()) + "x" +
              std::to_string(env.map().height()) + ": planning " + num(so.planning_ms / 1000) +
              " s (limit 60 s, success " + std::to_string(so.solution.success) + "), lns-pr episode " +
              num(episode_ms / 1000) + " s (limit 120 s, " + std::to_string(rep.replans) + " replans, success " +
              std::to_string(rep.outcome.result.success) + ")"};
}

Verdict scoring_arithmetic() {
  int wrong = 0;
  wrong += compute_tmax(30, 30, 7, 2) != 508;
  wrong += compute_tmax(158, 158, 425, 41) != 2610;
  wrong += normalized_reward(10, 2, 100) != 1.0 - 10.0 / 200.0;
  Environment env(make_instance(corridor(21), {train(0, {0, 0}, O::East, {20, 0}, 1, 0, 40)}, 100));
  EpisodeResult r = score(env, initial_state(env));
  wrong += r.agents[0].act != 120 || r.agents[0].delay != 80 || r.reward != 1.0 - 80.0 / 100.0;
  return {wrong == 0, "tmax 508 and 2610, reward 0.95 and 0.2 with ACT 120 / delay 80; " + std::to_string(wrong) + " mismatches"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"SIPP oracle equivalence", sipp_oracle},
      {"simulator safety fuzz", simulator_fuzz},
      {"replay fidelity", replay_fidelity},
      {"prioritized planning completeness", pp_completeness},
      {"LNS monotonicity", lns_monotonicity},
      {"portfolio dominance", portfolio_dominance},
      {"slack order benefit", slack_order},
      {"MCP robustness", mcp_robustness},
      {"LNS-PR benefit", lns_pr_benefit},
      {"scale smoke test", scale_smoke},
      {"scoring arithmetic", scoring_arithmetic},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                ms_since(t0) / 1000);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
