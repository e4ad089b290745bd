#include "flatland/bench.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "flatland/instance_io.hpp"

namespace flatland {

using nlohmann::json;

SolveOutcome solve(const Environment& env, const SolverConfig& config, int budget_ms, std::ostream* trace) {
  SolveOutcome out;
  const auto t0 = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (budget_ms > 0) deadline = t0 + std::chrono::milliseconds(budget_ms);
  PortfolioResult pr = portfolio_plan(env, config.portfolio, deadline, config.parallel);
  out.portfolio_delay = pr.solution.total_delay;
  out.portfolio_choice = pr.chosen >= 0 ? strategy_name(config.portfolio[static_cast<std::size_t>(pr.chosen)]) : "none";
  for (const auto& d : pr.run_delays) out.budget_exceeded = out.budget_exceeded || !d;

  LnsConfig lc;
  lc.iteration_limit = config.lns_iterations >= 0 ? config.lns_iterations : iteration_limit_for(env.agent_count());
  lc.mode = config.lns_mode;
  lc.seed = config.seed;
  lc.neighborhood_size = config.neighborhood_size;
  lc.deadline = deadline;
  lc.trace = trace;
  Lns lns(env, std::move(pr.solution), lc);
  lns.run();
  out.lns_iterations = static_cast<int>(lns.history().size());
  if (out.lns_iterations < lc.iteration_limit) out.budget_exceeded = true;
  out.solution = lns.incumbent();
  out.planning_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return out;
}

json episode_record(const std::string& instance_id, const Environment& env, ExecutionMode mode, std::uint64_t seed,
                    const ControllerReport& report) {
  const EpisodeResult& r = report.outcome.result;
  json acts = json::array(), delays = json::array();
  for (const AgentScore& s : r.agents) {
    acts.push_back(s.act);
    delays.push_back(s.delay);
  }
  json rec = {{"instance", instance_id},
              {"mode", mode_name(mode)},
              {"seed", seed},
              {"agents", env.agent_count()},
              {"tmax", env.tmax()},
              {"act", acts},
              {"delay", delays},
              {"total_delay", r.total_delay},
              {"success", r.success},
              {"success_rate", r.success_rate()},
              {"reward", r.reward},
              {"replans", report.replans},
              {"planning_ms", report.planning_ms},
              {"aborted", report.outcome.aborted}};
  if (report.outcome.aborted) rec["error"] = report.outcome.error;
  return rec;
}

namespace {

std::uint64_t as_u64(const json& j) {
  if (!j.is_number_integer()) throw std::runtime_error("suite: expected an integer seed");
  return j.get<std::uint64_t>();
}

}  // namespace

BenchmarkSuite parse_suite(const json& j, const std::filesystem::path& base) {
  BenchmarkSuite s;
  s.name = j.value("name", std::string("suite"));
  if (!j.contains("instances") || !j["instances"].is_array() || j["instances"].empty())
    throw std::runtime_error("suite: 'instances' must be a non-empty list");
  int index = 0;
  for (const json& e : j["instances"]) {
    SuiteInstance si;
    si.id = e.value("id", "instance-" + std::to_string(index));
    if (e.contains("file")) {
      std::filesystem::path f = e["file"].get<std::string>();
      si.file = f.is_absolute() ? f : base / f;
      si.level = e.value("level", 0);
    } else {
      si.level = e.value("level", 0);
      if (si.level < 1 || si.level > kLevelCount) throw std::runtime_error("suite: instance '" + si.id + "' needs a file or a level 1..15");
      si.instance_seed = e.contains("instance_seed") ? as_u64(e["instance_seed"]) : 0;
    }
    s.instances.push_back(si);
    ++index;
  }
  if (j.contains("seeds")) {
    s.seeds.clear();
    for (const json& v : j["seeds"]) s.seeds.push_back(as_u64(v));
    if (s.seeds.empty()) throw std::runtime_error("suite: 'seeds' is empty");
  }
  if (j.contains("modes")) {
    s.modes.clear();
    for (const json& v : j["modes"]) {
      auto m = parse_mode(v.get<std::string>());
      if (!m) throw std::runtime_error("suite: unknown mode '" + v.get<std::string>() + "'");
      s.modes.push_back(*m);
    }
  }
  if (j.contains("malfunction_rate")) s.malfunction_rate = j["malfunction_rate"].get<double>();
  if (j.contains("solver")) {
    const json& sv = j["solver"];
    if (sv.contains("portfolio")) {
      s.solver.portfolio.clear();
      for (const json& v : sv["portfolio"]) {
        auto p = parse_strategy(v.get<std::string>());
        if (!p) throw std::runtime_error("suite: unknown strategy '" + v.get<std::string>() + "'");
        s.solver.portfolio.push_back(*p);
      }
      if (s.solver.portfolio.empty()) throw std::runtime_error("suite: empty portfolio");
    }
    s.solver.lns_iterations = sv.value("lns_iterations", -1);
    const std::string mode = sv.value("lns_mode", std::string("delay"));
    if (mode == "delay")
      s.solver.lns_mode = LnsMode::DelayOnly;
    else if (mode == "adaptive")
      s.solver.lns_mode = LnsMode::Adaptive;
    else
      throw std::runtime_error("suite: lns_mode must be 'delay' or 'adaptive'");
    if (sv.contains("seed")) s.solver.seed = as_u64(sv["seed"]);
    s.solver.neighborhood_size = sv.value("neighborhood_size", 8);
  }
  if (j.contains("replan")) {
    s.r = j["replan"].value("r", 20);
    s.p = j["replan"].value("p", 20);
  }
  s.budget_ms = j.value("budget_ms", 60000);
  s.total_budget_ms = j.value("total_budget_ms", 0);
  if (s.budget_ms <= 0 || s.total_budget_ms < 0) throw std::runtime_error("suite: budgets must be positive");
  if (s.r < 0 || s.p < 0) throw std::runtime_error("suite: r and p must be >= 0");
  return s;
}

BenchmarkSuite load_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_suite(json::parse(in), path.parent_path());
}

Instance suite_instance(const BenchmarkSuite& suite, const SuiteInstance& si) {
  Instance inst = si.file ? load_instance(*si.file) : generate_instance(level_preset(si.level), si.instance_seed);
  if (suite.malfunction_rate) inst.malfunction.rate = *suite.malfunction_rate;
  return inst;
}

namespace {

std::vector<json> run_instance(const BenchmarkSuite& suite, const SuiteInstance& si, bool over_budget) {
  std::vector<json> out;
  if (over_budget) {
    out.push_back({{"instance", si.id}, {"error", "total budget exhausted"}});
    return out;
  }
  try {
    Environment env(suite_instance(suite, si));
    SolveOutcome so = solve(env, suite.solver, suite.budget_ms);
    for (std::uint64_t seed : suite.seeds) {
      const MalfunctionSchedule schedule =
          sample_malfunctions(env.instance().malfunction, env.agent_count(), env.tmax(), seed);
      for (ExecutionMode mode : suite.modes) {
        ReplanConfig rc{suite.r, suite.p, mode, seed, suite.solver.neighborhood_size};
        const auto t0 = Clock::now();
        ControllerReport rep = run_controller(env, so.solution, rc, schedule);
        json rec = episode_record(si.id, env, mode, seed, rep);
        rec["level"] = si.level;
        rec["plan_total_delay"] = so.solution.total_delay;
        rec["plan_reward"] = so.solution.reward_estimate;
        rec["budget"] = so.budget_exceeded;
        rec["solve_ms"] = so.planning_ms;
        rec["episode_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        out.push_back(std::move(rec));
      }
    }
  } catch (const std::exception& e) {
    out.clear();
    out.push_back({{"instance", si.id}, {"level", si.level}, {"error", e.what()}});
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

BenchOutput run_suite(const BenchmarkSuite& suite, int jobs) {
  const std::size_t n = suite.instances.size();
  std::vector<std::vector<json>> per(n);
  std::atomic<std::size_t> next{0};
  const auto start = Clock::now();
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      const bool over = suite.total_budget_ms > 0 &&
                        Clock::now() - start > std::chrono::milliseconds(suite.total_budget_ms);
      per[i] = run_instance(suite, suite.instances[i], over);
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  BenchOutput out;
  for (auto& v : per)
    for (auto& r : v) out.records.push_back(std::move(r));
  out.csv = summary_csv(suite, out.records);
  return out;
}

std::string summary_csv(const BenchmarkSuite& suite, const std::vector<json>& records) {
  struct Acc {
    int episodes = 0;
    double reward = 0, success = 0, delay = 0, planning = 0, solve = 0;
    void add(const json& r) {
      ++episodes;
      reward += r["reward"].get<double>();
      success += r["success_rate"].get<double>();
      delay += static_cast<double>(r["total_delay"].get<long long>());
      planning += r["planning_ms"].get<double>();
      solve += r["solve_ms"].get<double>();
    }
  };
  std::ostringstream out;
  out << "instance,level,errors";
  for (ExecutionMode m : suite.modes) {
    const std::string p = mode_name(m);
    out << ',' << p << "_episodes," << p << "_mean_reward," << p << "_success_rate," << p << "_mean_delay," << p
        << "_replan_ms";
  }
  out << ",solve_ms\n";

  auto row = [&](const std::string& name, const std::string& level, int errors, const std::map<std::string, Acc>& by_mode) {
    out << name << ',' << level << ',' << errors;
    double solve = 0;
    int solve_n = 0;
    for (ExecutionMode m : suite.modes) {
      auto it = by_mode.find(mode_name(m));
      if (it == by_mode.end() || it->second.episodes == 0) {
        out << ",0,,,,";
        continue;
      }
      const Acc& a = it->second;
      const double k = a.episodes;
      out << ',' << a.episodes << ',' << fmt(a.reward / k) << ',' << fmt(a.success / k) << ',' << fmt(a.delay / k)
          << ',' << fmt(a.planning / k);
      solve += a.solve;
      solve_n += a.episodes;
    }
    out << ',' << (solve_n ? fmt(solve / solve_n) : std::string()) << '\n';
  };

  std::map<int, std::map<std::string, Acc>> levels;
  std::map<int, int> level_errors;
  for (const SuiteInstance& si : suite.instances) {
    std::map<std::string, Acc> by_mode;
    int errors = 0;
    int level = si.level;
    for (const json& r : records) {
      if (r["instance"] != si.id) continue;
      if (r.contains("error") && !r.contains("mode")) {
        ++errors;
        continue;
      }
      by_mode[r["mode"].get<std::string>()].add(r);
      levels[level][r["mode"].get<std::string>()].add(r);
    }
    level_errors[level] += errors;
    levels[level];
    row(si.id, std::to_string(level), errors, by_mode);
  }
  for (const auto& [level, by_mode] : levels) row("level-" + std::to_string(level), std::to_string(level), level_errors[level], by_mode);
  return out.str();
}

}  // namespace flatland
