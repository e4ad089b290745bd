// flatland: instance generation, solving, execution and benchmarking.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "flatland/bench.hpp"
#include "flatland/executor.hpp"
#include "flatland/instance_io.hpp"
#include "flatland/planner.hpp"
#include "flatland/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flatland;

namespace {

std::vector<PriorityStrategy> parse_portfolio(const std::string& list) {
  std::vector<PriorityStrategy> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    auto s = parse_strategy(item);
    if (!s) throw std::runtime_error("unknown strategy '" + item + "' (index, earliest-arrival, slack, slack-reversed)");
    out.push_back(*s);
  }
  if (out.empty()) throw std::runtime_error("empty portfolio");
  return out;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void apply_overrides(GeneratorConfig& c, const json& j) {
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.cities = j.value("cities", c.cities);
  c.trains = j.value("trains", c.trains);
  c.min_line_gap = j.value("min_line_gap", c.min_line_gap);
  c.slack_margin_fraction = j.value("slack_margin_fraction", c.slack_margin_fraction);
  c.departure_window = j.value("departure_window", c.departure_window);
  if (j.contains("speed_proportions")) {
    auto v = j["speed_proportions"].get<std::vector<double>>();
    if (v.size() != 4) throw std::runtime_error("speed_proportions needs 4 values");
    for (std::size_t i = 0; i < 4; ++i) c.speed_proportions[i] = v[i];
  }
  if (j.contains("malfunction")) {
    const json& m = j["malfunction"];
    c.malfunction.rate = m.value("rate", c.malfunction.rate);
    c.malfunction.min_duration = m.value("min_duration", c.malfunction.min_duration);
    c.malfunction.max_duration = m.value("max_duration", c.malfunction.max_duration);
  }
}

// Config file: {"levels": [1, 2], "count": 3, "overrides": {...}}.
int cmd_gen(const std::string& config_path, const fs::path& out_dir, std::uint64_t seed, std::vector<int> levels,
            int count) {
  json overrides = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open " + config_path);
    json cfg = json::parse(in);
    if (cfg.contains("levels")) levels = cfg["levels"].get<std::vector<int>>();
    count = cfg.value("count", count);
    if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("overrides")) overrides = cfg["overrides"];
  }
  if (levels.empty()) levels = {1};
  fs::create_directories(out_dir);
  for (int level : levels) {
    GeneratorConfig gc = level_preset(level);
    apply_overrides(gc, overrides);
    for (int i = 0; i < count; ++i) {
      const std::uint64_t s = Rng::mix(seed, static_cast<std::uint64_t>(level) * 100000 + static_cast<std::uint64_t>(i));
      const Instance inst = generate_instance(gc, s);
      char name[64];
      std::snprintf(name, sizeof name, "level%02d_%03d.flatland", level, i);
      save_instance(inst, out_dir / name);
      std::cout << (out_dir / name).string() << '\n';
    }
  }
  return 0;
}

int cmd_solve(const fs::path& instance, const std::string& portfolio, int lns_iters, int budget_ms,
              const fs::path& out, const std::string& lns_mode, std::uint64_t seed, const std::string& trace_path) {
  Environment env(load_instance(instance));
  SolverConfig sc;
  sc.portfolio = parse_portfolio(portfolio);
  sc.lns_iterations = lns_iters;
  sc.seed = seed;
  if (lns_mode == "adaptive")
    sc.lns_mode = LnsMode::Adaptive;
  else if (lns_mode != "delay")
    throw std::runtime_error("--lns-mode must be delay or adaptive");
  std::ofstream trace;
  if (!trace_path.empty()) trace = open_out(trace_path);
  SolveOutcome so = solve(env, sc, budget_ms, trace_path.empty() ? nullptr : &trace);
  {
    std::ofstream plan = open_out(out);
    write_plan(plan, env, so.solution);
  }
  const json metrics = {{"instance", instance.string()},
                        {"agents", env.agent_count()},
                        {"planned", so.solution.planned},
                        {"success", so.solution.success},
                        {"total_delay", so.solution.total_delay},
                        {"portfolio_delay", so.portfolio_delay},
                        {"portfolio_choice", so.portfolio_choice},
                        {"lns_iterations", so.lns_iterations},
                        {"reward_estimate", so.solution.reward_estimate},
                        {"makespan", so.solution.makespan},
                        {"planning_ms", so.planning_ms},
                        {"budget", so.budget_exceeded}};
  std::cout << metrics.dump() << '\n';
  return 0;
}

int cmd_simulate(const fs::path& instance, const fs::path& plan_path, const std::string& mode_s, std::uint64_t seed,
                 const std::string& log_path, const std::string& report_path, int r, int p, int horizon,
                 const std::string& schedule_path, const std::string& commands_path) {
  Environment env(load_instance(instance));
  std::ifstream pin(plan_path);
  if (!pin) throw std::runtime_error("cannot open " + plan_path.string());
  Solution sol = read_plan(pin, env);
  const auto problems = find_conflicts(env, sol);
  if (!problems.empty()) {
    for (const auto& pr : problems) std::cerr << "invalid plan: " << pr << '\n';
    return 2;
  }
  auto mode = parse_mode(mode_s);
  if (!mode) throw std::runtime_error("--mode must be mcp-only, lns-pr or per-malfunction-pr");
  MalfunctionSchedule schedule;
  if (!schedule_path.empty()) {
    std::ifstream sin(schedule_path);
    if (!sin) throw std::runtime_error("cannot open " + schedule_path);
    schedule = read_schedule(sin, env.agent_count());
  } else {
    const int span = horizon > 0 ? horizon : env.tmax();
    schedule = sample_malfunctions(env.instance().malfunction, env.agent_count(), span, seed);
  }
  std::ofstream log, cmds;
  EpisodeOptions opts;
  opts.horizon = horizon;
  if (!log_path.empty()) {
    log = open_out(log_path);
    opts.trajectory = &log;
  }
  if (!commands_path.empty()) {
    cmds = open_out(commands_path);
    opts.commands = &cmds;
  }
  ReplanConfig rc{r, p, *mode, seed, 8};
  ControllerReport rep = run_controller(env, sol, rc, schedule, opts);
  json rec = episode_record(instance.stem().string(), env, *mode, seed, rep);
  rec["plan_total_delay"] = sol.total_delay;
  rec["plan_reward"] = sol.reward_estimate;
  if (!report_path.empty()) {
    std::ofstream out = open_out(report_path);
    out << rec.dump() << '\n';
  }
  std::cout << rec.dump() << '\n';
  return rep.outcome.aborted ? 3 : 0;
}

int cmd_bench(const fs::path& suite_path, int jobs, const fs::path& out_dir) {
  BenchmarkSuite suite = load_suite(suite_path);
  BenchOutput out = run_suite(suite, jobs);
  fs::create_directories(out_dir);
  {
    std::ofstream rec = open_out(out_dir / "records.jsonl");
    for (const json& r : out.records) rec << r.dump() << '\n';
  }
  {
    std::ofstream csv = open_out(out_dir / "summary.csv");
    csv << out.csv;
  }
  std::cout << out.csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flatland rail planning: generate, solve, simulate and benchmark"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate instance files");
  std::string gen_config;
  std::string gen_out = "instances";
  std::uint64_t gen_seed = 0;
  std::vector<int> gen_levels;
  int gen_count = 1;
  gen->add_option("--config", gen_config, "JSON config: levels, count, seed, overrides");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "base seed");
  gen->add_option("--level", gen_levels, "level preset(s) 1..15");
  gen->add_option("--count", gen_count, "instances per level")->check(CLI::PositiveNumber);

  auto* solve_cmd = app.add_subcommand("solve", "plan an instance (portfolio PP + LNS)");
  std::string s_instance, s_out, s_portfolio = "index,earliest-arrival,slack,slack-reversed", s_mode = "delay", s_trace;
  int s_iters = -1, s_budget = 60000;
  std::uint64_t s_seed = 0;
  solve_cmd->add_option("--instance", s_instance, "instance file")->required();
  solve_cmd->add_option("--portfolio", s_portfolio, "comma-separated priority strategies");
  solve_cmd->add_option("--lns-iters", s_iters, "LNS iterations (-1: by agent count)");
  solve_cmd->add_option("--budget-ms", s_budget, "wall-clock budget, 0 for none");
  solve_cmd->add_option("--out", s_out, "plan file")->required();
  solve_cmd->add_option("--lns-mode", s_mode, "delay or adaptive");
  solve_cmd->add_option("--seed", s_seed, "LNS seed");
  solve_cmd->add_option("--trace", s_trace, "LNS iteration trace file");

  auto* sim = app.add_subcommand("simulate", "execute a plan and score the episode");
  std::string m_instance, m_plan, m_mode = "mcp-only", m_log, m_report, m_schedule, m_commands;
  std::uint64_t m_seed = 0;
  int m_r = 20, m_p = 20, m_horizon = 0;
  sim->add_option("--instance", m_instance, "instance file")->required();
  sim->add_option("--plan", m_plan, "plan file")->required();
  sim->add_option("--mode", m_mode, "mcp-only, lns-pr or per-malfunction-pr");
  sim->add_option("--seed", m_seed, "malfunction seed");
  sim->add_option("--log", m_log, "trajectory log file");
  sim->add_option("--report", m_report, "episode report file");
  sim->add_option("-r,--replans", m_r, "LNS-PR runs per episode");
  sim->add_option("-p,--pr-iters", m_p, "LNS iterations per replan");
  sim->add_option("--horizon", m_horizon, "timesteps to simulate (default tmax)");
  sim->add_option("--malfunctions", m_schedule, "malfunction schedule file instead of sampling");
  sim->add_option("--commands", m_commands, "write the issued command stream");

  auto* bench = app.add_subcommand("bench", "run a benchmark suite");
  std::string b_suite, b_out = "bench-out";
  int b_jobs = 1;
  bench->add_option("--suite", b_suite, "suite JSON")->required();
  bench->add_option("--jobs", b_jobs, "parallel instances")->check(CLI::PositiveNumber);
  bench->add_option("--out", b_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(gen_config, gen_out, gen_seed, gen_levels, gen_count);
    if (*solve_cmd) return cmd_solve(s_instance, s_portfolio, s_iters, s_budget, s_out, s_mode, s_seed, s_trace);
    if (*sim)
      return cmd_simulate(m_instance, m_plan, m_mode, m_seed, m_log, m_report, m_r, m_p, m_horizon, m_schedule,
                          m_commands);
    if (*bench) return cmd_bench(b_suite, b_jobs, b_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
