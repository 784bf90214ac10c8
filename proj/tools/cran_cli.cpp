// Command-line driver: scenario generation, single-slot solves, trade-off
// sweeps, gain tables and the oracle suite.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "cran/harness.hpp"
#include "cran/oracle.hpp"

namespace fs = std::filesystem;
using namespace cran;

namespace {

struct Common {
  std::string config_path;
  std::string preset = "desk";
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool paper_faithful = false;
  int threads = -1;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = ExperimentConfig::preset(c.preset);
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw std::runtime_error("cannot open config " + c.config_path);
    cfg = experiment_config_from_json(nlohmann::json::parse(in), cfg);
  }
  if (c.seed_set) cfg.seed = c.seed;
  if (c.paper_faithful) cfg.rounding.paper_faithful = true;
  if (c.threads >= 0) cfg.threads = c.threads;
  cfg.validate();
  return cfg;
}

/// Writes to <out>/<name> when --out is given, else to stdout.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out_dir.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.out_dir);
  const fs::path path = fs::path(c.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  std::cerr << "wrote " << path.string() << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_progress(int done, int total) {
  std::fprintf(stderr, "\r%d/%d tasks", done, total);
  if (done == total) std::fputc('\n', stderr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cache-aware C-RAN downlink: SDP relaxation sweeps and oracles"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config_path, "Experiment config JSON (overrides the preset)");
    sub->add_option("--preset", c.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--out", c.out_dir, "Output directory (default: stdout)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&c](std::uint64_t s) { c.seed = s; c.seed_set = true; }, "Master seed");
    sub->add_flag("--paper-faithful-rounding", c.paper_faithful, "Keep raw Gaussian samples only");
    sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
  };

  auto* gen = app.add_subcommand("generate", "Write the scenario (positions, popularity, slots) as JSON");
  add_common(gen);
  int gen_slots = 1;
  gen->add_option("--slots", gen_slots, "Number of slots to include")->check(CLI::NonNegativeNumber);

  auto* solve_cmd = app.add_subcommand("solve", "Relax and round one slot, print the full report");
  add_common(solve_cmd);
  int slot_index = 0;
  std::string mode_name = "coded";
  double cache_size = 6.0, lambda = 0.5;
  solve_cmd->add_option("--slot", slot_index, "Slot index")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--mode", mode_name, "none, uncoded or coded");
  solve_cmd->add_option("-S,--cache-size", cache_size, "Cache size in files");
  solve_cmd->add_option("--lambda", lambda, "Backhaul weight in [0, 0.999]");
  std::string dump_path;
  solve_cmd->add_option("--dump-sdp", dump_path, "Write the first linearized SDP as standard-form JSON");

  auto* sweep = app.add_subcommand("sweep", "Run the lambda sweep and write sweep.csv");
  add_common(sweep);

  auto* gains = app.add_subcommand("gains", "Backhaul reductions at saturation");
  add_common(gains);
  std::string csv_path;
  gains->add_option("--csv", csv_path, "Existing sweep CSV (default: run the sweep)");

  auto* validate = app.add_subcommand("validate", "Run the oracle suite");
  add_common(validate);

  auto* conic_cmd = app.add_subcommand(
      "conic-solve", "Solve a standard-form JSON problem; exit 0 optimal, 4 infeasible, 5 unbounded, 6 max iterations");
  std::string problem_path;
  double tolerance = 1e-8;
  conic_cmd->add_option("problem", problem_path, "Problem JSON")->required();
  conic_cmd->add_option("--tolerance", tolerance, "Solver tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = load_config(c);
      const Scenario scen = make_scenario(cfg.scenario, cfg.seed);
      nlohmann::json j = to_json(scen);
      j["experiment"] = to_json(cfg);
      nlohmann::json slots = nlohmann::json::array();
      for (int k = 0; k < gen_slots; ++k) slots.push_back(to_json(scen.slot(k)));
      j["slots"] = slots;
      emit(c, "scenario.json", j.dump(2) + "\n");
      return 0;
    }
    if (solve_cmd->parsed()) {
      const ExperimentConfig cfg = load_config(c);
      const CacheMode mode = parse_cache_mode(mode_name);
      const Scenario scen = make_scenario(cfg.scenario, cfg.seed);
      const SlotProblem p = make_slot_problem(cfg, scen, slot_index, mode, mode == CacheMode::none ? 0.0 : cache_size,
                                              lambda);
      if (!dump_path.empty()) {
        const LiftedScenario lifted = p.lift();
        const LinearizedSdp sdp = assemble_linearized_sdp(lifted, initial_cut_pool(lifted, cfg.relaxation.initial_tangents));
        std::ofstream(dump_path) << to_json(sdp.problem).dump() << "\n";
      }
      Rng rng = make_stream(cfg.seed, "solve", static_cast<std::uint64_t>(slot_index));
      const auto t0 = std::chrono::steady_clock::now();
      const SlotOutcome o = solve_slot(p, cfg.relaxation, cfg.rounding, rng);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      nlohmann::json j{{"slot", slot_index},
                       {"mode", to_string(mode)},
                       {"S", p.placement.cache_size},
                       {"lambda", lambda},
                       {"seconds", secs},
                       {"slot_data", to_json(p.slot)},
                       {"relaxed", to_json(o.relaxed)},
                       {"rounding", to_json(o.rounding)}};
      emit(c, "solve.json", j.dump(2) + "\n");
      return o.rounding.feasible() ? 0 : 3;
    }
    if (sweep->parsed()) {
      const ExperimentConfig cfg = load_config(c);
      const SweepResult r = run_tradeoff_sweep(cfg, print_progress);
      emit(c, "sweep.csv", records_to_csv(r.records));
      if (!c.out_dir.empty()) {
        nlohmann::json d = nlohmann::json::array();
        for (const auto& x : r.diagnostics) d.push_back(to_json(x));
        emit(c, "diagnostics.json", nlohmann::json{{"config", to_json(cfg)}, {"cells", d}}.dump(2) + "\n");
      }
      return 0;
    }
    if (gains->parsed()) {
      std::vector<SweepRecord> records;
      if (!csv_path.empty()) {
        records = records_from_csv(read_file(csv_path));
      } else {
        records = run_tradeoff_sweep(load_config(c), print_progress).records;
        if (!c.out_dir.empty()) emit(c, "sweep.csv", records_to_csv(records));
      }
      const auto table = gain_table(records);
      std::cout << format_gains(table);
      if (!c.out_dir.empty()) emit(c, "gains.json", to_json(table).dump(2) + "\n");
      return 0;
    }
    if (validate->parsed()) {
      OracleSuiteOptions opt;
      if (c.seed_set) opt.seed = c.seed;
      const auto reports = run_oracle_suite(opt);
      std::cout << format_reports(reports);
      if (!c.out_dir.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : reports) j.push_back(to_json(r));
        emit(c, "validate.json", j.dump(2) + "\n");
      }
      for (const auto& r : reports) {
        if (!r.pass) return 1;
      }
      return 0;
    }
    if (conic_cmd->parsed()) {
      const ConicProblem problem = conic_problem_from_json(nlohmann::json::parse(read_file(problem_path)));
      SolverSettings settings;
      settings.tolerance = tolerance;
      const ConicSolution sol = cran::solve(problem, settings);
      std::cout << to_json(sol).dump(2) << "\n";
      switch (sol.status) {
        case SolveStatus::optimal: return 0;
        case SolveStatus::infeasible: return 4;
        case SolveStatus::unbounded: return 5;
        case SolveStatus::max_iterations: return 6;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
