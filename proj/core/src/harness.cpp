#include "cran/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cran {

void ExperimentConfig::validate() const {
  scenario.validate();
  if (slots < 1) throw std::invalid_argument("slots must be >= 1");
  if (lambdas.empty()) throw std::invalid_argument("lambda grid is empty");
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= kMaxLambda)) throw std::invalid_argument("lambda values must be in [0, 0.999]");
  }
  if (modes.empty()) throw std::invalid_argument("no cache modes");
  if (cache_sizes.empty()) throw std::invalid_argument("no cache sizes");
  for (double s : cache_sizes) {
    if (!(s >= 0.0)) throw std::invalid_argument("cache sizes must be >= 0");
  }
  if (!(max_bs_power_w > 0.0)) throw std::invalid_argument("P_max must be > 0");
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must be in (0, 1]");
  if (!(coded_fraction > 0.0 && coded_fraction <= 1.0)) throw std::invalid_argument("coded fraction must be in (0, 1]");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  if (rounding.trials < 1) throw std::invalid_argument("rounding trials must be >= 1");
}

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.slots = 20;
  c.scenario.geometry.user_pool_size = 60;
  return c;
}

ExperimentConfig ExperimentConfig::paper() {
  ExperimentConfig c;
  c.slots = 100;
  c.scenario.geometry.user_pool_size = 200;
  return c;
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  std::vector<std::string> modes;
  for (auto m : c.modes) modes.push_back(to_string(m));
  return {{"scenario", to_json(c.scenario)},
          {"cache_sizes", c.cache_sizes},
          {"modes", modes},
          {"lambdas", c.lambdas},
          {"slots", c.slots},
          {"seed", c.seed},
          {"gamma_db", c.gamma_db},
          {"max_bs_power_w", c.max_bs_power_w},
          {"coded_fraction", c.coded_fraction},
          {"theta", c.theta},
          {"threads", c.threads},
          {"relaxation",
           {{"max_cut_rounds", c.relaxation.max_cut_rounds},
            {"violation_tol", c.relaxation.violation_tol},
            {"objective_rel_tol", c.relaxation.objective_rel_tol},
            {"cut_tol", c.relaxation.cut_tol},
            {"initial_tangents", c.relaxation.initial_tangents},
            {"bracket_points", c.relaxation.bracket_points},
            {"early_tolerance", c.relaxation.early_tolerance},
            {"early_violation", c.relaxation.early_violation},
            {"solver_tolerance", c.relaxation.solver.tolerance},
            {"solver_max_iterations", c.relaxation.solver.max_iterations}}},
          {"rounding",
           {{"trials", c.rounding.trials},
            {"rank_tol", c.rounding.rank_tol},
            {"paper_faithful", c.rounding.paper_faithful}}}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const ExperimentConfig& defaults) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  ExperimentConfig c = defaults;
  if (j.contains("scenario")) c.scenario = scenario_config_from_json(j.at("scenario"), defaults.scenario);
  if (j.contains("modes")) {
    c.modes.clear();
    for (const auto& m : j.at("modes")) c.modes.push_back(parse_cache_mode(m.get<std::string>()));
  }
  auto take = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("cache_sizes", c.cache_sizes);
  take("lambdas", c.lambdas);
  take("slots", c.slots);
  take("seed", c.seed);
  take("gamma_db", c.gamma_db);
  take("max_bs_power_w", c.max_bs_power_w);
  take("coded_fraction", c.coded_fraction);
  take("theta", c.theta);
  take("threads", c.threads);
  if (j.contains("relaxation")) {
    const auto& r = j.at("relaxation");
    auto rtake = [&r](const char* key, auto& field) {
      if (r.contains(key)) field = r.at(key).get<std::decay_t<decltype(field)>>();
    };
    rtake("max_cut_rounds", c.relaxation.max_cut_rounds);
    rtake("violation_tol", c.relaxation.violation_tol);
    rtake("objective_rel_tol", c.relaxation.objective_rel_tol);
    rtake("cut_tol", c.relaxation.cut_tol);
    rtake("initial_tangents", c.relaxation.initial_tangents);
    rtake("bracket_points", c.relaxation.bracket_points);
    rtake("early_tolerance", c.relaxation.early_tolerance);
    rtake("early_violation", c.relaxation.early_violation);
    rtake("solver_tolerance", c.relaxation.solver.tolerance);
    rtake("solver_max_iterations", c.relaxation.solver.max_iterations);
  }
  if (j.contains("rounding")) {
    const auto& r = j.at("rounding");
    if (r.contains("trials")) c.rounding.trials = r.at("trials").get<int>();
    if (r.contains("rank_tol")) c.rounding.rank_tol = r.at("rank_tol").get<double>();
    if (r.contains("paper_faithful")) c.rounding.paper_faithful = r.at("paper_faithful").get<bool>();
  }
  c.validate();
  return c;
}

SlotOutcome solve_slot(const SlotProblem& problem, const RelaxationSettings& relaxation,
                       const RoundingSettings& rounding, Rng& rng, const CutPool* warm_start) {
  SlotOutcome out;
  out.relaxed = mm_optimize(problem.lift(), relaxation, warm_start);
  const auto st = out.relaxed.status;
  if (st == RelaxStatus::optimal || st == RelaxStatus::not_converged) {
    out.rounding = gaussian_randomize(out.relaxed.W, problem, rounding, rng);
  }
  return out;
}

SlotProblem make_slot_problem(const ExperimentConfig& config, const Scenario& scenario, int index,
                              CacheMode mode, double cache_size, double lambda) {
  SlotProblem p;
  p.slot = scenario.slot(index);
  p.placement = place_caches(scenario.popularity, config.scenario.geometry.bs_count, cache_size, mode,
                             config.coded_fraction);
  p.popularity = scenario.popularity;
  p.qos = QosConfig::uniform(p.slot.user_count(), config.gamma_db, config.max_bs_power_w, lambda);
  p.noise_power = scenario.noise_power_w;
  p.antennas_per_bs = config.scenario.channel.antennas_per_bs;
  p.theta = config.theta;
  return p;
}

namespace {

struct CellSample {
  bool feasible = false;
  double power = 0.0;
  double backhaul = 0.0;
  RelaxStatus relax = RelaxStatus::solver_failed;
  RoundingMethod method = RoundingMethod::failed;
  int cut_rounds = 0;
  int inexact = 0;
};

struct Task {
  CacheMode mode;
  int size_index;  ///< -1 for the no-caching task, shared by every S
  int slot;
};

std::string stream_name(CacheMode mode, double size) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "rounding/%s/%g", to_string(mode).c_str(), size);
  return buf;
}

/// One lambda chain; returns one sample per lambda.
std::vector<CellSample> run_task(const ExperimentConfig& config, const Scenario& scenario, const Task& task) {
  const double size = task.size_index < 0 ? 0.0 : config.cache_sizes[task.size_index];
  const size_t nl = config.lambdas.size();
  std::vector<CellSample> out(nl);
  auto sample_of = [](const SlotOutcome& o) {
    CellSample s;
    s.relax = o.relaxed.status;
    s.cut_rounds = o.relaxed.cut_rounds;
    s.inexact = o.relaxed.inexact_solves;
    s.method = o.rounding.method;
    s.feasible = o.rounding.feasible();
    if (s.feasible) {
      s.power = o.rounding.cost.power_cost;
      s.backhaul = o.rounding.cost.backhaul_cost;
    }
    return s;
  };
  if (task.mode == CacheMode::none) {
    // Backhaul is fixed without caches, so every lambda < 1 has the same
    // minimizer; re-cost that single solution.
    const SlotProblem p = make_slot_problem(config, scenario, task.slot, task.mode, 0.0, config.lambdas[0]);
    Rng rng = make_stream(config.seed, stream_name(task.mode, 0.0), static_cast<std::uint64_t>(task.slot));
    const CellSample s = sample_of(solve_slot(p, config.relaxation, config.rounding, rng));
    std::fill(out.begin(), out.end(), s);
    return out;
  }
  CutPool warm;
  bool have_warm = false;
  for (size_t k = 0; k < nl; ++k) {
    const SlotProblem p = make_slot_problem(config, scenario, task.slot, task.mode, size, config.lambdas[k]);
    Rng rng = make_stream(config.seed, stream_name(task.mode, size), static_cast<std::uint64_t>(task.slot), k);
    const SlotOutcome o = solve_slot(p, config.relaxation, config.rounding, rng, have_warm ? &warm : nullptr);
    out[k] = sample_of(o);
    if (o.relaxed.status == RelaxStatus::optimal || o.relaxed.status == RelaxStatus::not_converged) {
      warm = o.relaxed.cuts;
      have_warm = true;
    }
  }
  return out;
}

}  // namespace

SweepResult run_tradeoff_sweep(const ExperimentConfig& config,
                               const std::function<void(int done, int total)>& progress) {
  config.validate();
  const Scenario scenario = make_scenario(config.scenario, config.seed);
  const int S = static_cast<int>(config.cache_sizes.size());

  std::vector<Task> tasks;
  std::map<std::pair<int, int>, size_t> first_task;  // (mode, size index) -> first task
  for (CacheMode mode : config.modes) {
    const int sizes = mode == CacheMode::none ? 1 : S;
    for (int si = 0; si < sizes; ++si) {
      const int key_si = mode == CacheMode::none ? -1 : si;
      if (first_task.count({static_cast<int>(mode), key_si})) continue;
      first_task[{static_cast<int>(mode), key_si}] = tasks.size();
      for (int k = 0; k < config.slots; ++k) tasks.push_back({mode, key_si, k});
    }
  }

  std::vector<std::vector<CellSample>> results(tasks.size());
  std::atomic<size_t> next{0};
  std::atomic<int> done{0};
  std::mutex guard;
  std::exception_ptr error;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = run_task(config, scenario, tasks[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!error) error = std::current_exception();
        next = tasks.size();
        return;
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(guard);
        progress(d, static_cast<int>(tasks.size()));
      }
    }
  };
  int threads = config.threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : config.threads;
  threads = std::clamp(threads, 1, static_cast<int>(std::max<size_t>(tasks.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  // Aggregate in index order, so the sums do not depend on scheduling.
  SweepResult out;
  for (CacheMode mode : config.modes) {
    for (int si = 0; si < S; ++si) {
      const size_t first = first_task.at({static_cast<int>(mode), mode == CacheMode::none ? -1 : si});
      for (size_t k = 0; k < config.lambdas.size(); ++k) {
        SweepRecord rec;
        SweepDiagnostics diag;
        rec.mode = diag.mode = mode;
        rec.cache_size = diag.cache_size = config.cache_sizes[si];
        rec.lambda = diag.lambda = config.lambdas[k];
        rec.slots = config.slots;
        int feasible = 0;
        double rounds = 0.0;
        for (int slot = 0; slot < config.slots; ++slot) {
          const CellSample& s = results[first + slot][k];
          rounds += s.cut_rounds;
          diag.inexact_solves += s.inexact;
          if (s.relax == RelaxStatus::not_converged) ++diag.relax_not_converged;
          if (s.relax == RelaxStatus::infeasible || s.relax == RelaxStatus::solver_failed) {
            ++diag.relax_failed;
          } else if (!s.feasible) {
            ++diag.rounding_failed;
          }
          if (s.method == RoundingMethod::randomized) ++diag.randomized;
          if (!s.feasible) {
            ++rec.infeasible;
            continue;
          }
          ++feasible;
          rec.power_cost += s.power;
          rec.backhaul_cost += s.backhaul;
        }
        if (feasible > 0) {
          rec.power_cost /= feasible;
          rec.backhaul_cost /= feasible;
        } else {
          rec.power_cost = rec.backhaul_cost = std::nan("");
        }
        diag.mean_cut_rounds = rounds / config.slots;
        out.records.push_back(rec);
        out.diagnostics.push_back(diag);
      }
    }
  }
  return out;
}

double reduction_percent(double a, double b) {
  if (!(b > 0.0)) {
    if (a == b) return 0.0;
    throw std::domain_error("reduction relative to a zero baseline");
  }
  return 100.0 * (1.0 - a / b);
}

std::vector<GainRow> gain_table(const std::vector<SweepRecord>& records) {
  // Largest-lambda record per (mode, S).
  std::map<std::pair<int, double>, const SweepRecord*> sat;
  std::vector<double> sizes;
  for (const auto& r : records) {
    auto& slot = sat[{static_cast<int>(r.mode), r.cache_size}];
    if (slot == nullptr || r.lambda > slot->lambda) slot = &r;
    if (std::find(sizes.begin(), sizes.end(), r.cache_size) == sizes.end()) sizes.push_back(r.cache_size);
  }
  std::sort(sizes.begin(), sizes.end());
  std::vector<GainRow> out;
  for (double s : sizes) {
    auto get = [&](CacheMode m) {
      const auto it = sat.find({static_cast<int>(m), s});
      if (it == sat.end()) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "no record for mode=%s S=%g", to_string(m).c_str(), s);
        throw std::invalid_argument(buf);
      }
      return it->second->backhaul_cost;
    };
    GainRow g;
    g.cache_size = s;
    g.none = get(CacheMode::none);
    g.uncoded = get(CacheMode::uncoded);
    g.coded = get(CacheMode::coded);
    g.coded_vs_none = reduction_percent(g.coded, g.none);
    g.uncoded_vs_none = reduction_percent(g.uncoded, g.none);
    g.coded_vs_uncoded = reduction_percent(g.coded, g.uncoded);
    out.push_back(g);
  }
  return out;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out = "mode,S,lambda,power_cost,backhaul_cost,infeasible,slots\n";
  char line[256];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%s,%g,%g,%.12g,%.12g,%d,%d\n", to_string(r.mode).c_str(), r.cache_size,
                  r.lambda, r.power_cost, r.backhaul_cost, r.infeasible, r.slots);
    out += line;
  }
  return out;
}

std::vector<SweepRecord> records_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("mode,S,lambda", 0) != 0) {
    throw std::invalid_argument("CSV header missing");
  }
  std::vector<SweepRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      SweepRecord r;
      r.mode = parse_cache_mode(f[0]);
      r.cache_size = std::stod(f[1]);
      r.lambda = std::stod(f[2]);
      r.power_cost = std::stod(f[3]);
      r.backhaul_cost = std::stod(f[4]);
      r.infeasible = std::stoi(f[5]);
      r.slots = std::stoi(f[6]);
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json to_json(const std::vector<GainRow>& gains) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& g : gains) {
    rows.push_back({{"S", g.cache_size},
                    {"backhaul", {{"none", g.none}, {"uncoded", g.uncoded}, {"coded", g.coded}}},
                    {"coded_vs_none", g.coded_vs_none},
                    {"uncoded_vs_none", g.uncoded_vs_none},
                    {"coded_vs_uncoded", g.coded_vs_uncoded}});
  }
  return rows;
}

std::string format_gains(const std::vector<GainRow>& gains) {
  std::string out = "   S   coded vs none   uncoded vs none   coded vs uncoded\n";
  char line[128];
  for (const auto& g : gains) {
    std::snprintf(line, sizeof line, "%4g %14.1f%% %16.1f%% %17.1f%%\n", g.cache_size, g.coded_vs_none,
                  g.uncoded_vs_none, g.coded_vs_uncoded);
    out += line;
  }
  return out;
}

nlohmann::json to_json(const SweepDiagnostics& d) {
  return {{"mode", to_string(d.mode)},
          {"S", d.cache_size},
          {"lambda", d.lambda},
          {"relax_not_converged", d.relax_not_converged},
          {"relax_failed", d.relax_failed},
          {"rounding_failed", d.rounding_failed},
          {"inexact_solves", d.inexact_solves},
          {"randomized", d.randomized},
          {"mean_cut_rounds", d.mean_cut_rounds}};
}

}  // namespace cran
