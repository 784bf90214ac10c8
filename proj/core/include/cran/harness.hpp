#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cran/relaxation.hpp"
#include "cran/rounding.hpp"
#include "cran/scenario.hpp"

namespace cran {

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<double> cache_sizes{3.0, 6.0, 9.0};
  std::vector<CacheMode> modes{CacheMode::none, CacheMode::uncoded, CacheMode::coded};
  std::vector<double> lambdas{0.01, 0.2, 0.4, 0.6, 0.8, 0.999};
  int slots = 100;
  std::uint64_t seed = 1;
  double gamma_db = 10.0;
  double max_bs_power_w = 100.0;
  double coded_fraction = 0.5;
  double theta = 0.01;
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  int threads = 1;
  RelaxationSettings relaxation;
  RoundingSettings rounding;

  void validate() const;

  /// 20 slots from a 60-user pool.
  static ExperimentConfig desk();
  /// 100 slots from a 200-user pool.
  static ExperimentConfig paper();
  static ExperimentConfig preset(const std::string& name);
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep the values from `defaults`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const ExperimentConfig& defaults = {});

struct SweepRecord {
  CacheMode mode = CacheMode::none;
  double cache_size = 0.0;
  double lambda = 0.0;
  double power_cost = 0.0;     ///< mean over feasible slots, watts
  double backhaul_cost = 0.0;  ///< mean over feasible slots
  int infeasible = 0;
  int slots = 0;
};

/// Solver-side counts behind one record.
struct SweepDiagnostics {
  CacheMode mode = CacheMode::none;
  double cache_size = 0.0;
  double lambda = 0.0;
  int relax_not_converged = 0;
  int relax_failed = 0;       ///< infeasible or solver failure
  int rounding_failed = 0;
  int inexact_solves = 0;
  int randomized = 0;         ///< slots that needed Gaussian randomization
  double mean_cut_rounds = 0.0;
};

struct SweepResult {
  std::vector<SweepRecord> records;
  std::vector<SweepDiagnostics> diagnostics;
};

/// Relaxation then rounding for one slot.
struct SlotOutcome {
  RelaxedSolution relaxed;
  RoundingReport rounding;
};

SlotOutcome solve_slot(const SlotProblem& problem, const RelaxationSettings& relaxation,
                       const RoundingSettings& rounding, Rng& rng, const CutPool* warm_start = nullptr);

/// Builds the SlotProblem for slot `index` of `scenario`.
SlotProblem make_slot_problem(const ExperimentConfig& config, const Scenario& scenario, int index,
                              CacheMode mode, double cache_size, double lambda);

/// Every (mode, S, lambda) cell averaged over the slots. Work is split into
/// (mode, S, slot) tasks; each walks the lambda grid in order and hands its
/// final cut pool to the next lambda. Slots are shared across modes. The
/// no-caching optimum does not depend on lambda or S, so it is solved once
/// per slot and re-costed.
SweepResult run_tradeoff_sweep(const ExperimentConfig& config,
                               const std::function<void(int done, int total)>& progress = {});

struct GainRow {
  double cache_size = 0.0;
  double none = 0.0, uncoded = 0.0, coded = 0.0;  ///< saturated backhaul
  double coded_vs_none = 0.0;
  double uncoded_vs_none = 0.0;
  double coded_vs_uncoded = 0.0;
};

/// 100 (1 - B_a / B_b) in percent.
double reduction_percent(double a, double b);

/// Table of backhaul reductions at the largest-lambda record of each
/// (mode, S). Throws naming the first missing (mode, S).
std::vector<GainRow> gain_table(const std::vector<SweepRecord>& records);

std::string records_to_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> records_from_csv(const std::string& csv);
nlohmann::json to_json(const std::vector<GainRow>& gains);
std::string format_gains(const std::vector<GainRow>& gains);
nlohmann::json to_json(const SweepDiagnostics& d);

}  // namespace cran
