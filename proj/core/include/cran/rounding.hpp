#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cran/costmodel.hpp"
#include "cran/relaxation.hpp"
#include "cran/rng.hpp"
#include "cran/scenario.hpp"

namespace cran {

/// Everything needed to evaluate beamformers on one slot exactly.
struct SlotProblem {
  TimeSlot slot;
  CachePlacement placement;
  PopularityModel popularity;
  QosConfig qos;
  double noise_power = 1.0;
  int antennas_per_bs = 1;
  double theta = 0.01;

  LiftedScenario lift() const;
  CostBreakdown cost(const Beamformers& w) const;
  bool feasible(const Beamformers& w, double rel_tol = 1e-8) const;
};

enum class RoundingMethod { eigen, randomized, failed };
std::string to_string(RoundingMethod method);

struct RoundingSettings {
  int trials = 1000;
  double rank_tol = 1e-6;
  /// Keep only raw samples, without the power rebalancing step.
  bool paper_faithful = false;
  double feasibility_tol = 1e-8;
};

struct RoundingReport {
  std::vector<double> eigen_ratio;  ///< lambda_2 / lambda_1 per user
  RoundingMethod method = RoundingMethod::failed;
  int trials_attempted = 0;
  int feasible_candidates = 0;
  /// raw | balanced | capped, for the kept candidate.
  std::string candidate;
  bool sinr_ok = false;
  bool power_ok = false;
  Beamformers w;
  CostBreakdown cost;
  double objective = 0.0;           ///< exact, indicator form
  double smoothed_objective = 0.0;  ///< same beamformers under the log model

  bool feasible() const { return method != RoundingMethod::failed; }
};

/// lambda_2 / lambda_1 of a Hermitian PSD matrix, 0 when W = 0.
double eigen_ratio(const Eigen::MatrixXcd& W);

/// sqrt(lambda_1) u_1 when lambda_2 / lambda_1 <= rank_tol, with the phase
/// fixed so the largest-magnitude entry is real and nonnegative. Throws when
/// W has an eigenvalue below -1e-7 * max(1, lambda_1).
std::optional<Eigen::VectorXcd> extract_rank1(const Eigen::MatrixXcd& W, double rank_tol = 1e-6);

/// Smallest powers that give every user exactly its SINR target for the
/// given beam directions (columns of `u`, any norm). Empty when the system
/// is singular or a power comes out negative.
std::optional<Eigen::VectorXd> balance_powers(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& channels,
                                              const Eigen::VectorXd& sinr_targets, double noise_power);

/// Rank-one extraction when every W_m passes, otherwise best-of-`trials`
/// Gaussian randomization. Trial k draws from its own substream of `rng`'s
/// first output, so a longer run only adds candidates.
RoundingReport gaussian_randomize(const std::vector<Eigen::MatrixXcd>& W, const SlotProblem& problem,
                                  const RoundingSettings& settings, Rng& rng);

nlohmann::json to_json(const RoundingReport& report);

}  // namespace cran
