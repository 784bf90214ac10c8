#pragma once

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "cran/scenario.hpp"

namespace cran {

/// Column m is the stacked beamformer of user m, length L*Nt; rows
/// [l*Nt, (l+1)*Nt) belong to BS l.
using Beamformers = Eigen::MatrixXcd;

struct QosConfig {
  Eigen::VectorXd sinr_targets;  ///< linear gamma_m
  double max_bs_power_w = 100.0;
  double lambda = 0.5;
  /// A BS serves a user when its block power exceeds this. Negative means
  /// 1e-4 * max_bs_power_w.
  double serve_threshold_w = -1.0;

  double serve_threshold() const {
    return serve_threshold_w >= 0.0 ? serve_threshold_w : 1e-4 * max_bs_power_w;
  }
  void validate() const;

  static QosConfig uniform(int users, double gamma_db, double max_bs_power_w, double lambda);
};

struct CostBreakdown {
  double backhaul_cost = 0.0;
  double power_cost = 0.0;
  double total = 0.0;
  Eigen::MatrixXd missing;    ///< M x F missing fractions X, in [0, 1]
  Eigen::MatrixXi indicator;  ///< M x F, 1 when part of the file has to be fetched
};

double db_to_linear(double db);

double sinr_of(int m, const Beamformers& w, const Eigen::MatrixXcd& channels, double noise_power);
double rate_of(double sinr);

/// Power of BS l's block of every beamformer: result(l, m) = ||w_{l,m}||^2.
Eigen::MatrixXd block_powers(const Beamformers& w, int bs_count, int antennas_per_bs);
/// Per-BS transmit power summed over users.
Eigen::VectorXd bs_powers(const Beamformers& w, int bs_count, int antennas_per_bs);

/// Cached fraction of file f that user m can collect from its serving BSs.
double coverage(int f, int m, const Beamformers& w, const CachePlacement& placement,
                int antennas_per_bs, double serve_threshold);

CostBreakdown network_cost(const Beamformers& w, const CachePlacement& placement,
                           const PopularityModel& popularity, const QosConfig& qos,
                           int antennas_per_bs);

/// Backhaul term rebuilt from the indicator and missing-fraction matrices.
double backhaul_from_indicators(const CostBreakdown& cost, const PopularityModel& popularity,
                                const QosConfig& qos);

/// Checks the SINR targets (with relative slack) and per-BS power caps.
bool satisfies_qos(const Beamformers& w, const Eigen::MatrixXcd& channels, double noise_power,
                   const QosConfig& qos, int antennas_per_bs, double rel_tol = 1e-8);

nlohmann::json to_json(const CostBreakdown& cost);

}  // namespace cran
