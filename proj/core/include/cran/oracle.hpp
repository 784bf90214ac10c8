#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cran/conic.hpp"
#include "cran/rng.hpp"

namespace cran {

struct OracleReport {
  std::string name;
  double expected = 0.0;
  double observed = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  /// Which error the tolerance applies to.
  bool relative = true;
  bool pass = false;
};

/// Fills the errors and the pass flag.
OracleReport make_report(std::string name, double expected, double observed, double tolerance,
                         bool relative);

struct SingleUserOptimum {
  double power = 0.0;
  Eigen::VectorXcd w;
};

/// Minimum power meeting SINR gamma for one user and no power cap:
/// p = gamma sigma^2 / ||h||^2 along h / ||h||. Throws when h = 0.
SingleUserOptimum single_user_power_oracle(const Eigen::VectorXcd& h, double gamma, double noise_power);

struct SdpDims {
  std::vector<int> psd_sizes;
  int nonneg = 0;
  int rows = 0;
};

struct KnownSdp {
  ConicProblem problem;
  double optimum = 0.0;
  Eigen::VectorXd x;  ///< certified primal optimum
  Eigen::VectorXd y;  ///< certified row multipliers
};

/// Builds a strictly complementary primal-dual pair first (X = Q diag(x, 0) Q',
/// Z = Q diag(0, z) Q' per block, complementary orthant supports, inequality
/// rows either active with a strictly signed multiplier or slack with a zero
/// one) and derives b and c from it, so the pair is optimal by construction.
/// Blocks must be 1..10 wide; at least one variable and one row.
KnownSdp random_sdp_with_known_optimum(const SdpDims& dims, Rng& rng);

struct GridResult {
  bool feasible = false;
  double objective = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;  ///< W = [[a, b], [b, c]]
};

/// Brute force over W = [[a, b], [b, c]] with a, c in [0, range], ac >= b^2,
/// all on a grid of step eta. A row counts as satisfied when it is violated by
/// at most eta times the l1 norm of its coefficients, the most that snapping
/// a feasible point to the grid can cost. Requires a single 2 x 2 PSD block,
/// no orthant and at most 3 rows.
GridResult grid_check_tiny_sdp(const ConicProblem& problem, double eta = 1e-2, double range = 3.0);

/// A solvable tiny instance for grid_check_tiny_sdp: min <C, W> over a
/// 2 x 2 block with 1 to 3 rows <A_i, W> >= b_i, C and A_i positive definite.
/// The optimum lies well inside [0, 2].
ConicProblem random_tiny_sdp(Rng& rng);

/// Bound on |solver - grid| for a solved tiny problem: eta times the l1 size
/// of C plus the multiplier-weighted l1 size of every row.
double grid_tolerance(const ConicProblem& problem, const Eigen::VectorXd& y, double eta = 1e-2);

struct OracleSuiteOptions {
  std::uint64_t seed = 1;
  int single_user_cases = 100;
  int random_sdps = 50;
  int grid_sdps = 20;
};

/// Runs every oracle family: single-user power (relaxation and rounding
/// against the closed form), generated SDPs and grid-checked tiny SDPs.
std::vector<OracleReport> run_oracle_suite(const OracleSuiteOptions& options = {});

nlohmann::json to_json(const OracleReport& report);
std::string format_reports(const std::vector<OracleReport>& reports);

}  // namespace cran
