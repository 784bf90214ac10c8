#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cran/conic.hpp"
#include "cran/costmodel.hpp"
#include "cran/scenario.hpp"

namespace cran {

/// Problem data for one slot in lifted form. Channels are kept in physical
/// units; the assembled SDP works with channels divided by sigma.
struct LiftedScenario {
  Eigen::MatrixXcd channels;          ///< M x (L*Nt), physical
  std::vector<Eigen::MatrixXcd> H;    ///< h~ h~^H with h~ = h / sigma
  int bs_count = 0;
  int antennas_per_bs = 0;
  Eigen::MatrixXd delta;              ///< F x L
  Eigen::VectorXd popularity;         ///< Z
  Eigen::VectorXd sinr_targets;
  double noise_power = 1.0;
  double max_bs_power = 1.0;
  double lambda = 0.0;                ///< clamped to <= 0.999
  double theta = 0.01;

  int users() const { return static_cast<int>(channels.rows()); }
  int files() const { return static_cast<int>(delta.rows()); }
  int dim() const { return bs_count * antennas_per_bs; }
  /// True when user m's coverage depends on BS l, i.e. some file cached at l.
  bool active(int l) const { return (delta.col(l).array() > 0.0).any(); }
  bool file_cached(int f) const { return (delta.row(f).array() > 0.0).any(); }
  double rate(int m) const;
};

constexpr double kMaxLambda = 0.999;
constexpr double kInexactFactor = 100.0;

Eigen::MatrixXcd lift_channel(const Eigen::VectorXcd& h);

/// Diagonal 0/1 matrix selecting the antennas of BS l (zero-based).
Eigen::MatrixXd selection_matrix(int l, int bs_count, int antennas_per_bs);

LiftedScenario lift_scenario(const TimeSlot& slot, const CachePlacement& placement,
                             const PopularityModel& popularity, const QosConfig& qos,
                             double noise_power, int antennas_per_bs, double theta = 0.01);

/// Tangent of log(x + theta) at t0, evaluated at x.
double log_tangent(double t0, double theta, double x);
/// True when log(x + theta) exceeds the tangent at t0 by more than the
/// rounding of the two evaluations (4 ulp of the larger magnitude).
bool tangent_violated(double t0, double theta, double x);

/// Linearization points of log(tr(W_m J_l) + theta), one list per (m, l).
class CutPool {
 public:
  CutPool() = default;
  CutPool(int users, int bs_count) : bs_count_(bs_count), points_(static_cast<size_t>(users) * bs_count) {}

  /// Returns false when t0 is within 1e-10 of an existing point.
  bool add(int m, int l, double t0);
  const std::vector<double>& points(int m, int l) const { return points_[index(m, l)]; }
  int size() const;
  /// Keeps, for every (m, l), the `per_side` points nearest to traces(l, m)
  /// on each side, measured in log(t + theta). Used to pass a compact pool
  /// between neighbouring solves.
  CutPool near(const Eigen::MatrixXd& traces, double theta, int per_side) const;
  int users() const { return bs_count_ == 0 ? 0 : static_cast<int>(points_.size()) / bs_count_; }
  int bs_count() const { return bs_count_; }

 private:
  size_t index(int m, int l) const { return static_cast<size_t>(m) * bs_count_ + l; }
  int bs_count_ = 0;
  std::vector<std::vector<double>> points_;
};

/// Tangents at each t0 = fraction * P_max for every active (m, l).
CutPool initial_cut_pool(const LiftedScenario& lifted, const std::vector<double>& fractions);

/// The linearized SDP and where its variables live.
///
/// Each W_m is a PSD block of size 2n holding the real embedding
/// [[Re W, -Im W], [Im W, Re W]]. For every active (m, l) there are two
/// nonnegative scalars: t = tr(W_m J_l), tied by an equality row, and
/// v = u - log(theta) where u is bounded above by every tangent. Each cached
/// file f has beta_{f,m} >= 1 - sum_l delta_{f,l} u_{m,l}. Uncached files
/// always pay beta = 1, carried in objective_offset.
struct LinearizedSdp {
  ConicProblem problem;
  std::vector<int> t_col;      ///< per (m, l) = m*L + l, -1 when inactive
  std::vector<int> v_col;
  Eigen::MatrixXi beta_col;    ///< F x M, -1 for uncached files
  double objective_offset = 0.0;
  int sinr_rows = 0;
  int power_rows = 0;
};

LinearizedSdp assemble_linearized_sdp(const LiftedScenario& lifted, const CutPool& cuts);

enum class RelaxStatus { optimal, infeasible, not_converged, solver_failed };
std::string to_string(RelaxStatus status);

struct RelaxedSolution {
  RelaxStatus status = RelaxStatus::solver_failed;
  std::vector<Eigen::MatrixXcd> W;  ///< physical units (watts)
  Eigen::MatrixXd beta;             ///< F x M
  Eigen::MatrixXd traces;           ///< L x M, tr(W_m J_l)
  /// Optimum of the last linearized SDP: a lower bound on the smoothed
  /// problem. beta is raised afterwards onto the exact log rows.
  double objective = 0.0;
  double max_violation = 0.0;       ///< of the true log-coverage rows
  /// Violation at the last linearized solution, before beta is raised. This
  /// is what the outer approximation drives below violation_tol.
  double oa_violation = 0.0;
  int cut_rounds = 0;
  int solver_iterations = 0;
  /// Solves accepted at max_iterations with residuals within
  /// kInexactFactor times the solver tolerance.
  int inexact_solves = 0;
  std::vector<double> objective_history;
  CutPool cuts;
};

/// Solves one linearized SDP and decodes it. beta is returned as solved, so
/// the objective is that of the linearization.
RelaxedSolution solve_linearized(const LiftedScenario& lifted, const CutPool& cuts,
                                 const SolverSettings& settings = {});

struct RelaxationSettings {
  int max_cut_rounds = 30;
  double violation_tol = 1e-6;
  double objective_rel_tol = 1e-5;
  /// A new tangent is added for (m, l) when the epigraph overshoots the
  /// true log by more than this.
  double cut_tol = 1e-9;
  std::vector<double> initial_tangents{0.0, 1e-3, 1e-2, 1e-1, 1.0};
  /// Besides the tangent at the incumbent t, split the bracket between the
  /// neighbouring tangent points a < t < b into this many extra points,
  /// evenly in log(x + theta). The LP optimum sits at a kink of the
  /// envelope, so plain Kelley cuts only halve the bracket each round.
  int bracket_points = 7;
  /// Solver tolerance used while the coverage violation is above
  /// `early_violation`; the final rounds always use `solver.tolerance`.
  double early_tolerance = 1e-6;
  double early_violation = 1e-3;
  SolverSettings solver;
};

/// Outer-approximation loop: solve, add tangents at the incumbent traces,
/// repeat until the true log-coverage rows hold. Tangents from `warm_start`
/// (e.g. the final pool of a neighbouring lambda on the same slot) are added
/// to the initial pool; they stay valid for any objective.
RelaxedSolution mm_optimize(const LiftedScenario& lifted, const RelaxationSettings& settings = {},
                            const CutPool* warm_start = nullptr);

/// Worst violation of 1 - sum_l delta log(t + theta) <= beta over cached files.
double coverage_violation(const LiftedScenario& lifted, const Eigen::MatrixXd& traces,
                          const Eigen::MatrixXd& beta);

/// Objective of the relaxed problem for given traces and total power, with
/// beta at its smallest feasible value.
double smoothed_objective(const LiftedScenario& lifted, const Eigen::MatrixXd& traces,
                          double total_power);
/// Same, for rank-one beamformers.
double smoothed_objective(const LiftedScenario& lifted, const Beamformers& w);

/// Hermitian matrix from a real embedding block (any real PSD X of size 2n).
Eigen::MatrixXcd hermitian_from_embedding(const Eigen::MatrixXd& X);
Eigen::MatrixXd real_embedding(const Eigen::MatrixXcd& W);

nlohmann::json to_json(const RelaxedSolution& solution);

}  // namespace cran
