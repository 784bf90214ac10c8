#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cran {

// Standard form handled by the solver:
//
//   minimize    c'x
//   subject to  a_i'x  (= | <= | >=)  b_i      for every row i
//               x in  S^{n_1}_+ x ... x S^{n_k}_+ x R^p_+
//
// The variable vector lists the PSD blocks first, each in scaled-vector form,
// followed by the nonnegative orthant. A symmetric n x n block X occupies
// n(n+1)/2 entries, lower triangle in column-major order, with off-diagonal
// entries multiplied by sqrt(2) so that svec(A)'svec(X) = tr(AX).

enum class RowSense { eq, le, ge };

struct ConeLayout {
  std::vector<int> psd_sizes;
  int nonneg = 0;

  int psd_offset(int block) const;
  int nonneg_offset() const;
  int dimension() const;
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct ConicProblem {
  ConeLayout cones;
  Eigen::VectorXd c;
  std::vector<Triplet> entries;
  Eigen::VectorXd b;
  std::vector<RowSense> senses;

  int rows() const { return static_cast<int>(b.size()); }
  int cols() const { return cones.dimension(); }

  /// Throws std::invalid_argument on inconsistent dimensions or
  /// out-of-range triplets.
  void validate() const;

  /// Appends a row and returns its index.
  int add_row(RowSense sense, double rhs);
  void add_entry(int row, int col, double value) { entries.push_back({row, col, value}); }
  /// Adds the coefficient for <A, X_block> where A is symmetric with entry
  /// A(i,j) = A(j,i) = value. Handles the svec scaling.
  void add_psd_entry(int row, int block, int i, int j, double value);
};

int svec_size(int n);
int svec_index(int n, int i, int j);
Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);

enum class SolveStatus { optimal, infeasible, unbounded, max_iterations };
std::string to_string(SolveStatus status);

struct IterationInfo {
  int iteration = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double tau = 0.0;
  double kappa = 0.0;
  /// Smallest eigenvalue over all cone blocks of s and z.
  double min_cone_eig_s = 0.0;
  double min_cone_eig_z = 0.0;
};

struct SolverSettings {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double regularization = 1e-12;
  /// Called at every iterate, the starting point included.
  std::function<void(const IterationInfo&)> on_iteration;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::max_iterations;
  Eigen::VectorXd x;  ///< primal point (svec blocks, then orthant)
  Eigen::VectorXd y;  ///< row multipliers: = free, <= nonpositive, >= nonnegative
  Eigen::VectorXd s;  ///< row slacks, oriented nonnegative; zero for = rows
  Residuals residuals;
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

/// Scaled KKT residuals of (x, y) for the problem:
///   primal: ||row violations, cone violations of x|| / (1 + ||b||)
///   dual:   ||cone violations of c - A'y, sign violations of y|| / (1 + ||c||)
///   gap:    |c'x - b'y| / (1 + |c'x| + |b'y|)
Residuals kkt_residuals(const ConicProblem& problem, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y);
Residuals kkt_residuals(const ConicProblem& problem, const ConicSolution& solution);

nlohmann::json to_json(const ConicProblem& problem);
ConicProblem conic_problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConicSolution& solution);

}  // namespace cran
