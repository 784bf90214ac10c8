#include <doctest.h>

#include <cmath>

#include "cran/conic.hpp"
#include "cran/oracle.hpp"
#include "cran/relaxation.hpp"

using namespace cran;

namespace {

// min x s.t. x >= 1, x >= 0
ConicProblem tiny_lp() {
  ConicProblem p;
  p.cones.nonneg = 1;
  p.c = Eigen::VectorXd::Ones(1);
  p.add_entry(p.add_row(RowSense::ge, 1.0), 0, 1.0);
  return p;
}

// min t - s  s.t.  X = (t - s) I - A  PSD, written with X as the block and t, s >= 0
ConicProblem lambda_max_problem(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  ConicProblem p;
  p.cones.psd_sizes = {n};
  p.cones.nonneg = 2;
  p.c = Eigen::VectorXd::Zero(p.cols());
  const int t = p.cones.nonneg_offset();
  p.c(t) = 1.0;
  p.c(t + 1) = -1.0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      // X_ij - (t - s) [i == j] = -A_ij
      const int r = p.add_row(RowSense::eq, -A(i, j));
      p.add_entry(r, p.cones.psd_offset(0) + svec_index(n, i, j), i == j ? 1.0 : 1.0 / std::sqrt(2.0));
      if (i == j) {
        p.add_entry(r, t, -1.0);
        p.add_entry(r, t + 1, 1.0);
      }
    }
  }
  return p;
}

}  // namespace

TEST_SUITE("conic") {

TEST_CASE("svec layout") {
  CHECK(svec_size(3) == 6);
  CHECK(svec_index(3, 0, 0) == 0);
  CHECK(svec_index(3, 1, 0) == 1);
  CHECK(svec_index(3, 0, 1) == 1);
  CHECK(svec_index(3, 1, 1) == 3);
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << 1, 2, 2, 3;
  B << -1, 0.5, 0.5, 4;
  CHECK(svec(A).dot(svec(B)) == doctest::Approx((A * B).trace()).epsilon(1e-15));
  CHECK((smat(svec(A), 2) - A).norm() == 0.0);
}

TEST_CASE("scalar LP") {
  const ConicSolution s = solve(tiny_lp());
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("single-user beamforming SDP") {
  // min tr(W) s.t. tr(W h h^T) >= 1 with h = [1, 1]
  ConicProblem p;
  p.cones.psd_sizes = {2};
  p.c = svec(Eigen::Matrix2d::Identity());
  const Eigen::VectorXd hh = svec(Eigen::Matrix2d::Ones());
  const int r = p.add_row(RowSense::ge, 1.0);
  for (int j = 0; j < 3; ++j) p.add_entry(r, j, hh(j));
  const ConicSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(std::abs(s.primal_objective - 0.5) < 1e-7);
  const Eigen::MatrixXd W = smat(s.x, 2);
  CHECK((W - Eigen::Matrix2d::Constant(0.25)).norm() < 1e-6);
}

TEST_CASE("largest eigenvalue") {
  Rng rng = make_stream(2, "test-lmax");
  std::normal_distribution<double> g;
  for (int n : {2, 4, 7}) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    A = 0.5 * (A + A.transpose()).eval();
    const ConicSolution s = solve(lambda_max_problem(A));
    REQUIRE(s.status == SolveStatus::optimal);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    CHECK(std::abs(s.primal_objective - es.eigenvalues()(n - 1)) <= 1e-7);
  }
}

TEST_CASE("infeasible and unbounded problems are detected") {
  ConicProblem inf;
  inf.cones.nonneg = 1;
  inf.c = Eigen::VectorXd::Ones(1);
  inf.add_entry(inf.add_row(RowSense::le, -1.0), 0, 1.0);
  CHECK(solve(inf).status == SolveStatus::infeasible);

  ConicProblem unb;
  unb.cones.nonneg = 2;
  unb.c = Eigen::Vector2d(-1.0, 0.0);
  const int r = unb.add_row(RowSense::eq, 1.0);
  unb.add_entry(r, 0, 1.0);
  unb.add_entry(r, 1, -1.0);
  CHECK(solve(unb).status == SolveStatus::unbounded);

  ConicProblem psd_inf;
  psd_inf.cones.psd_sizes = {2};
  psd_inf.c = svec(Eigen::Matrix2d::Identity());
  psd_inf.add_entry(psd_inf.add_row(RowSense::le, -1.0), 0, 1.0);
  CHECK(solve(psd_inf).status == SolveStatus::infeasible);
}

TEST_CASE("malformed input is rejected before iterating") {
  ConicProblem p = tiny_lp();
  p.c = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  p = tiny_lp();
  p.add_entry(0, 5, 1.0);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  p = tiny_lp();
  p.add_entry(3, 0, 1.0);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  SolverSettings bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(solve(tiny_lp(), bad), std::invalid_argument);
}

TEST_CASE("kkt residual examples") {
  const ConicProblem p = tiny_lp();
  Eigen::VectorXd x(1), y(1);
  x << 1.0;
  y << 1.0;
  const Residuals r = kkt_residuals(p, x, y);
  CHECK(r.primal <= 1e-15);
  CHECK(r.dual <= 1e-15);
  CHECK(r.gap <= 1e-15);
  x << 1.0 - 1e-3;
  CHECK(kkt_residuals(p, x, y).primal >= 1e-4);
}

TEST_CASE("optimal status implies residuals within tolerance") {
  for (int k = 0; k < 20; ++k) {
    Rng rng = make_stream(12, "test-conic-random", k);
    SdpDims dims;
    dims.psd_sizes = {3, 2};
    dims.nonneg = 3;
    dims.rows = 6;
    const KnownSdp known = random_sdp_with_known_optimum(dims, rng);
    for (double tol : {1e-6, 1e-8}) {
      SolverSettings s;
      s.tolerance = tol;
      const ConicSolution sol = solve(known.problem, s);
      REQUIRE(sol.status == SolveStatus::optimal);
      CHECK(sol.residuals.primal <= tol);
      CHECK(sol.residuals.dual <= tol);
      CHECK(sol.residuals.gap <= tol);
      const Residuals r = kkt_residuals(known.problem, sol);
      CHECK(std::max({r.primal, r.dual, r.gap}) <= tol);
    }
  }
}

TEST_CASE("iterates stay interior and the reported gap matches the objectives") {
  Rng rng = make_stream(13, "test-conic-path");
  SdpDims dims;
  dims.psd_sizes = {4};
  dims.nonneg = 2;
  dims.rows = 5;
  const KnownSdp known = random_sdp_with_known_optimum(dims, rng);
  SolverSettings s;
  int seen = 0;
  bool interior = true;
  s.on_iteration = [&](const IterationInfo& it) {
    ++seen;
    if (!(it.min_cone_eig_s > 0.0) || !(it.min_cone_eig_z > 0.0) || !(it.tau > 0.0)) interior = false;
  };
  const ConicSolution sol = solve(known.problem, s);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(seen == sol.iterations + 1);  // the starting point is reported too
  CHECK(interior);
  // weak duality at the returned point, up to the gap tolerance
  CHECK(sol.primal_objective >= sol.dual_objective - 1e-8 * (1.0 + std::abs(sol.primal_objective)));
}

TEST_CASE("solves are deterministic") {
  Rng rng = make_stream(14, "test-conic-det");
  SdpDims dims;
  dims.psd_sizes = {5, 3};
  dims.nonneg = 4;
  dims.rows = 8;
  const KnownSdp known = random_sdp_with_known_optimum(dims, rng);
  const ConicSolution a = solve(known.problem), b = solve(known.problem);
  CHECK(std::abs(a.primal_objective - b.primal_objective) <= 1e-10);
  CHECK(a.x == b.x);
}

TEST_CASE("Hermitian embeddings are solved like any other block") {
  // Two-user power minimization on complex channels, in real-embedded form,
  // against its own objective computed from the Hermitian matrices.
  Eigen::MatrixXcd h(2, 2);
  h << std::complex<double>(1, 0.5), std::complex<double>(0.2, -1), std::complex<double>(-0.3, 0.4),
      std::complex<double>(1.2, 0.1);
  const int n = 2;
  ConicProblem p;
  p.cones.psd_sizes = {2 * n, 2 * n};
  p.c = Eigen::VectorXd::Zero(p.cols());
  for (int b = 0; b < 2; ++b) {
    p.c.segment(p.cones.psd_offset(b), svec_size(2 * n)) = 0.5 * svec(Eigen::MatrixXd::Identity(2 * n, 2 * n));
  }
  const double gamma = 2.0;
  for (int m = 0; m < 2; ++m) {
    const Eigen::VectorXcd hm = h.row(m).transpose();
    const Eigen::MatrixXd E = real_embedding(hm * hm.adjoint());
    const int r = p.add_row(RowSense::ge, gamma);
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd e = 0.5 * svec(E) * (j == m ? 1.0 : -gamma);
      for (int k = 0; k < e.size(); ++k) {
        if (e(k) != 0.0) p.add_entry(r, p.cones.psd_offset(j) + k, e(k));
      }
    }
  }
  const ConicSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  double power = 0.0;
  for (int m = 0; m < 2; ++m) {
    const Eigen::MatrixXd X = smat(s.x.segment(p.cones.psd_offset(m), svec_size(2 * n)), 2 * n);
    const Eigen::MatrixXcd W = hermitian_from_embedding(X);
    power += W.trace().real();
    // block structure of the embedding is preserved
    CHECK((X.topLeftCorner(n, n) - X.bottomRightCorner(n, n)).norm() < 1e-9);
    CHECK((X.topRightCorner(n, n) + X.bottomLeftCorner(n, n)).norm() < 1e-9);
  }
  CHECK(std::abs(power - s.primal_objective) < 1e-8);
}

TEST_CASE("problem JSON round trip") {
  Rng rng = make_stream(15, "test-conic-json");
  SdpDims dims;
  dims.psd_sizes = {3};
  dims.nonneg = 2;
  dims.rows = 4;
  const KnownSdp known = random_sdp_with_known_optimum(dims, rng);
  const ConicProblem back = conic_problem_from_json(nlohmann::json::parse(to_json(known.problem).dump()));
  CHECK(back.c == known.problem.c);
  CHECK(back.b == known.problem.b);
  CHECK(back.entries.size() == known.problem.entries.size());
  CHECK(solve(back).primal_objective == solve(known.problem).primal_objective);
  const auto js = to_json(solve(back));
  CHECK(js["status"] == "optimal");
}

TEST_CASE("default settings") {
  const SolverSettings s;
  CHECK(s.tolerance == 1e-8);
  CHECK(s.max_iterations == 100);
  CHECK(s.regularization == 1e-12);
}

}
