#include <doctest.h>

#include <cmath>

#include "cran/relaxation.hpp"
#include "cran/rounding.hpp"

using namespace cran;

namespace {

// M users, L BSs with 2 antennas, unit noise, CN(0, 1) channels.
SlotProblem small_problem(std::uint64_t seed, int M, int L, CacheMode mode, double S, double lambda,
                          double pmax = 10.0, double gamma_db = 0.0) {
  Rng rng = make_stream(seed, "test-small");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  SlotProblem p;
  p.slot.channels.resize(M, 2 * L);
  for (int i = 0; i < p.slot.channels.size(); ++i) p.slot.channels.data()[i] = {g(rng), g(rng)};
  for (int m = 0; m < M; ++m) p.slot.users.push_back(m);
  p.popularity = zipf_popularity(6, 1.0);
  p.placement = place_caches(p.popularity, L, S, mode, 0.5);
  p.qos = QosConfig::uniform(M, gamma_db, pmax, lambda);
  p.noise_power = 1.0;
  p.antennas_per_bs = 2;
  return p;
}

}  // namespace

TEST_SUITE("relaxation") {

TEST_CASE("lifting examples") {
  Eigen::VectorXcd h(2);
  h << 1.0, std::complex<double>(0, 1);
  Eigen::MatrixXcd H(2, 2);
  H << 1.0, std::complex<double>(0, -1), std::complex<double>(0, 1), 1.0;
  CHECK((lift_channel(h) - H).norm() == 0.0);
  CHECK(lift_channel(Eigen::VectorXcd::Zero(3)).isZero());

  Rng rng = make_stream(1, "lift");
  std::normal_distribution<double> g;
  Eigen::VectorXcd r(6);
  for (int i = 0; i < 6; ++i) r(i) = {g(rng), g(rng)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(lift_channel(r));
  CHECK(std::abs(es.eigenvalues()(5) - r.squaredNorm()) <= 1e-12 * r.squaredNorm());
  CHECK(es.eigenvalues().head(5).cwiseAbs().maxCoeff() <= 1e-12 * r.squaredNorm());
}

TEST_CASE("selection matrices") {
  Eigen::MatrixXd J = selection_matrix(0, 2, 2);
  CHECK(J.diagonal() == Eigen::Vector4d(1, 1, 0, 0));
  for (int L : {1, 3, 7}) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2 * L, 2 * L);
    for (int l = 0; l < L; ++l) {
      const Eigen::MatrixXd Jl = selection_matrix(l, L, 2);
      CHECK((Jl * Jl - Jl).norm() == 0.0);
      sum += Jl;
    }
    CHECK(sum.isIdentity());
  }
  Eigen::VectorXcd w(4);
  w << 1, 2, 3, 4;
  const Eigen::MatrixXcd W = w * w.adjoint();
  CHECK((W * selection_matrix(1, 2, 2).cast<std::complex<double>>()).trace().real() == 25.0);
  CHECK_THROWS(selection_matrix(2, 2, 2));
}

TEST_CASE("embedding round trip") {
  Rng rng = make_stream(2, "embed");
  std::normal_distribution<double> g;
  Eigen::MatrixXcd A(3, 3);
  for (int i = 0; i < 9; ++i) A.data()[i] = {g(rng), g(rng)};
  const Eigen::MatrixXcd W = A * A.adjoint();
  const Eigen::MatrixXd X = real_embedding(W);
  CHECK((X - X.transpose()).norm() == 0.0);
  CHECK((hermitian_from_embedding(X) - W).norm() <= 1e-14 * W.norm());
  CHECK(X.trace() == doctest::Approx(2.0 * W.trace().real()).epsilon(1e-14));
}

TEST_CASE("tangents over-estimate the log on dense grids") {
  // 1e5 points spread over [0, 1e3], denser near zero
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(1e3 * std::pow(i / 99999.0, 4.0));
  int violations = 0;
  for (double theta : {1e-3, 1e-2, 0.1, 1.0}) {
    for (double t0 : {0.0, 1e-6, 1e-3, 0.5, 1.0, 10.0, 100.0}) {
      for (double x : xs) {
        if (tangent_violated(t0, theta, x)) ++violations;
      }
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("cut pool") {
  CutPool pool(2, 3);
  CHECK(pool.add(0, 1, 0.5));
  CHECK_FALSE(pool.add(0, 1, 0.5 + 5e-11));
  CHECK(pool.add(0, 1, 0.5 + 1e-9));
  CHECK(pool.size() == 2);
  CHECK_THROWS(pool.add(0, 1, -1.0));
  CHECK_THROWS(pool.add(0, 1, std::nan("")));
  for (double t : {0.0, 0.01, 0.1, 1.0, 10.0}) pool.add(1, 2, t);
  Eigen::MatrixXd traces = Eigen::MatrixXd::Zero(3, 2);
  traces(2, 1) = 0.3;
  const CutPool near = pool.near(traces, 0.01, 1);
  CHECK(near.points(1, 2).size() == 2);  // 0.1 below, 1.0 above
  CHECK(near.points(0, 1).size() == 1);  // both points lie above t = 0
}

TEST_CASE("assembled SDP examples") {
  SUBCASE("lambda = 0 leaves only the power term") {
    const LiftedScenario s = small_problem(3, 2, 3, CacheMode::coded, 1.0, 0.0).lift();
    const LinearizedSdp sdp = assemble_linearized_sdp(s, initial_cut_pool(s, {0.0, 1.0}));
    CHECK(sdp.objective_offset == 0.0);
    for (int c = sdp.problem.cones.nonneg_offset(); c < sdp.problem.cols(); ++c) CHECK(sdp.problem.c(c) == 0.0);
  }
  SUBCASE("one user, one BS, theta = 1, cut at zero") {
    SlotProblem p = small_problem(4, 1, 1, CacheMode::uncoded, 1.0, 0.5);
    p.theta = 1.0;
    const LiftedScenario s = p.lift();
    CutPool pool(1, 1);
    pool.add(0, 0, 0.0);
    const LinearizedSdp sdp = assemble_linearized_sdp(s, pool);
    // with t = tr(W J), the rows read v - t <= 0 and beta + delta v >= 1, so
    // at the optimum beta = max(0, 1 - delta t)
    const ConicSolution sol = solve(sdp.problem);
    REQUIRE(sol.status == SolveStatus::optimal);
    const double t = sol.x(sdp.t_col[0]);
    const double beta = sol.x(sdp.beta_col(0, 0));
    CHECK(std::abs(beta - std::max(0.0, 1.0 - t)) < 1e-6);
  }
  SUBCASE("no caches: every beta is 1 in the offset") {
    const LiftedScenario s = small_problem(5, 3, 2, CacheMode::none, 0.0, 0.4).lift();
    const LinearizedSdp sdp = assemble_linearized_sdp(s, CutPool(3, 2));
    CHECK((sdp.beta_col.array() < 0).all());
    double expected = 0.0;
    for (int m = 0; m < 3; ++m) expected += 0.4 * s.rate(m);
    CHECK(sdp.objective_offset == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("inconsistent inputs") {
    const LiftedScenario s = small_problem(6, 2, 3, CacheMode::coded, 1.0, 0.5).lift();
    CHECK_THROWS(assemble_linearized_sdp(s, CutPool(2, 3)));  // empty cut lists
    CHECK_THROWS(assemble_linearized_sdp(s, CutPool(3, 3)));
  }
}

TEST_CASE("single user power minimization has the closed form") {
  for (int k = 0; k < 5; ++k) {
    const SlotProblem p = small_problem(100 + k, 1, 3, CacheMode::coded, 1.0, 0.0, 1e3, 10.0);
    const RelaxedSolution r = mm_optimize(p.lift());
    REQUIRE(r.status == RelaxStatus::optimal);
    const double expected = 10.0 / p.slot.channels.row(0).squaredNorm();
    CHECK(std::abs(r.W[0].trace().real() / expected - 1.0) < 1e-5);
  }
}

TEST_CASE("without caches the problem separates") {
  const SlotProblem p0 = small_problem(7, 3, 3, CacheMode::none, 0.0, 0.0);
  const RelaxedSolution r0 = mm_optimize(p0.lift());
  REQUIRE(r0.status == RelaxStatus::optimal);
  for (double lam : {0.2, 0.7}) {
    SlotProblem p = p0;
    p.qos.lambda = lam;
    const LiftedScenario s = p.lift();
    const RelaxedSolution r = mm_optimize(s);
    REQUIRE(r.status == RelaxStatus::optimal);
    double rates = 0.0;
    for (int m = 0; m < 3; ++m) rates += s.rate(m);
    CHECK(std::abs(r.objective - (lam * rates + (1.0 - lam) * r0.objective)) < 1e-6);
    CHECK((r.beta.array() == 1.0).all());
  }
}

TEST_CASE("outer approximation converges to a feasible fixed point") {
  for (auto mode : {CacheMode::uncoded, CacheMode::coded}) {
    for (double lam : {0.3, 0.9}) {
      const SlotProblem p = small_problem(8, 3, 3, mode, 2.0, lam);
      const LiftedScenario s = p.lift();
      const RelaxedSolution r = mm_optimize(s);
      REQUIRE(r.status == RelaxStatus::optimal);
      CHECK(r.cut_rounds <= 30);
      CHECK(r.max_violation <= 1e-6);
      CHECK(coverage_violation(s, r.traces, r.beta) <= 1e-6);
      // SINR and power rows, evaluated on the Hermitian matrices
      for (int m = 0; m < 3; ++m) {
        const double sig = (r.W[m] * s.H[m]).trace().real();
        double intf = 0.0;
        for (int j = 0; j < 3; ++j) {
          if (j != m) intf += (r.W[j] * s.H[m]).trace().real();
        }
        CHECK(sig - s.sinr_targets(m) * intf >= s.sinr_targets(m) * (1.0 - 1e-6));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r.W[m], Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues()(0) >= -1e-6);
      }
      CHECK(r.traces.rowwise().sum().maxCoeff() <= s.max_bs_power * (1.0 + 1e-6));
      CHECK((r.beta.array() >= -1e-6).all());
      // objective history never decreases by more than solver noise
      for (size_t i = 1; i < r.objective_history.size(); ++i) {
        CHECK(r.objective_history[i] >= r.objective_history[i - 1] - 1e-6 * (1.0 + std::abs(r.objective)));
      }
      const RelaxedSolution again = solve_linearized(s, r.cuts);
      CHECK(std::abs(again.objective - r.objective) < 1e-8 * std::max(1.0, std::abs(r.objective)) + 1e-8);
    }
  }
}

TEST_CASE("more cuts never lower the linearized optimum") {
  for (int k = 0; k < 10; ++k) {
    const SlotProblem p = small_problem(200 + k, 2, 3, CacheMode::coded, 1.0, 0.6);
    const LiftedScenario s = p.lift();
    const CutPool base = initial_cut_pool(s, {0.0, 1.0});
    CutPool more = base;
    Rng rng = make_stream(9, "cuts", k);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int m = 0; m < 2; ++m) {
      for (int l = 0; l < 3; ++l) more.add(m, l, u(rng));
    }
    const RelaxedSolution a = solve_linearized(s, base), b = solve_linearized(s, more);
    REQUIRE(a.status == RelaxStatus::optimal);
    REQUIRE(b.status == RelaxStatus::optimal);
    CHECK(b.objective >= a.objective - 1e-7 * (1.0 + std::abs(a.objective)));
  }
}

TEST_CASE("relaxed optimum bounds rank-one points under the smoothed model") {
  for (int k = 0; k < 4; ++k) {
    const SlotProblem p = small_problem(300 + k, 3, 3, CacheMode::coded, 2.0, 0.5);
    const LiftedScenario s = p.lift();
    const RelaxedSolution r = mm_optimize(s);
    REQUIRE(r.status == RelaxStatus::optimal);
    Rng rng = make_stream(1, "bound", k);
    RoundingSettings rs;
    rs.trials = 100;
    const RoundingReport rep = gaussian_randomize(r.W, p, rs, rng);
    REQUIRE(rep.feasible());
    CHECK(smoothed_objective(s, rep.w) >= r.objective - 1e-6);
  }
}

TEST_CASE("infeasible SINR targets are reported") {
  // two users on the same channel cannot both reach 10 dB
  SlotProblem p = small_problem(10, 2, 1, CacheMode::none, 0.0, 0.5, 10.0, 10.0);
  p.slot.channels.row(1) = p.slot.channels.row(0);
  CHECK(mm_optimize(p.lift()).status == RelaxStatus::infeasible);
}

TEST_CASE("warm start reproduces the cold answer") {
  const SlotProblem p = small_problem(11, 3, 3, CacheMode::coded, 2.0, 0.4);
  const LiftedScenario s = p.lift();
  const RelaxedSolution cold = mm_optimize(s);
  SlotProblem q = p;
  q.qos.lambda = 0.6;
  const LiftedScenario s2 = q.lift();
  const RelaxedSolution c2 = mm_optimize(s2);
  const RelaxedSolution w2 = mm_optimize(s2, {}, &cold.cuts);
  REQUIRE(c2.status == RelaxStatus::optimal);
  REQUIRE(w2.status == RelaxStatus::optimal);
  CHECK(std::abs(c2.objective - w2.objective) < 1e-5 * (1.0 + std::abs(c2.objective)));
}

TEST_CASE("lifting validates its inputs") {
  SlotProblem p = small_problem(12, 2, 2, CacheMode::none, 0.0, 0.5);
  p.slot.channels.row(1).setZero();
  CHECK_THROWS_AS(p.lift(), std::invalid_argument);
  p = small_problem(12, 2, 2, CacheMode::none, 0.0, 0.5);
  p.theta = 0.0;
  CHECK_THROWS_AS(p.lift(), std::invalid_argument);
  p = small_problem(12, 2, 2, CacheMode::none, 0.0, 1.0);
  CHECK(p.lift().lambda == kMaxLambda);
}

TEST_CASE("solution JSON") {
  const SlotProblem p = small_problem(13, 2, 2, CacheMode::uncoded, 1.0, 0.5);
  const RelaxedSolution r = mm_optimize(p.lift());
  const auto j = to_json(r);
  CHECK(j["status"] == "optimal");
  CHECK(j["block_power"].size() == 2);
  CHECK(j["eigen_ratio"].size() == 2);
}

}
