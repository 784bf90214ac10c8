#include <doctest.h>

#include <cmath>

#include "cran/oracle.hpp"

using namespace cran;

TEST_SUITE("oracle") {

TEST_CASE("single-user closed form") {
  Eigen::VectorXcd h = Eigen::VectorXcd::Zero(2);
  h(0) = 1.0;
  CHECK(single_user_power_oracle(h, 1.0, 1.0).power == 1.0);
  h(0) = 2.0;
  const auto o = single_user_power_oracle(h, 10.0, 1.0);
  CHECK(o.power == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(o.w.squaredNorm() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(single_user_power_oracle(h, 1e-12, 1.0).power < 1e-12);
  CHECK_THROWS(single_user_power_oracle(Eigen::VectorXcd::Zero(3), 1.0, 1.0));
}

TEST_CASE("generated SDPs carry a valid certificate") {
  for (int k = 0; k < 20; ++k) {
    Rng rng = make_stream(1, "test-known", k);
    SdpDims dims;
    dims.psd_sizes = {1 + k % 5, 2};
    dims.nonneg = k % 4;
    dims.rows = 1 + k % 6;
    const KnownSdp s = random_sdp_with_known_optimum(dims, rng);
    const Residuals r = kkt_residuals(s.problem, s.x, s.y);
    CHECK(r.primal <= 1e-12);
    CHECK(r.dual <= 1e-12);
    CHECK(r.gap <= 1e-12);
    const ConicSolution sol = solve(s.problem);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(std::abs(sol.primal_objective - s.optimum) <= 1e-7 * std::max(1.0, std::abs(s.optimum)));
  }
}

TEST_CASE("degenerate requests are rejected") {
  Rng rng = make_stream(2, "test-bad-dims");
  CHECK_THROWS(random_sdp_with_known_optimum(SdpDims{}, rng));
  CHECK_THROWS(random_sdp_with_known_optimum(SdpDims{{11}, 0, 3}, rng));
  CHECK_THROWS(random_sdp_with_known_optimum(SdpDims{{2}, 0, 0}, rng));
}

TEST_CASE("grid check examples") {
  ConicProblem trace_min;
  trace_min.cones.psd_sizes = {2};
  trace_min.c = svec(Eigen::Matrix2d::Identity());
  trace_min.add_entry(trace_min.add_row(RowSense::ge, 1.0), 0, 1.0);
  const GridResult g = grid_check_tiny_sdp(trace_min);
  REQUIRE(g.feasible);
  CHECK(std::abs(g.objective - 1.0) <= grid_tolerance(trace_min, solve(trace_min).y));

  ConicProblem infeasible = trace_min;
  infeasible.b(0) = -1.0;
  infeasible.senses[0] = RowSense::le;
  CHECK_FALSE(grid_check_tiny_sdp(infeasible).feasible);
  CHECK(solve(infeasible).status == SolveStatus::infeasible);

  ConicProblem lmax;
  lmax.cones.psd_sizes = {2};
  lmax.c = -svec(Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix());
  const int r = lmax.add_row(RowSense::eq, 1.0);
  lmax.add_entry(r, 0, 1.0);
  lmax.add_entry(r, 2, 1.0);
  const GridResult gl = grid_check_tiny_sdp(lmax);
  REQUIRE(gl.feasible);
  CHECK(std::abs(-gl.objective - 2.0) <= grid_tolerance(lmax, solve(lmax).y));
}

TEST_CASE("grid check agrees with the solver on random tiny problems") {
  for (int k = 0; k < 5; ++k) {
    Rng rng = make_stream(3, "test-tiny", k);
    const ConicProblem p = random_tiny_sdp(rng);
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    const Eigen::MatrixXd W = smat(s.x, 2);
    CHECK(W.maxCoeff() < 2.0);
    const GridResult g = grid_check_tiny_sdp(p);
    REQUIRE(g.feasible);
    CHECK(std::abs(g.objective - s.primal_objective) <= grid_tolerance(p, s.y));
  }
}

TEST_CASE("grid check rejects unsupported shapes") {
  ConicProblem p;
  p.cones.psd_sizes = {3};
  p.c = Eigen::VectorXd::Zero(6);
  CHECK_THROWS(grid_check_tiny_sdp(p));
  p.cones.psd_sizes = {2};
  p.cones.nonneg = 1;
  p.c = Eigen::VectorXd::Zero(4);
  CHECK_THROWS(grid_check_tiny_sdp(p));
  p.cones.nonneg = 0;
  p.c = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 4; ++i) p.add_row(RowSense::ge, 0.0);
  CHECK_THROWS(grid_check_tiny_sdp(p));
}

TEST_CASE("reports") {
  const OracleReport ok = make_report("a", 2.0, 2.0 + 1e-9, 1e-8, true);
  CHECK(ok.pass);
  CHECK(ok.rel_error == doctest::Approx(5e-10));
  const OracleReport bad = make_report("b", 2.0, 2.1, 1e-3, false);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(make_report("c", 1.0, std::nan(""), 1.0, false).pass);
  const std::string text = format_reports({ok, bad});
  CHECK(text.find("FAIL") != std::string::npos);
  CHECK(text.find("1/2 oracle checks passed") != std::string::npos);
  CHECK(to_json(ok)["pass"] == true);
}

TEST_CASE("small oracle suite passes") {
  OracleSuiteOptions opt;
  opt.single_user_cases = 3;
  opt.random_sdps = 5;
  opt.grid_sdps = 2;
  const auto reports = run_oracle_suite(opt);
  CHECK(reports.size() == 3 * 2 + 5 * 2 + 3 + 2);
  for (const auto& r : reports) {
    INFO(r.name);
    CHECK(r.pass);
  }
}

}
