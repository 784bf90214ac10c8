#include <doctest.h>

#include <cmath>

#include "cran/relaxation.hpp"
#include "cran/rounding.hpp"

using namespace cran;

namespace {

SlotProblem problem(std::uint64_t seed, int M, int L, double lambda, double pmax = 10.0) {
  Rng rng = make_stream(seed, "test-rounding");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  SlotProblem p;
  p.slot.channels.resize(M, 2 * L);
  for (int i = 0; i < p.slot.channels.size(); ++i) p.slot.channels.data()[i] = {g(rng), g(rng)};
  for (int m = 0; m < M; ++m) p.slot.users.push_back(m);
  p.popularity = zipf_popularity(6, 1.0);
  p.placement = place_caches(p.popularity, L, 2.0, CacheMode::coded, 0.5);
  p.qos = QosConfig::uniform(M, 0.0, pmax, lambda);
  p.noise_power = 1.0;
  p.antennas_per_bs = 2;
  return p;
}

// A full-rank PSD matrix per user, in place of a relaxed solution.
std::vector<Eigen::MatrixXcd> random_covariances(int M, int n, Rng& rng, double scale) {
  std::normal_distribution<double> g;
  std::vector<Eigen::MatrixXcd> W;
  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXcd A(n, n);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = {g(rng), g(rng)};
    W.push_back(scale * A * A.adjoint() / n);
  }
  return W;
}

}  // namespace

TEST_SUITE("rounding") {

TEST_CASE("rank-one extraction examples") {
  Eigen::VectorXcd w(3);
  w << std::complex<double>(0.3, -1.0), 2.0, std::complex<double>(0, 0.5);
  const Eigen::MatrixXcd W = w * w.adjoint();
  const auto got = extract_rank1(W);
  REQUIRE(got.has_value());
  CHECK(((*got) * got->adjoint() - W).norm() <= 1e-8);
  // largest-magnitude entry is real and nonnegative
  Eigen::Index k = 0;
  got->cwiseAbs().maxCoeff(&k);
  CHECK(k == 1);
  CHECK((*got)(1).imag() == 0.0);
  CHECK((*got)(1).real() > 0.0);

  CHECK_FALSE(extract_rank1(Eigen::MatrixXcd::Identity(2, 2)).has_value());

  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 1e-9;
  const auto e1 = extract_rank1(D);
  REQUIRE(e1.has_value());
  CHECK(std::abs((*e1)(0) - 1.0) < 1e-12);
  CHECK(std::abs((*e1)(1)) < 1e-12);

  Eigen::MatrixXcd N = Eigen::MatrixXcd::Identity(2, 2);
  N(1, 1) = -0.5;
  CHECK_THROWS_AS(extract_rank1(N), std::invalid_argument);
  CHECK(eigen_ratio(Eigen::MatrixXcd::Identity(3, 3)) == doctest::Approx(1.0));
  CHECK(eigen_ratio(W) < 1e-12);
}

TEST_CASE("balanced powers meet the targets with equality") {
  Rng rng = make_stream(2, "balance");
  std::normal_distribution<double> g;
  // single user: p = gamma sigma^2 / |h^H u / |u||^2 for any direction
  Eigen::MatrixXcd h(1, 4), u(4, 1);
  for (int i = 0; i < 4; ++i) {
    h(0, i) = {g(rng), g(rng)};
    u(i, 0) = {g(rng), g(rng)};
  }
  const double gamma = 7.0, sigma2 = 0.3;
  const auto p = balance_powers(u, h, Eigen::VectorXd::Constant(1, gamma), sigma2);
  REQUIRE(p.has_value());
  const Eigen::VectorXcd unit = u.col(0) / u.col(0).norm();
  const double proj = std::norm((h.row(0).conjugate() * unit)(0));
  CHECK((*p)(0) == doctest::Approx(gamma * sigma2 / proj).epsilon(1e-12));
  const Beamformers w = unit * std::sqrt((*p)(0));
  CHECK(sinr_of(0, w, h, sigma2) == doctest::Approx(gamma).epsilon(1e-12));

  // several users
  Eigen::MatrixXcd H(3, 6), U(6, 3);
  for (int i = 0; i < H.size(); ++i) H.data()[i] = {g(rng), g(rng)};
  // zero-forcing directions plus a perturbation, so the cross gains are
  // small but nonzero and the balancing system has a positive solution.
  // Rows of H hold h_m, so the gains come from conj(H) U.
  const Eigen::MatrixXcd Hc = H.conjugate();
  U = Hc.adjoint() * (Hc * Hc.adjoint()).inverse();
  for (int i = 0; i < U.size(); ++i) U.data()[i] += 0.02 * std::complex<double>(g(rng), g(rng));
  const Eigen::VectorXd targets = Eigen::Vector3d(1.0, 0.5, 2.0);
  const auto pm = balance_powers(U, H, targets, 1.0);
  REQUIRE(pm.has_value());
  Beamformers W(6, 3);
  for (int m = 0; m < 3; ++m) W.col(m) = U.col(m).normalized() * std::sqrt((*pm)(m));
  for (int m = 0; m < 3; ++m) CHECK(sinr_of(m, W, H, 1.0) == doctest::Approx(targets(m)).epsilon(1e-10));
}

TEST_CASE("rank-one relaxations bypass randomization") {
  const SlotProblem p = problem(3, 3, 3, 0.0);
  const RelaxedSolution r = mm_optimize(p.lift());
  REQUIRE(r.status == RelaxStatus::optimal);
  Rng rng = make_stream(1, "r");
  const RoundingReport rep = gaussian_randomize(r.W, p, RoundingSettings{}, rng);
  CHECK(rep.method == RoundingMethod::eigen);
  CHECK(rep.trials_attempted == 0);
  CHECK(rep.sinr_ok);
  CHECK(rep.power_ok);
  // power minimization: the rounded power is the relaxed one
  CHECK(std::abs(rep.cost.power_cost - r.objective) <= 1e-6 * r.objective);
}

TEST_CASE("randomization is reproducible and feasible") {
  const int M = 3, L = 3;
  const SlotProblem p = problem(4, M, L, 0.5);
  Rng wr = make_stream(4, "cov");
  const auto W = random_covariances(M, 2 * L, wr, 1.0);
  RoundingSettings s;
  s.trials = 200;
  Rng a = make_stream(7, "trial"), b = make_stream(7, "trial");
  const RoundingReport ra = gaussian_randomize(W, p, s, a), rb = gaussian_randomize(W, p, s, b);
  REQUIRE(ra.method == RoundingMethod::randomized);
  CHECK(ra.trials_attempted == 200);
  CHECK(ra.objective == rb.objective);
  CHECK(ra.w == rb.w);
  CHECK(to_json(ra).dump() == to_json(rb).dump());
  for (int m = 0; m < M; ++m) {
    CHECK(sinr_of(m, ra.w, p.slot.channels, 1.0) >= p.qos.sinr_targets(m) * (1.0 - 1e-8));
  }
  CHECK((bs_powers(ra.w, L, 2).array() <= p.qos.max_bs_power_w * (1.0 + 1e-8)).all());
}

TEST_CASE("more trials never worsen the best objective") {
  const int M = 3, L = 3;
  const SlotProblem p = problem(5, M, L, 0.5);
  Rng wr = make_stream(5, "cov");
  const auto W = random_covariances(M, 2 * L, wr, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int trials : {1, 5, 25, 125, 400}) {
    RoundingSettings s;
    s.trials = trials;
    Rng rng = make_stream(8, "prefix");
    const RoundingReport rep = gaussian_randomize(W, p, s, rng);
    if (!rep.feasible()) continue;
    CHECK(rep.objective <= prev);
    prev = rep.objective;
  }
  CHECK(std::isfinite(prev));
}

TEST_CASE("rounded objective sits above the relaxation") {
  for (int k = 0; k < 4; ++k) {
    const SlotProblem p = problem(20 + k, 3, 3, 0.6);
    const RelaxedSolution r = mm_optimize(p.lift());
    REQUIRE(r.status == RelaxStatus::optimal);
    Rng rng = make_stream(3, "above", k);
    RoundingSettings s;
    s.trials = 200;
    const RoundingReport rep = gaussian_randomize(r.W, p, s, rng);
    REQUIRE(rep.feasible());
    CHECK(rep.smoothed_objective >= r.objective - 1e-6);
    CHECK(rep.objective == rep.cost.total);
  }
}

TEST_CASE("paper-faithful mode keeps raw samples only") {
  const SlotProblem p = problem(6, 3, 3, 0.5);
  Rng wr = make_stream(6, "cov");
  const auto W = random_covariances(3, 6, wr, 1.0);
  RoundingSettings s;
  s.trials = 300;
  s.paper_faithful = true;
  Rng rng = make_stream(2, "faithful");
  const RoundingReport rep = gaussian_randomize(W, p, s, rng);
  if (rep.feasible()) {
    CHECK(rep.candidate == "raw");
  } else {
    CHECK(rep.method == RoundingMethod::failed);
    CHECK(rep.trials_attempted == 300);
  }
}

TEST_CASE("no feasible candidate is reported as failed") {
  // caps far below what the SINR targets need
  SlotProblem p = problem(7, 3, 3, 0.5, 1e-6);
  p.qos.sinr_targets.setConstant(100.0);
  Rng wr = make_stream(7, "cov");
  const auto W = random_covariances(3, 6, wr, 1.0);
  RoundingSettings s;
  s.trials = 20;
  Rng rng = make_stream(3, "fail");
  const RoundingReport rep = gaussian_randomize(W, p, s, rng);
  CHECK(rep.method == RoundingMethod::failed);
  CHECK_FALSE(rep.feasible());
  CHECK(rep.trials_attempted == 20);
  CHECK(to_json(rep)["method"] == "failed");
}

TEST_CASE("bad inputs") {
  const SlotProblem p = problem(8, 2, 2, 0.5);
  Rng rng = make_stream(1, "bad");
  RoundingSettings s;
  s.trials = 0;
  std::vector<Eigen::MatrixXcd> W(2, Eigen::MatrixXcd::Identity(4, 4));
  CHECK_THROWS(gaussian_randomize(W, p, s, rng));
  s.trials = 1;
  W.pop_back();
  CHECK_THROWS(gaussian_randomize(W, p, s, rng));
}

}
