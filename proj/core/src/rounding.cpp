#include "cran/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace cran {

LiftedScenario SlotProblem::lift() const {
  return lift_scenario(slot, placement, popularity, qos, noise_power, antennas_per_bs, theta);
}

CostBreakdown SlotProblem::cost(const Beamformers& w) const {
  return network_cost(w, placement, popularity, qos, antennas_per_bs);
}

bool SlotProblem::feasible(const Beamformers& w, double rel_tol) const {
  return satisfies_qos(w, slot.channels, noise_power, qos, antennas_per_bs, rel_tol);
}

std::string to_string(RoundingMethod method) {
  switch (method) {
    case RoundingMethod::eigen: return "eigen";
    case RoundingMethod::randomized: return "randomized";
    case RoundingMethod::failed: return "failed";
  }
  return "failed";
}

double eigen_ratio(const Eigen::MatrixXcd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double top = ev(ev.size() - 1);
  if (ev.size() < 2 || !(top > 0.0)) return 0.0;
  return std::max(ev(ev.size() - 2), 0.0) / top;
}

std::optional<Eigen::VectorXcd> extract_rank1(const Eigen::MatrixXcd& W, double rank_tol) {
  if (W.rows() != W.cols() || W.rows() == 0) throw std::invalid_argument("W must be square and nonempty");
  if (!W.allFinite()) throw std::invalid_argument("W is not finite");
  const double asym = (W - W.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, W.cwiseAbs().maxCoeff())) throw std::invalid_argument("W is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (W + W.adjoint()));
  const auto& ev = es.eigenvalues();
  const auto n = ev.size();
  const double top = ev(n - 1);
  if (ev(0) < -1e-7 * std::max(1.0, top)) throw std::invalid_argument("W has a negative eigenvalue");
  if (!(top > 0.0)) return Eigen::VectorXcd::Zero(n);
  if (n > 1 && std::max(ev(n - 2), 0.0) / top > rank_tol) return std::nullopt;
  Eigen::VectorXcd w = std::sqrt(top) * es.eigenvectors().col(n - 1);
  Eigen::Index k = 0;
  w.cwiseAbs().maxCoeff(&k);
  const std::complex<double> phase = std::conj(w(k)) / std::abs(w(k));
  w *= phase;
  w(k) = std::abs(w(k));
  return w;
}

std::optional<Eigen::VectorXd> balance_powers(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& channels,
                                              const Eigen::VectorXd& sinr_targets, double noise_power) {
  const auto M = u.cols();
  if (channels.rows() != M || sinr_targets.size() != M || channels.cols() != u.rows()) {
    throw std::invalid_argument("balance_powers: dimension mismatch");
  }
  // p_m g_mm / gamma_m - sum_{j != m} p_j g_mj = sigma^2, with g_mj = |h_m^H u_j|^2
  // for unit u_j. Rows are divided by sigma^2.
  Eigen::MatrixXd A(M, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const Eigen::RowVectorXcd g = channels.row(m).conjugate() * u;
    for (Eigen::Index j = 0; j < M; ++j) {
      const double nrm = u.col(j).squaredNorm();
      if (!(nrm > 0.0)) return std::nullopt;
      const double gain = std::norm(g(j)) / nrm / noise_power;
      A(m, j) = j == m ? gain / sinr_targets(m) : -gain;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd p = lu.solve(Eigen::VectorXd::Ones(M));
  if (!p.allFinite() || (p.array() < 0.0).any()) return std::nullopt;
  return p;
}

namespace {

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (W + W.adjoint()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.cast<std::complex<double>>().asDiagonal() * es.eigenvectors().adjoint();
}

struct Best {
  bool found = false;
  double objective = std::numeric_limits<double>::infinity();
  Beamformers w;
  std::string candidate;
  int feasible = 0;
};

class CandidateJudge {
 public:
  CandidateJudge(const SlotProblem& problem, const RoundingSettings& settings)
      : problem_(problem), settings_(settings) {}

  void consider(const Beamformers& w, const char* kind, Best& best) const {
    if (!problem_.feasible(w, settings_.feasibility_tol)) return;
    ++best.feasible;
    const double obj = problem_.cost(w).total;
    if (obj < best.objective) {
      best.found = true;
      best.objective = obj;
      best.w = w;
      best.candidate = kind;
    }
  }

  /// Raw directions, then (unless paper-faithful) the SINR-balanced powers and
  /// the same powers scaled up to the tightest per-BS cap.
  void consider_all(const Beamformers& raw, Best& best) const {
    consider(raw, "raw", best);
    if (settings_.paper_faithful) return;
    const auto p = balance_powers(raw, problem_.slot.channels, problem_.qos.sinr_targets,
                                  problem_.noise_power);
    if (!p) return;
    Beamformers w(raw.rows(), raw.cols());
    for (Eigen::Index m = 0; m < raw.cols(); ++m) {
      w.col(m) = raw.col(m) * std::sqrt((*p)(m) / raw.col(m).squaredNorm());
    }
    // A hair above the balanced point so roundoff cannot land below target.
    w *= std::sqrt(1.0 + 1e-10);
    consider(w, "balanced", best);
    const int L = problem_.placement.bs_count();
    const Eigen::VectorXd load = bs_powers(w, L, problem_.antennas_per_bs);
    const double kappa = problem_.qos.max_bs_power_w / load.maxCoeff();
    if (kappa > 1.0 + 1e-9) consider(w * std::sqrt(kappa * (1.0 - 1e-12)), "capped", best);
  }

 private:
  const SlotProblem& problem_;
  const RoundingSettings& settings_;
};

}  // namespace

RoundingReport gaussian_randomize(const std::vector<Eigen::MatrixXcd>& W, const SlotProblem& problem,
                                  const RoundingSettings& settings, Rng& rng) {
  if (settings.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const int M = problem.slot.user_count();
  const int n = static_cast<int>(problem.slot.channels.cols());
  if (static_cast<int>(W.size()) != M) throw std::invalid_argument("one W per user required");
  for (const auto& Wm : W) {
    if (Wm.rows() != n || Wm.cols() != n) throw std::invalid_argument("W has the wrong size");
  }
  const std::uint64_t base = rng();
  RoundingReport rep;
  rep.eigen_ratio.reserve(M);
  for (const auto& Wm : W) rep.eigen_ratio.push_back(eigen_ratio(Wm));

  const CandidateJudge judge(problem, settings);
  Best best;
  bool rank_one = true;
  Beamformers ext(n, M);
  for (int m = 0; m < M && rank_one; ++m) {
    const auto w = extract_rank1(W[m], settings.rank_tol);
    if (w) ext.col(m) = *w;
    else rank_one = false;
  }
  if (rank_one) {
    judge.consider_all(ext, best);
    rep.method = RoundingMethod::eigen;
  }
  if (!best.found) {
    std::vector<Eigen::MatrixXcd> roots;
    roots.reserve(M);
    for (const auto& Wm : W) roots.push_back(hermitian_sqrt(Wm));
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Beamformers xi(n, M);
    Eigen::VectorXcd z(n);
    for (int k = 0; k < settings.trials; ++k) {
      Rng trial = make_stream(base, "trial", static_cast<std::uint64_t>(k));
      for (int m = 0; m < M; ++m) {
        for (int i = 0; i < n; ++i) z(i) = {normal(trial), normal(trial)};
        xi.col(m) = roots[m] * z;
      }
      ++rep.trials_attempted;
      judge.consider_all(xi, best);
    }
    rep.method = best.found ? RoundingMethod::randomized : RoundingMethod::failed;
  }
  rep.feasible_candidates = best.feasible;
  if (!best.found) return rep;
  rep.candidate = best.candidate;
  rep.w = best.w;
  rep.cost = problem.cost(best.w);
  rep.objective = rep.cost.total;
  rep.smoothed_objective = smoothed_objective(problem.lift(), best.w);
  rep.sinr_ok = true;
  for (int m = 0; m < M; ++m) {
    if (sinr_of(m, best.w, problem.slot.channels, problem.noise_power) <
        problem.qos.sinr_targets(m) * (1.0 - settings.feasibility_tol)) {
      rep.sinr_ok = false;
    }
  }
  const Eigen::VectorXd load = bs_powers(best.w, problem.placement.bs_count(), problem.antennas_per_bs);
  rep.power_ok = (load.array() <= problem.qos.max_bs_power_w * (1.0 + settings.feasibility_tol)).all();
  return rep;
}

nlohmann::json to_json(const RoundingReport& r) {
  nlohmann::json j{{"method", to_string(r.method)},
                   {"eigen_ratio", r.eigen_ratio},
                   {"trials_attempted", r.trials_attempted},
                   {"feasible_candidates", r.feasible_candidates},
                   {"sinr_ok", r.sinr_ok},
                   {"power_ok", r.power_ok}};
  if (!r.feasible()) return j;
  j["candidate"] = r.candidate;
  j["objective"] = r.objective;
  j["smoothed_objective"] = r.smoothed_objective;
  j["cost"] = to_json(r.cost);
  nlohmann::json beams = nlohmann::json::array();
  for (Eigen::Index m = 0; m < r.w.cols(); ++m) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.w.rows(); ++i) col.push_back({r.w(i, m).real(), r.w(i, m).imag()});
    beams.push_back(col);
  }
  j["beamformers"] = beams;
  return j;
}

}  // namespace cran
