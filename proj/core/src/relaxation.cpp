#include "cran/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cran {

double LiftedScenario::rate(int m) const { return std::log2(1.0 + sinr_targets(m)); }

Eigen::MatrixXcd lift_channel(const Eigen::VectorXcd& h) { return h * h.adjoint(); }

Eigen::MatrixXd selection_matrix(int l, int bs_count, int antennas_per_bs) {
  if (l < 0 || l >= bs_count) throw std::out_of_range("BS index out of range");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(bs_count * antennas_per_bs, bs_count * antennas_per_bs);
  J.diagonal().segment(l * antennas_per_bs, antennas_per_bs).setOnes();
  return J;
}

LiftedScenario lift_scenario(const TimeSlot& slot, const CachePlacement& placement,
                             const PopularityModel& popularity, const QosConfig& qos,
                             double noise_power, int antennas_per_bs, double theta) {
  qos.validate();
  if (!(noise_power > 0.0)) throw std::invalid_argument("noise power must be > 0");
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must be in (0, 1]");
  if (antennas_per_bs < 1) throw std::invalid_argument("antennas_per_bs must be >= 1");
  const int M = slot.user_count();
  const int L = placement.bs_count();
  if (slot.channels.cols() != static_cast<Eigen::Index>(L) * antennas_per_bs) {
    throw std::invalid_argument("channel length does not match L * Nt");
  }
  if (qos.sinr_targets.size() != M) throw std::invalid_argument("one SINR target per user required");
  if (popularity.file_count != placement.files()) {
    throw std::invalid_argument("placement and popularity disagree on F");
  }
  LiftedScenario s;
  s.channels = slot.channels;
  s.bs_count = L;
  s.antennas_per_bs = antennas_per_bs;
  s.delta = placement.delta;
  s.popularity = popularity.probabilities;
  s.sinr_targets = qos.sinr_targets;
  s.noise_power = noise_power;
  s.max_bs_power = qos.max_bs_power_w;
  s.lambda = std::min(qos.lambda, kMaxLambda);
  s.theta = theta;
  const double inv_sigma = 1.0 / std::sqrt(noise_power);
  s.H.reserve(M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXcd h = slot.channels.row(m).transpose() * inv_sigma;
    if (!h.allFinite() || h.squaredNorm() == 0.0) {
      throw std::invalid_argument("channel of user " + std::to_string(m) + " is zero or not finite");
    }
    s.H.push_back(lift_channel(h));
  }
  return s;
}

double log_tangent(double t0, double theta, double x) {
  return std::log(t0 + theta) + (x - t0) / (t0 + theta);
}

bool tangent_violated(double t0, double theta, double x) {
  const double f = std::log(x + theta);
  const double t = log_tangent(t0, theta, x);
  const double ulp = std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(f), std::abs(t)});
  return f - t > 4.0 * ulp;
}

bool CutPool::add(int m, int l, double t0) {
  if (!std::isfinite(t0) || t0 < 0.0) throw std::invalid_argument("tangent point must be finite and >= 0");
  auto& pts = points_.at(index(m, l));
  for (double p : pts) {
    if (std::abs(p - t0) <= 1e-10) return false;
  }
  pts.push_back(t0);
  return true;
}

int CutPool::size() const {
  int n = 0;
  for (const auto& p : points_) n += static_cast<int>(p.size());
  return n;
}

CutPool CutPool::near(const Eigen::MatrixXd& traces, double theta, int per_side) const {
  if (traces.rows() != bs_count_ || traces.cols() != users()) throw std::invalid_argument("traces shape");
  if (per_side < 0) throw std::invalid_argument("per_side must be >= 0");
  CutPool out(users(), bs_count_);
  for (int m = 0; m < users(); ++m) {
    for (int l = 0; l < bs_count_; ++l) {
      const double x = std::log(std::max(traces(l, m), 0.0) + theta);
      std::vector<std::pair<double, double>> below, above;
      for (double p : points(m, l)) {
        const double d = std::log(p + theta) - x;
        (d < 0.0 ? below : above).emplace_back(std::abs(d), p);
      }
      for (auto* side : {&below, &above}) {
        std::sort(side->begin(), side->end());
        const size_t k = std::min(side->size(), static_cast<size_t>(per_side));
        for (size_t i = 0; i < k; ++i) out.add(m, l, (*side)[i].second);
      }
    }
  }
  return out;
}

CutPool initial_cut_pool(const LiftedScenario& lifted, const std::vector<double>& fractions) {
  CutPool pool(lifted.users(), lifted.bs_count);
  for (int l = 0; l < lifted.bs_count; ++l) {
    if (!lifted.active(l)) continue;
    for (int m = 0; m < lifted.users(); ++m) {
      for (double q : fractions) pool.add(m, l, q * lifted.max_bs_power);
    }
  }
  return pool;
}

Eigen::MatrixXd real_embedding(const Eigen::MatrixXcd& W) {
  const auto n = W.rows();
  Eigen::MatrixXd X(2 * n, 2 * n);
  X.topLeftCorner(n, n) = W.real();
  X.topRightCorner(n, n) = -W.imag();
  X.bottomLeftCorner(n, n) = W.imag();
  X.bottomRightCorner(n, n) = W.real();
  return X;
}

Eigen::MatrixXcd hermitian_from_embedding(const Eigen::MatrixXd& X) {
  const auto n = X.rows() / 2;
  const Eigen::MatrixXd re = 0.5 * (X.topLeftCorner(n, n) + X.bottomRightCorner(n, n));
  const Eigen::MatrixXd im = 0.5 * (X.bottomLeftCorner(n, n) - X.topRightCorner(n, n));
  Eigen::MatrixXcd W(n, n);
  W.real() = re;
  W.imag() = im;
  return 0.5 * (W + W.adjoint());
}

LinearizedSdp assemble_linearized_sdp(const LiftedScenario& s, const CutPool& cuts) {
  const int M = s.users();
  const int L = s.bs_count;
  const int F = s.files();
  const int n = s.dim();
  const int Nt = s.antennas_per_bs;
  if (M < 1 || L < 1) throw std::invalid_argument("empty scenario");
  if (static_cast<int>(s.H.size()) != M || s.delta.cols() != L || s.popularity.size() != F ||
      s.sinr_targets.size() != M) {
    throw std::invalid_argument("lifted scenario dimensions are inconsistent");
  }
  if (cuts.users() != M || cuts.bs_count() != L) throw std::invalid_argument("cut pool shape mismatch");

  LinearizedSdp out;
  ConicProblem& p = out.problem;
  p.cones.psd_sizes.assign(M, 2 * n);

  int nonneg = 0;
  out.t_col.assign(static_cast<size_t>(M) * L, -1);
  out.v_col.assign(static_cast<size_t>(M) * L, -1);
  for (int m = 0; m < M; ++m) {
    for (int l = 0; l < L; ++l) {
      if (!s.active(l)) continue;
      if (cuts.points(m, l).empty()) {
        throw std::invalid_argument("cut pool has no tangent for an active (user, BS) pair");
      }
      out.t_col[m * L + l] = nonneg++;
      out.v_col[m * L + l] = nonneg++;
    }
  }
  out.beta_col = Eigen::MatrixXi::Constant(F, M, -1);
  for (int m = 0; m < M; ++m) {
    for (int f = 0; f < F; ++f) {
      if (s.file_cached(f)) out.beta_col(f, m) = nonneg++;
    }
  }
  p.cones.nonneg = nonneg;
  const int base = p.cones.nonneg_offset();
  for (auto& c : out.t_col) if (c >= 0) c += base;
  for (auto& c : out.v_col) if (c >= 0) c += base;
  for (int i = 0; i < out.beta_col.size(); ++i) {
    if (out.beta_col.data()[i] >= 0) out.beta_col.data()[i] += base;
  }

  p.c = Eigen::VectorXd::Zero(p.cols());
  const double power_weight = 1.0 - s.lambda;
  for (int m = 0; m < M; ++m) {
    const int off = p.cones.psd_offset(m);
    // tr(W) = tr(X) / 2
    for (int i = 0; i < 2 * n; ++i) p.c(off + svec_index(2 * n, i, i)) = 0.5 * power_weight;
  }
  for (int m = 0; m < M; ++m) {
    for (int f = 0; f < F; ++f) {
      const double w = s.lambda * s.popularity(f) * s.rate(m);
      if (out.beta_col(f, m) >= 0) {
        p.c(out.beta_col(f, m)) = w;
      } else {
        out.objective_offset += w;
      }
    }
  }

  // SINR: tr(W_m H_m) - gamma_m sum_{j != m} tr(W_j H_m) >= gamma_m, each row
  // divided by ||h~_m||^2.
  for (int m = 0; m < M; ++m) {
    const double norm2 = s.H[m].trace().real();
    const Eigen::MatrixXd E = real_embedding(s.H[m] / norm2);
    const int r = p.add_row(RowSense::ge, s.sinr_targets(m) / norm2);
    for (int j = 0; j < M; ++j) {
      const double scale = (j == m ? 1.0 : -s.sinr_targets(m)) * 0.5;
      for (int col = 0; col < 2 * n; ++col) {
        for (int row = col; row < 2 * n; ++row) {
          if (E(row, col) != 0.0) p.add_psd_entry(r, j, row, col, scale * E(row, col));
        }
      }
    }
  }
  out.sinr_rows = M;

  // Per-BS power: sum_m tr(W_m J_l) <= P_max.
  for (int l = 0; l < L; ++l) {
    const int r = p.add_row(RowSense::le, s.max_bs_power);
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < Nt; ++k) {
        const int i = l * Nt + k;
        p.add_psd_entry(r, m, i, i, 0.5);
        p.add_psd_entry(r, m, i + n, i + n, 0.5);
      }
    }
  }
  out.power_rows = L;

  // t_{m,l} = tr(W_m J_l)
  for (int m = 0; m < M; ++m) {
    for (int l = 0; l < L; ++l) {
      const int tc = out.t_col[m * L + l];
      if (tc < 0) continue;
      const int r = p.add_row(RowSense::eq, 0.0);
      p.add_entry(r, tc, 1.0);
      for (int k = 0; k < Nt; ++k) {
        const int i = l * Nt + k;
        p.add_psd_entry(r, m, i, i, -0.5);
        p.add_psd_entry(r, m, i + n, i + n, -0.5);
      }
    }
  }

  // Tangents: v - t / (t0 + theta) <= log(t0 + theta) - log(theta) - t0 / (t0 + theta)
  const double log_theta = std::log(s.theta);
  for (int m = 0; m < M; ++m) {
    for (int l = 0; l < L; ++l) {
      const int tc = out.t_col[m * L + l];
      if (tc < 0) continue;
      const int vc = out.v_col[m * L + l];
      for (double t0 : cuts.points(m, l)) {
        const double a = t0 + s.theta;
        const int r = p.add_row(RowSense::le, std::log(a) - log_theta - t0 / a);
        p.add_entry(r, vc, 1.0);
        p.add_entry(r, tc, -1.0 / a);
      }
    }
  }

  // beta_{f,m} + sum_l delta_{f,l} v_{m,l} >= 1 - log(theta) sum_l delta_{f,l}
  for (int m = 0; m < M; ++m) {
    for (int f = 0; f < F; ++f) {
      const int bc = out.beta_col(f, m);
      if (bc < 0) continue;
      const double dsum = s.delta.row(f).sum();
      const int r = p.add_row(RowSense::ge, 1.0 - log_theta * dsum);
      p.add_entry(r, bc, 1.0);
      for (int l = 0; l < L; ++l) {
        if (s.delta(f, l) > 0.0) p.add_entry(r, out.v_col[m * L + l], s.delta(f, l));
      }
    }
  }
  return out;
}

std::string to_string(RelaxStatus status) {
  switch (status) {
    case RelaxStatus::optimal: return "optimal";
    case RelaxStatus::infeasible: return "infeasible";
    case RelaxStatus::not_converged: return "not_converged";
    case RelaxStatus::solver_failed: return "solver_failed";
  }
  return "solver_failed";
}

namespace {

Eigen::MatrixXd traces_of(const std::vector<Eigen::MatrixXcd>& W, int L, int Nt) {
  Eigen::MatrixXd t(L, W.size());
  for (size_t m = 0; m < W.size(); ++m) {
    for (int l = 0; l < L; ++l) {
      t(l, m) = W[m].diagonal().segment(l * Nt, Nt).real().sum();
    }
  }
  return t;
}

double min_beta(const LiftedScenario& s, const Eigen::MatrixXd& traces, int f, int m) {
  double u = 1.0;
  for (int l = 0; l < s.bs_count; ++l) {
    if (s.delta(f, l) > 0.0) u -= s.delta(f, l) * std::log(std::max(traces(l, m), 0.0) + s.theta);
  }
  return std::max(u, 0.0);
}

}  // namespace

double coverage_violation(const LiftedScenario& s, const Eigen::MatrixXd& traces,
                          const Eigen::MatrixXd& beta) {
  double worst = 0.0;
  for (int m = 0; m < s.users(); ++m) {
    for (int f = 0; f < s.files(); ++f) {
      if (!s.file_cached(f)) continue;
      double g = 1.0;
      for (int l = 0; l < s.bs_count; ++l) {
        if (s.delta(f, l) > 0.0) g -= s.delta(f, l) * std::log(std::max(traces(l, m), 0.0) + s.theta);
      }
      worst = std::max(worst, g - beta(f, m));
      worst = std::max(worst, -beta(f, m));
    }
  }
  return worst;
}

double smoothed_objective(const LiftedScenario& s, const Eigen::MatrixXd& traces, double total_power) {
  double backhaul = 0.0;
  for (int m = 0; m < s.users(); ++m) {
    double b = 0.0;
    for (int f = 0; f < s.files(); ++f) {
      b += s.popularity(f) * (s.file_cached(f) ? min_beta(s, traces, f, m) : 1.0);
    }
    backhaul += b * s.rate(m);
  }
  return (1.0 - s.lambda) * total_power + s.lambda * backhaul;
}

double smoothed_objective(const LiftedScenario& s, const Beamformers& w) {
  return smoothed_objective(s, block_powers(w, s.bs_count, s.antennas_per_bs), w.squaredNorm());
}

namespace {

// Rough size of the SDP optimum: the power each user needs alone plus the
// backhaul of its cached files. The solver's gap test is relative only
// above 1, so small objectives (lambda near 0, powers of 1e-4 W) are
// divided by this before solving.
double objective_scale(const LiftedScenario& s) {
  double power = 0.0, backhaul = 0.0;
  for (int m = 0; m < s.users(); ++m) {
    const double g = s.channels.row(m).squaredNorm();
    if (g > 0.0) power += s.sinr_targets(m) * s.noise_power / g;
    double cached = 0.0;
    for (int f = 0; f < s.files(); ++f) {
      if (s.file_cached(f)) cached += s.popularity(f);
    }
    backhaul += s.rate(m) * cached;
  }
  const double scale = (1.0 - s.lambda) * power + s.lambda * backhaul;
  return scale > 0.0 && std::isfinite(scale) ? std::min(1.0, scale) : 1.0;
}

}  // namespace

RelaxedSolution solve_linearized(const LiftedScenario& s, const CutPool& cuts,
                                 const SolverSettings& settings) {
  LinearizedSdp sdp = assemble_linearized_sdp(s, cuts);
  const double scale = objective_scale(s);
  sdp.problem.c /= scale;
  const ConicSolution sol = solve(sdp.problem, settings);
  RelaxedSolution out;
  out.cuts = cuts;
  out.solver_iterations = sol.iterations;
  const double worst = std::max({sol.residuals.primal, sol.residuals.dual, sol.residuals.gap});
  switch (sol.status) {
    case SolveStatus::optimal: out.status = RelaxStatus::optimal; break;
    case SolveStatus::infeasible: out.status = RelaxStatus::infeasible; return out;
    case SolveStatus::max_iterations:
      // Many nearly parallel cuts can stall the last digits of the dual.
      if (worst <= kInexactFactor * settings.tolerance) {
        out.status = RelaxStatus::optimal;
        out.inexact_solves = 1;
        break;
      }
      out.status = RelaxStatus::solver_failed;
      return out;
    default: out.status = RelaxStatus::solver_failed; return out;
  }
  const int M = s.users();
  const int n2 = 2 * s.dim();
  out.W.reserve(M);
  for (int m = 0; m < M; ++m) {
    const Eigen::MatrixXd X = smat(sol.x.segment(sdp.problem.cones.psd_offset(m), svec_size(n2)), n2);
    out.W.push_back(hermitian_from_embedding(X));
  }
  out.traces = traces_of(out.W, s.bs_count, s.antennas_per_bs);
  out.beta = Eigen::MatrixXd::Ones(s.files(), M);
  for (int m = 0; m < M; ++m) {
    for (int f = 0; f < s.files(); ++f) {
      if (sdp.beta_col(f, m) >= 0) out.beta(f, m) = sol.x(sdp.beta_col(f, m));
    }
  }
  out.objective = scale * sol.primal_objective + sdp.objective_offset;
  out.max_violation = coverage_violation(s, out.traces, out.beta);
  return out;
}

RelaxedSolution mm_optimize(const LiftedScenario& s, const RelaxationSettings& settings,
                            const CutPool* warm_start) {
  if (settings.max_cut_rounds < 1) throw std::invalid_argument("max_cut_rounds must be >= 1");
  CutPool cuts = initial_cut_pool(s, settings.initial_tangents);
  if (warm_start != nullptr) {
    if (warm_start->users() != s.users() || warm_start->bs_count() != s.bs_count) {
      throw std::invalid_argument("warm-start cut pool shape mismatch");
    }
    for (int m = 0; m < s.users(); ++m) {
      for (int l = 0; l < s.bs_count; ++l) {
        if (!s.active(l)) continue;
        for (double t0 : warm_start->points(m, l)) cuts.add(m, l, t0);
      }
    }
  }
  std::vector<double> history;
  int iterations = 0;
  int inexact = 0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  RelaxedSolution sol;
  double last_violation = std::numeric_limits<double>::infinity();
  for (int round = 1; round <= settings.max_cut_rounds; ++round) {
    SolverSettings solver = settings.solver;
    if (last_violation > settings.early_violation) {
      solver.tolerance = std::max(solver.tolerance, settings.early_tolerance);
    }
    sol = solve_linearized(s, cuts, solver);
    const bool loose = solver.tolerance > settings.solver.tolerance;
    iterations += sol.solver_iterations;
    inexact += sol.inexact_solves;
    sol.solver_iterations = iterations;
    sol.inexact_solves = inexact;
    sol.cut_rounds = round;
    if (sol.status != RelaxStatus::optimal) {
      sol.objective_history = history;
      return sol;
    }
    last_violation = sol.max_violation;
    history.push_back(sol.objective);
    sol.objective_history = history;
    const double change = std::isnan(prev) ? 0.0
                                           : std::abs(sol.objective - prev) / std::max(1.0, std::abs(sol.objective));
    prev = sol.objective;

    int added = 0;
    if (sol.max_violation > settings.violation_tol || change > settings.objective_rel_tol) {
      for (int m = 0; m < s.users(); ++m) {
        for (int l = 0; l < s.bs_count; ++l) {
          if (!s.active(l)) continue;
          const double t = std::max(sol.traces(l, m), 0.0);
          // Gap between the tightest tangent at t and log(t + theta).
          double envelope = std::numeric_limits<double>::infinity();
          for (double t0 : cuts.points(m, l)) envelope = std::min(envelope, log_tangent(t0, s.theta, t));
          if (envelope - std::log(t + s.theta) <= settings.cut_tol) continue;
          double lo = -1.0, hi = -1.0;
          for (double t0 : cuts.points(m, l)) {
            if (t0 < t && t0 > lo) lo = t0;
            if (t0 > t && (hi < 0.0 || t0 < hi)) hi = t0;
          }
          if (cuts.add(m, l, t)) ++added;
          if (lo < 0.0 || hi < 0.0) continue;
          const double a = std::log(lo + s.theta), b = std::log(hi + s.theta);
          for (int k = 1; k <= settings.bracket_points; ++k) {
            const double x = a + (b - a) * k / (settings.bracket_points + 1);
            if (cuts.add(m, l, std::exp(x) - s.theta)) ++added;
          }
        }
      }
    }
    if (loose) {
      // Never stop on a loosely solved round.
      if (round == settings.max_cut_rounds) sol.status = RelaxStatus::not_converged;
      continue;
    }
    if (sol.max_violation <= settings.violation_tol && change <= settings.objective_rel_tol) break;
    if (added == 0) {
      if (sol.max_violation <= settings.violation_tol) break;
      sol.status = RelaxStatus::not_converged;
      break;
    }
    if (round == settings.max_cut_rounds) sol.status = RelaxStatus::not_converged;
  }
  sol.oa_violation = sol.max_violation;
  // Lift beta onto the true log constraint so the returned point is feasible.
  for (int m = 0; m < s.users(); ++m) {
    for (int f = 0; f < s.files(); ++f) {
      if (s.file_cached(f)) sol.beta(f, m) = std::max(sol.beta(f, m), min_beta(s, sol.traces, f, m));
    }
  }
  sol.max_violation = coverage_violation(s, sol.traces, sol.beta);
  return sol;
}

nlohmann::json to_json(const RelaxedSolution& sol) {
  nlohmann::json traces = nlohmann::json::array();
  for (int m = 0; m < sol.traces.cols(); ++m) {
    std::vector<double> r(sol.traces.rows());
    for (int l = 0; l < sol.traces.rows(); ++l) r[l] = sol.traces(l, m);
    traces.push_back(r);
  }
  nlohmann::json beta = nlohmann::json::array();
  for (int m = 0; m < sol.beta.cols(); ++m) {
    std::vector<double> r(sol.beta.rows());
    for (int f = 0; f < sol.beta.rows(); ++f) r[f] = sol.beta(f, m);
    beta.push_back(r);
  }
  nlohmann::json ranks = nlohmann::json::array();
  for (const auto& W : sol.W) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double top = ev(ev.size() - 1);
    ranks.push_back(top > 0.0 && ev.size() > 1 ? ev(ev.size() - 2) / top : 0.0);
  }
  return {{"status", to_string(sol.status)},
          {"objective", sol.objective},
          {"objective_history", sol.objective_history},
          {"max_violation", sol.max_violation},
          {"oa_violation", sol.oa_violation},
          {"cut_rounds", sol.cut_rounds},
          {"inexact_solves", sol.inexact_solves},
          {"cut_count", sol.cuts.size()},
          {"solver_iterations", sol.solver_iterations},
          {"block_power", traces},
          {"beta", beta},
          {"eigen_ratio", ranks}};
}

}  // namespace cran
