#include "cran/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cran/relaxation.hpp"
#include "cran/rounding.hpp"
#include "cran/scenario.hpp"

namespace cran {

OracleReport make_report(std::string name, double expected, double observed, double tolerance,
                         bool relative) {
  OracleReport r;
  r.name = std::move(name);
  r.expected = expected;
  r.observed = observed;
  r.abs_error = std::abs(observed - expected);
  r.rel_error = r.abs_error / std::max(1e-300, std::abs(expected));
  r.tolerance = tolerance;
  r.relative = relative;
  r.pass = std::isfinite(observed) && (relative ? r.rel_error : r.abs_error) <= tolerance;
  return r;
}

SingleUserOptimum single_user_power_oracle(const Eigen::VectorXcd& h, double gamma, double noise_power) {
  const double g = h.squaredNorm();
  if (!(g > 0.0)) throw std::invalid_argument("zero channel: the SINR target is infeasible");
  if (!(gamma >= 0.0) || !(noise_power > 0.0)) throw std::invalid_argument("gamma >= 0 and noise > 0 required");
  SingleUserOptimum out;
  out.power = gamma * noise_power / g;
  out.w = std::sqrt(out.power) * h / std::sqrt(g);
  return out;
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// User-space form of the 2 x 2 block: value = e0 a + e1 sqrt(2) b + e2 c.
struct TinyRow {
  double e[3] = {0.0, 0.0, 0.0};
  double eval(double a, double b, double c) const { return e[0] * a + e[1] * std::sqrt(2.0) * b + e[2] * c; }
  double l1() const { return std::abs(e[0]) + std::sqrt(2.0) * std::abs(e[1]) + std::abs(e[2]); }
};

}  // namespace

KnownSdp random_sdp_with_known_optimum(const SdpDims& dims, Rng& rng) {
  if (dims.psd_sizes.empty() && dims.nonneg == 0) throw std::invalid_argument("no variables requested");
  if (dims.nonneg < 0 || dims.rows < 1) throw std::invalid_argument("need nonneg >= 0 and rows >= 1");
  for (int n : dims.psd_sizes) {
    if (n < 1 || n > 10) throw std::invalid_argument("PSD blocks must be 1..10 wide");
  }
  KnownSdp out;
  ConicProblem& p = out.problem;
  p.cones.psd_sizes = dims.psd_sizes;
  p.cones.nonneg = dims.nonneg;
  const int N = p.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(N);
  for (size_t k = 0; k < dims.psd_sizes.size(); ++k) {
    const int n = dims.psd_sizes[k];
    const Eigen::MatrixXd Q = random_orthogonal(n, rng);
    const int rank = std::uniform_int_distribution<int>(0, n)(rng);
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(n), dz = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) (i < rank ? dx(i) : dz(i)) = uniform(rng, 0.5, 2.0);
    const int off = p.cones.psd_offset(static_cast<int>(k));
    x.segment(off, svec_size(n)) = svec(Q * dx.asDiagonal() * Q.transpose());
    z.segment(off, svec_size(n)) = svec(Q * dz.asDiagonal() * Q.transpose());
  }
  for (int i = p.cones.nonneg_offset(); i < N; ++i) {
    (std::bernoulli_distribution(0.5)(rng) ? x(i) : z(i)) = uniform(rng, 0.5, 2.0);
  }
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(dims.rows);
  Eigen::MatrixXd A(dims.rows, N);
  for (int r = 0; r < dims.rows; ++r) {
    for (int j = 0; j < N; ++j) A(r, j) = normal(rng);
    const double ax = A.row(r).dot(x);
    const int kind = std::uniform_int_distribution<int>(0, 4)(rng);
    const bool active = std::bernoulli_distribution(0.5)(rng);
    RowSense sense = RowSense::eq;
    double rhs = ax;
    y(r) = normal(rng);
    if (kind == 3 || kind == 4) {
      sense = kind == 3 ? RowSense::le : RowSense::ge;
      const double sign = kind == 3 ? -1.0 : 1.0;
      if (active) {
        y(r) = sign * uniform(rng, 0.5, 2.0);
      } else {
        y(r) = 0.0;
        rhs = ax - sign * uniform(rng, 0.5, 2.0);
      }
    }
    const int row = p.add_row(sense, rhs);
    for (int j = 0; j < N; ++j) p.add_entry(row, j, A(r, j));
  }
  p.c = A.transpose() * y + z;
  out.x = x;
  out.y = y;
  out.optimum = p.c.dot(x);
  return out;
}

ConicProblem random_tiny_sdp(Rng& rng) {
  auto pd = [&rng](double shift) {
    Eigen::Vector2d g(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    return Eigen::Matrix2d(g * g.transpose() + shift * Eigen::Matrix2d::Identity());
  };
  ConicProblem p;
  p.cones.psd_sizes = {2};
  p.c = svec(pd(0.1));
  const int rows = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int i = 0; i < rows; ++i) {
    const Eigen::VectorXd a = svec(pd(0.5));
    const int r = p.add_row(RowSense::ge, uniform(rng, 0.3, 1.0));
    for (int j = 0; j < 3; ++j) p.add_entry(r, j, a(j));
  }
  return p;
}

GridResult grid_check_tiny_sdp(const ConicProblem& problem, double eta, double range) {
  if (problem.cones.psd_sizes != std::vector<int>{2} || problem.cones.nonneg != 0) {
    throw std::invalid_argument("grid check needs exactly one 2x2 PSD block and no orthant");
  }
  if (problem.rows() > 3) throw std::invalid_argument("grid check supports at most 3 rows");
  if (!(eta > 0.0) || !(range > 0.0)) throw std::invalid_argument("eta and range must be > 0");
  if (problem.c.size() != 3) throw std::invalid_argument("objective must have 3 entries");
  TinyRow obj;
  for (int j = 0; j < 3; ++j) obj.e[j] = problem.c(j);
  std::vector<TinyRow> rows(problem.rows());
  for (const auto& t : problem.entries) {
    if (t.row < 0 || t.row >= problem.rows() || t.col < 0 || t.col > 2) {
      throw std::invalid_argument("entry out of range");
    }
    rows[t.row].e[t.col] += t.value;
  }
  std::vector<double> slack(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) slack[i] = eta * rows[i].l1() + 1e-12;

  const int n = static_cast<int>(std::floor(range / eta + 1e-9));
  GridResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int ia = 0; ia <= n; ++ia) {
    const double a = ia * eta;
    for (int ic = 0; ic <= n; ++ic) {
      const double c = ic * eta;
      const int kb = static_cast<int>(std::floor(std::sqrt(a * c) / eta + 1e-9));
      for (int ib = -kb; ib <= kb; ++ib) {
        const double b = ib * eta;
        if (a * c < b * b) continue;
        bool ok = true;
        for (size_t i = 0; i < rows.size() && ok; ++i) {
          const double v = rows[i].eval(a, b, c) - problem.b(static_cast<Eigen::Index>(i));
          switch (problem.senses[i]) {
            case RowSense::eq: ok = std::abs(v) <= slack[i]; break;
            case RowSense::le: ok = v <= slack[i]; break;
            case RowSense::ge: ok = v >= -slack[i]; break;
          }
        }
        if (!ok) continue;
        const double f = obj.eval(a, b, c);
        if (f < best.objective) best = {true, f, a, b, c};
      }
    }
  }
  if (!best.feasible) best.objective = 0.0;
  return best;
}

double grid_tolerance(const ConicProblem& problem, const Eigen::VectorXd& y, double eta) {
  TinyRow obj;
  for (int j = 0; j < 3; ++j) obj.e[j] = problem.c(j);
  std::vector<TinyRow> rows(problem.rows());
  for (const auto& t : problem.entries) rows[t.row].e[t.col] += t.value;
  double tol = obj.l1();
  for (size_t i = 0; i < rows.size(); ++i) tol += std::abs(y(static_cast<Eigen::Index>(i))) * rows[i].l1();
  return eta * tol + 1e-9;
}

namespace {

void single_user_cases(const OracleSuiteOptions& opt, std::vector<OracleReport>& out) {
  const ScenarioConfig config;
  const Scenario scen = make_scenario(config, opt.seed);
  const int L = config.geometry.bs_count;
  const int Nt = config.channel.antennas_per_bs;
  const double gamma_db = 10.0;
  for (int k = 0; k < opt.single_user_cases; ++k) {
    Rng rng = make_stream(opt.seed, "oracle-single-user", static_cast<std::uint64_t>(k));
    SlotProblem sp;
    sp.noise_power = scen.noise_power_w;
    sp.antennas_per_bs = Nt;
    sp.popularity = scen.popularity;
    sp.placement = place_caches(scen.popularity, L, 0.0, CacheMode::none);
    sp.qos = QosConfig::uniform(1, gamma_db, QosConfig{}.max_bs_power_w, 0.0);
    SingleUserOptimum best;
    // Redraw until the uncapped optimum also respects every per-BS cap, so
    // the closed form is the true optimum.
    for (;;) {
      const int u = std::uniform_int_distribution<int>(0, static_cast<int>(scen.users.size()) - 1)(rng);
      sp.slot.users = {u};
      sp.slot.channels.resize(1, L * Nt);
      for (int l = 0; l < L; ++l) {
        sp.slot.channels.block(0, l * Nt, 1, Nt) =
            draw_channel(scen.base_stations[l], scen.users[u], config.channel, rng).transpose();
      }
      const Eigen::VectorXcd h = sp.slot.channels.row(0).transpose();
      best = single_user_power_oracle(h, db_to_linear(gamma_db), sp.noise_power);
      const Eigen::VectorXd load = bs_powers(Eigen::MatrixXcd(best.w), L, Nt);
      if (load.maxCoeff() <= sp.qos.max_bs_power_w) break;
    }
    const std::string tag = "single_user/" + std::to_string(k);
    const RelaxedSolution rel = mm_optimize(sp.lift());
    const double power = rel.W.empty() ? std::numeric_limits<double>::quiet_NaN() : rel.W[0].trace().real();
    out.push_back(make_report(tag + "/relaxed_power", best.power, power, 1e-5, true));
    double sinr = std::numeric_limits<double>::quiet_NaN();
    if (!rel.W.empty()) {
      Rng rrng = make_stream(opt.seed, "oracle-single-user-rounding", static_cast<std::uint64_t>(k));
      const RoundingReport rr = gaussian_randomize(rel.W, sp, RoundingSettings{}, rrng);
      if (rr.feasible()) sinr = sinr_of(0, rr.w, sp.slot.channels, sp.noise_power);
    }
    out.push_back(make_report(tag + "/rounded_sinr", db_to_linear(gamma_db), sinr, 1e-8, true));
  }
}

void random_sdp_cases(const OracleSuiteOptions& opt, std::vector<OracleReport>& out) {
  for (int k = 0; k < opt.random_sdps; ++k) {
    Rng rng = make_stream(opt.seed, "oracle-random-sdp", static_cast<std::uint64_t>(k));
    SdpDims dims;
    const int blocks = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int b = 0; b < blocks; ++b) dims.psd_sizes.push_back(std::uniform_int_distribution<int>(1, 6)(rng));
    dims.nonneg = std::uniform_int_distribution<int>(0, 5)(rng);
    int cols = dims.nonneg;
    for (int n : dims.psd_sizes) cols += svec_size(n);
    dims.rows = std::uniform_int_distribution<int>(1, std::min(cols, 12))(rng);
    const KnownSdp known = random_sdp_with_known_optimum(dims, rng);
    // Solved below the default tolerance: the checks are absolute, while
    // the solver's gap test is relative to 1 + |objective|.
    SolverSettings settings;
    settings.tolerance = 2e-9;
    const ConicSolution sol = solve(known.problem, settings);
    const std::string tag = "random_sdp/" + std::to_string(k);
    out.push_back(make_report(tag + "/objective", known.optimum,
                              sol.status == SolveStatus::optimal ? sol.primal_objective
                                                                 : std::numeric_limits<double>::quiet_NaN(),
                              1e-7, false));
    const Residuals r = kkt_residuals(known.problem, sol);
    out.push_back(make_report(tag + "/kkt", 0.0, std::max({r.primal, r.dual, r.gap}), 1e-7, false));
  }
}

void grid_cases(const OracleSuiteOptions& opt, std::vector<OracleReport>& out) {
  auto check = [&out](const std::string& tag, const ConicProblem& p) {
    const GridResult g = grid_check_tiny_sdp(p);
    const ConicSolution sol = solve(p);
    if (!g.feasible) {
      OracleReport r = make_report(tag, 0.0, 0.0, 0.0, false);
      r.pass = sol.status == SolveStatus::infeasible;
      out.push_back(r);
      return;
    }
    const double observed =
        sol.status == SolveStatus::optimal ? sol.primal_objective : std::numeric_limits<double>::quiet_NaN();
    const double tol = sol.status == SolveStatus::optimal ? grid_tolerance(p, sol.y) : 0.0;
    out.push_back(make_report(tag, g.objective, observed, tol, false));
  };
  {
    // min tr(W) s.t. W11 >= 1
    ConicProblem p;
    p.cones.psd_sizes = {2};
    p.c = svec(Eigen::Matrix2d::Identity());
    p.add_entry(p.add_row(RowSense::ge, 1.0), 0, 1.0);
    check("grid/trace_min", p);
  }
  {
    // W11 <= -1 has no PSD solution
    ConicProblem p;
    p.cones.psd_sizes = {2};
    p.c = svec(Eigen::Matrix2d::Identity());
    p.add_entry(p.add_row(RowSense::le, -1.0), 0, 1.0);
    check("grid/infeasible", p);
  }
  {
    // -lambda_max(diag(1, 2)) = min -<A, W> s.t. tr(W) = 1
    ConicProblem p;
    p.cones.psd_sizes = {2};
    p.c = -svec(Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix());
    const int r = p.add_row(RowSense::eq, 1.0);
    p.add_entry(r, 0, 1.0);
    p.add_entry(r, 2, 1.0);
    check("grid/lambda_max", p);
  }
  for (int k = 0; k < opt.grid_sdps; ++k) {
    Rng rng = make_stream(opt.seed, "oracle-grid-sdp", static_cast<std::uint64_t>(k));
    check("grid/random/" + std::to_string(k), random_tiny_sdp(rng));
  }
}

}  // namespace

std::vector<OracleReport> run_oracle_suite(const OracleSuiteOptions& options) {
  std::vector<OracleReport> out;
  single_user_cases(options, out);
  random_sdp_cases(options, out);
  grid_cases(options, out);
  return out;
}

nlohmann::json to_json(const OracleReport& r) {
  return {{"name", r.name},           {"expected", r.expected},   {"observed", r.observed},
          {"abs_error", r.abs_error}, {"rel_error", r.rel_error}, {"tolerance", r.tolerance},
          {"relative", r.relative},   {"pass", r.pass}};
}

std::string format_reports(const std::vector<OracleReport>& reports) {
  std::ostringstream os;
  int failed = 0;
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-4s %-36s expected %.10g observed %.10g %s error %.3g (tol %.3g)\n",
                  r.pass ? "ok" : "FAIL", r.name.c_str(), r.expected, r.observed, r.relative ? "rel" : "abs",
                  r.relative ? r.rel_error : r.abs_error, r.tolerance);
    os << line;
    if (!r.pass) ++failed;
  }
  os << reports.size() - failed << "/" << reports.size() << " oracle checks passed\n";
  return os.str();
}

}  // namespace cran
