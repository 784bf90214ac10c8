#include "cran/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cran {

void QosConfig::validate() const {
  if (sinr_targets.size() == 0) throw std::invalid_argument("no SINR targets");
  if ((sinr_targets.array() <= 0.0).any()) throw std::invalid_argument("SINR targets must be > 0");
  if (!(max_bs_power_w > 0.0)) throw std::invalid_argument("P_max must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0, 1]");
}

QosConfig QosConfig::uniform(int users, double gamma_db, double max_bs_power_w, double lambda) {
  QosConfig q;
  q.sinr_targets = Eigen::VectorXd::Constant(users, db_to_linear(gamma_db));
  q.max_bs_power_w = max_bs_power_w;
  q.lambda = lambda;
  return q;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double sinr_of(int m, const Beamformers& w, const Eigen::MatrixXcd& channels, double noise_power) {
  if (m < 0 || m >= w.cols() || m >= channels.rows()) throw std::out_of_range("user index");
  // channels.row(m) holds the entries of h_m; h_m^H w_j conjugates them.
  const Eigen::RowVectorXcd g = channels.row(m).conjugate() * w;
  double interference = noise_power;
  for (int j = 0; j < w.cols(); ++j) {
    if (j != m) interference += std::norm(g(j));
  }
  return std::norm(g(m)) / interference;
}

double rate_of(double sinr) {
  if (sinr < 0.0) throw std::invalid_argument("SINR must be >= 0");
  return std::log2(1.0 + sinr);
}

Eigen::MatrixXd block_powers(const Beamformers& w, int bs_count, int antennas_per_bs) {
  if (w.rows() != static_cast<Eigen::Index>(bs_count) * antennas_per_bs) {
    throw std::invalid_argument("beamformer length does not match L * Nt");
  }
  Eigen::MatrixXd p(bs_count, w.cols());
  for (int m = 0; m < w.cols(); ++m) {
    for (int l = 0; l < bs_count; ++l) {
      p(l, m) = w.col(m).segment(l * antennas_per_bs, antennas_per_bs).squaredNorm();
    }
  }
  return p;
}

Eigen::VectorXd bs_powers(const Beamformers& w, int bs_count, int antennas_per_bs) {
  return block_powers(w, bs_count, antennas_per_bs).rowwise().sum();
}

double coverage(int f, int m, const Beamformers& w, const CachePlacement& placement,
                int antennas_per_bs, double serve_threshold) {
  double c = 0.0;
  for (int l = 0; l < placement.bs_count(); ++l) {
    const double p = w.col(m).segment(l * antennas_per_bs, antennas_per_bs).squaredNorm();
    if (p > serve_threshold) c += placement.delta(f, l);
  }
  return c;
}

CostBreakdown network_cost(const Beamformers& w, const CachePlacement& placement,
                           const PopularityModel& popularity, const QosConfig& qos,
                           int antennas_per_bs) {
  const int L = placement.bs_count();
  const int F = placement.files();
  const int M = static_cast<int>(w.cols());
  if (popularity.file_count != F) throw std::invalid_argument("placement and popularity disagree on F");
  if (qos.sinr_targets.size() != M) throw std::invalid_argument("one SINR target per user required");
  const Eigen::MatrixXd bp = block_powers(w, L, antennas_per_bs);
  const double eps = qos.serve_threshold();

  CostBreakdown out;
  out.missing.resize(M, F);
  out.indicator.resize(M, F);
  for (int m = 0; m < M; ++m) {
    const double rate = rate_of(qos.sinr_targets(m));
    double user_cost = 0.0;
    for (int f = 0; f < F; ++f) {
      double cov = 0.0;
      for (int l = 0; l < L; ++l) {
        if (bp(l, m) > eps) cov += placement.delta(f, l);
      }
      const double x = std::max(0.0, 1.0 - cov);
      out.missing(m, f) = x;
      out.indicator(m, f) = cov < 1.0 ? 1 : 0;
      user_cost += popularity.probabilities(f) * x;
    }
    out.backhaul_cost += user_cost * rate;
  }
  out.power_cost = w.squaredNorm();
  out.total = qos.lambda * out.backhaul_cost + (1.0 - qos.lambda) * out.power_cost;
  return out;
}

double backhaul_from_indicators(const CostBreakdown& cost, const PopularityModel& popularity,
                                const QosConfig& qos) {
  double total = 0.0;
  for (int m = 0; m < cost.missing.rows(); ++m) {
    double user_cost = 0.0;
    for (int f = 0; f < cost.missing.cols(); ++f) {
      if (cost.indicator(m, f) != 0) user_cost += popularity.probabilities(f) * cost.missing(m, f);
    }
    total += user_cost * rate_of(qos.sinr_targets(m));
  }
  return total;
}

bool satisfies_qos(const Beamformers& w, const Eigen::MatrixXcd& channels, double noise_power,
                   const QosConfig& qos, int antennas_per_bs, double rel_tol) {
  if (!w.allFinite()) return false;
  for (int m = 0; m < w.cols(); ++m) {
    if (sinr_of(m, w, channels, noise_power) < qos.sinr_targets(m) * (1.0 - rel_tol)) return false;
  }
  const int L = static_cast<int>(w.rows()) / antennas_per_bs;
  const Eigen::VectorXd p = bs_powers(w, L, antennas_per_bs);
  return (p.array() <= qos.max_bs_power_w * (1.0 + rel_tol)).all();
}

nlohmann::json to_json(const CostBreakdown& cost) {
  nlohmann::json missing = nlohmann::json::array();
  nlohmann::json ind = nlohmann::json::array();
  for (int m = 0; m < cost.missing.rows(); ++m) {
    std::vector<double> xr(cost.missing.cols());
    std::vector<int> ir(cost.missing.cols());
    for (int f = 0; f < cost.missing.cols(); ++f) {
      xr[f] = cost.missing(m, f);
      ir[f] = cost.indicator(m, f);
    }
    missing.push_back(xr);
    ind.push_back(ir);
  }
  return {{"backhaul_cost", cost.backhaul_cost},
          {"power_cost", cost.power_cost},
          {"total", cost.total},
          {"missing", missing},
          {"indicator", ind}};
}

}  // namespace cran
