#include "cran/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cran {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void GeometryConfig::validate() const {
  if (bs_count < 1) throw std::invalid_argument("bs_count must be >= 1");
  if (!(lattice_spacing_km > 0.0)) throw std::invalid_argument("lattice spacing must be > 0");
  if (!(user_disk_radius_km > 0.0)) throw std::invalid_argument("user disk radius must be > 0");
  if (user_pool_size < 1) throw std::invalid_argument("user pool must be non-empty");
  if (users_per_slot < 1 || users_per_slot > user_pool_size) {
    throw std::invalid_argument("users_per_slot must be in [1, user_pool_size]");
  }
}

double ChannelParams::noise_power_w() const {
  return std::pow(10.0, (noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) - 30.0) / 10.0);
}

void ChannelParams::validate() const {
  if (antennas_per_bs < 1) throw std::invalid_argument("antennas_per_bs must be >= 1");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  if (shadowing_std_db < 0.0) throw std::invalid_argument("shadowing std must be >= 0");
  if (!(min_distance_km > 0.0)) throw std::invalid_argument("minimum distance must be > 0");
  if (!(noise_power_w() > 0.0)) throw std::invalid_argument("noise power must be > 0");
}

std::string to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::none: return "none";
    case CacheMode::uncoded: return "uncoded";
    case CacheMode::coded: return "coded";
  }
  return "none";
}

CacheMode parse_cache_mode(const std::string& name) {
  if (name == "none") return CacheMode::none;
  if (name == "uncoded") return CacheMode::uncoded;
  if (name == "coded") return CacheMode::coded;
  throw std::invalid_argument("unknown cache mode: " + name);
}

std::vector<Point2> build_lattice(const GeometryConfig& config) {
  if (config.bs_count < 1) throw std::invalid_argument("bs_count must be >= 1");
  if (!(config.lattice_spacing_km > 0.0)) throw std::invalid_argument("lattice spacing must be > 0");
  int rings = 0;
  while (1 + 3 * rings * (rings + 1) < config.bs_count) ++rings;
  if (1 + 3 * rings * (rings + 1) != config.bs_count) {
    throw std::invalid_argument("bs_count " + std::to_string(config.bs_count) +
                                " does not fill complete hexagonal rings (1, 7, 19, 37, ...)");
  }
  const double s = config.lattice_spacing_km;
  const double h = s * std::sqrt(3.0) / 2.0;
  // axial coordinates: (q, r) -> q * (s, 0) + r * (s/2, h)
  auto pos = [&](int q, int r) { return Point2{q * s + r * s / 2.0, r * h}; };
  const int dq[6] = {1, 0, -1, -1, 0, 1};
  const int dr[6] = {0, 1, 1, 0, -1, -1};
  std::vector<Point2> out{{0.0, 0.0}};
  for (int k = 1; k <= rings; ++k) {
    int q = k, r = 0;
    for (int side = 0; side < 6; ++side) {
      const int dir = (side + 2) % 6;
      for (int step = 0; step < k; ++step) {
        out.push_back(pos(q, r));
        q += dq[dir];
        r += dr[dir];
      }
    }
  }
  return out;
}

std::vector<Point2> sample_user_positions(int count, double radius_km, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double rad = radius_km * std::sqrt(u(rng));
    const double ang = 2.0 * std::numbers::pi * u(rng);
    pts.push_back({rad * std::cos(ang), rad * std::sin(ang)});
  }
  return pts;
}

double path_loss_db(double distance_km) {
  if (!(distance_km > 0.0)) throw std::invalid_argument("path loss needs a positive distance");
  return 148.1 + 37.6 * std::log10(distance_km);
}

Eigen::VectorXcd channel_from_fading(double distance_km, const ChannelParams& params,
                                     const Eigen::VectorXcd& g, double shadowing_db) {
  const double d = std::max(distance_km, params.min_distance_km);
  const double gain = std::pow(10.0, -path_loss_db(d) / 10.0) *
                      std::pow(10.0, params.antenna_gain_dbi / 10.0) *
                      std::pow(10.0, shadowing_db / 10.0);
  return g * std::sqrt(gain);
}

Eigen::VectorXcd draw_channel(const Point2& bs, const Point2& user, const ChannelParams& params,
                              Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXcd g(params.antennas_per_bs);
  const double half = std::sqrt(0.5);
  for (int k = 0; k < params.antennas_per_bs; ++k) {
    const double re = n01(rng);
    const double im = n01(rng);
    g(k) = {half * re, half * im};
  }
  const double shadow = params.shadowing_std_db > 0.0 ? params.shadowing_std_db * n01(rng) : 0.0;
  return channel_from_fading(distance(bs, user), params, g, shadow);
}

PopularityModel zipf_popularity(int file_count, double alpha) {
  if (file_count < 1) throw std::invalid_argument("file_count must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("zipf alpha must be >= 0");
  PopularityModel p;
  p.file_count = file_count;
  p.zipf_alpha = alpha;
  p.probabilities.resize(file_count);
  for (int f = 0; f < file_count; ++f) p.probabilities(f) = std::pow(f + 1.0, -alpha);
  // Sum smallest terms first.
  double total = 0.0;
  for (int f = file_count - 1; f >= 0; --f) total += p.probabilities(f);
  p.probabilities /= total;
  return p;
}

CachePlacement place_caches(const PopularityModel& popularity, int bs_count, double cache_size,
                            CacheMode mode, double coded_fraction) {
  if (bs_count < 1) throw std::invalid_argument("bs_count must be >= 1");
  if (!(cache_size >= 0.0)) throw std::invalid_argument("cache size must be >= 0");
  const int F = popularity.file_count;
  CachePlacement pl;
  pl.delta = Eigen::MatrixXd::Zero(F, bs_count);
  pl.mode = mode;
  switch (mode) {
    case CacheMode::none:
      pl.cache_size = 0.0;
      pl.coded_fraction = 1.0;
      return pl;
    case CacheMode::uncoded: {
      if (cache_size != std::floor(cache_size)) {
        throw std::invalid_argument("uncoded caching needs an integer cache size");
      }
      if (cache_size > F) throw std::invalid_argument("cache size exceeds the file library");
      pl.cache_size = cache_size;
      pl.coded_fraction = 1.0;
      pl.delta.topRows(static_cast<int>(cache_size)).setOnes();
      return pl;
    }
    case CacheMode::coded: {
      if (!(coded_fraction > 0.0 && coded_fraction <= 1.0)) {
        throw std::invalid_argument("coded fraction must be in (0, 1]");
      }
      const double files_needed = cache_size / coded_fraction;
      if (files_needed > F + 1e-9) {
        throw std::invalid_argument("coded cache needs more files than the library holds");
      }
      pl.cache_size = cache_size;
      pl.coded_fraction = coded_fraction;
      pl.distinct_parity = true;
      const int full = static_cast<int>(std::floor(files_needed + 1e-9));
      pl.delta.topRows(full).setConstant(coded_fraction);
      const double rest = cache_size - full * coded_fraction;
      if (rest > 1e-12 && full < F) pl.delta.row(full).setConstant(rest);
      return pl;
    }
  }
  return pl;
}

TimeSlot draw_time_slot(const std::vector<Point2>& user_pool,
                        const std::vector<Point2>& base_stations, int users_per_slot,
                        const ChannelParams& params, Rng& rng) {
  const int pool = static_cast<int>(user_pool.size());
  if (users_per_slot < 1 || users_per_slot > pool) {
    throw std::invalid_argument("users_per_slot must be in [1, pool size]");
  }
  // Partial Fisher-Yates.
  std::vector<int> idx(pool);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < users_per_slot; ++i) {
    std::uniform_int_distribution<int> pick(i, pool - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  TimeSlot slot;
  slot.users.assign(idx.begin(), idx.begin() + users_per_slot);
  const int L = static_cast<int>(base_stations.size());
  const int Nt = params.antennas_per_bs;
  slot.channels.resize(users_per_slot, L * Nt);
  for (int m = 0; m < users_per_slot; ++m) {
    for (int l = 0; l < L; ++l) {
      slot.channels.row(m).segment(l * Nt, Nt) =
          draw_channel(base_stations[l], user_pool[slot.users[m]], params, rng).transpose();
    }
  }
  return slot;
}

void ScenarioConfig::validate() const {
  geometry.validate();
  channel.validate();
  if (file_count < 1) throw std::invalid_argument("file_count must be >= 1");
  if (!(zipf_alpha >= 0.0)) throw std::invalid_argument("zipf alpha must be >= 0");
}

TimeSlot Scenario::slot(int index) const {
  Rng rng = make_stream(seed, "slot", static_cast<std::uint64_t>(index));
  TimeSlot s = draw_time_slot(users, base_stations, config.geometry.users_per_slot, config.channel, rng);
  s.slot_seed = derive_seed(seed, "slot", static_cast<std::uint64_t>(index));
  return s;
}

Scenario make_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario sc;
  sc.config = config;
  sc.seed = seed;
  sc.base_stations = build_lattice(config.geometry);
  Rng pos_rng = make_stream(seed, "positions");
  sc.users = sample_user_positions(config.geometry.user_pool_size,
                                   config.geometry.user_disk_radius_km, pos_rng);
  sc.popularity = zipf_popularity(config.file_count, config.zipf_alpha);
  sc.noise_power_w = config.channel.noise_power_w();
  return sc;
}

// JSON -----------------------------------------------------------------------

namespace {

nlohmann::json points_json(const std::vector<Point2>& pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point2> points_from_json(const nlohmann::json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace

nlohmann::json to_json(const ScenarioConfig& c) {
  return {
      {"geometry",
       {{"bs_count", c.geometry.bs_count},
        {"lattice_spacing_km", c.geometry.lattice_spacing_km},
        {"user_pool_size", c.geometry.user_pool_size},
        {"user_disk_radius_km", c.geometry.user_disk_radius_km},
        {"users_per_slot", c.geometry.users_per_slot}}},
      {"channel",
       {{"antennas_per_bs", c.channel.antennas_per_bs},
        {"antenna_gain_dbi", c.channel.antenna_gain_dbi},
        {"shadowing_std_db", c.channel.shadowing_std_db},
        {"noise_psd_dbm_hz", c.channel.noise_psd_dbm_hz},
        {"bandwidth_hz", c.channel.bandwidth_hz},
        {"min_distance_km", c.channel.min_distance_km}}},
      {"file_count", c.file_count},
      {"zipf_alpha", c.zipf_alpha},
  };
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j, const ScenarioConfig& defaults) {
  ScenarioConfig c = defaults;
  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    c.geometry.bs_count = g.value("bs_count", c.geometry.bs_count);
    c.geometry.lattice_spacing_km = g.value("lattice_spacing_km", c.geometry.lattice_spacing_km);
    c.geometry.user_pool_size = g.value("user_pool_size", c.geometry.user_pool_size);
    c.geometry.user_disk_radius_km = g.value("user_disk_radius_km", c.geometry.user_disk_radius_km);
    c.geometry.users_per_slot = g.value("users_per_slot", c.geometry.users_per_slot);
  }
  if (j.contains("channel")) {
    const auto& ch = j["channel"];
    c.channel.antennas_per_bs = ch.value("antennas_per_bs", c.channel.antennas_per_bs);
    c.channel.antenna_gain_dbi = ch.value("antenna_gain_dbi", c.channel.antenna_gain_dbi);
    c.channel.shadowing_std_db = ch.value("shadowing_std_db", c.channel.shadowing_std_db);
    c.channel.noise_psd_dbm_hz = ch.value("noise_psd_dbm_hz", c.channel.noise_psd_dbm_hz);
    c.channel.bandwidth_hz = ch.value("bandwidth_hz", c.channel.bandwidth_hz);
    c.channel.min_distance_km = ch.value("min_distance_km", c.channel.min_distance_km);
  }
  c.file_count = j.value("file_count", c.file_count);
  c.zipf_alpha = j.value("zipf_alpha", c.zipf_alpha);
  c.validate();
  return c;
}

nlohmann::json to_json(const CachePlacement& p) {
  nlohmann::json rows = nlohmann::json::array();
  for (int f = 0; f < p.delta.rows(); ++f) {
    std::vector<double> r(p.delta.cols());
    for (int l = 0; l < p.delta.cols(); ++l) r[l] = p.delta(f, l);
    rows.push_back(r);
  }
  return {{"mode", to_string(p.mode)},
          {"cache_size", p.cache_size},
          {"coded_fraction", p.coded_fraction},
          {"distinct_parity", p.distinct_parity},
          {"delta", rows}};
}

nlohmann::json to_json(const TimeSlot& s) {
  nlohmann::json ch = nlohmann::json::array();
  for (int m = 0; m < s.channels.rows(); ++m) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < s.channels.cols(); ++k) row.push_back({s.channels(m, k).real(), s.channels(m, k).imag()});
    ch.push_back(row);
  }
  return {{"users", s.users}, {"slot_seed", s.slot_seed}, {"channels", ch}};
}

nlohmann::json to_json(const Scenario& s) {
  std::vector<double> z(s.popularity.probabilities.data(),
                        s.popularity.probabilities.data() + s.popularity.probabilities.size());
  return {{"format", "cran-scenario"},
          {"version", 1},
          {"seed", s.seed},
          {"config", to_json(s.config)},
          {"noise_power_w", s.noise_power_w},
          {"base_stations", points_json(s.base_stations)},
          {"users", points_json(s.users)},
          {"popularity", z}};
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.config = scenario_config_from_json(j.at("config"));
  s.seed = j.at("seed").get<std::uint64_t>();
  s.base_stations = points_from_json(j.at("base_stations"));
  s.users = points_from_json(j.at("users"));
  const auto z = j.at("popularity").get<std::vector<double>>();
  s.popularity.file_count = static_cast<int>(z.size());
  s.popularity.zipf_alpha = s.config.zipf_alpha;
  s.popularity.probabilities = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  s.noise_power_w = s.config.channel.noise_power_w();
  if (static_cast<int>(s.base_stations.size()) != s.config.geometry.bs_count ||
      static_cast<int>(s.users.size()) != s.config.geometry.user_pool_size ||
      s.popularity.file_count != s.config.file_count) {
    throw std::invalid_argument("scenario document is inconsistent with its config");
  }
  return s;
}

}  // namespace cran
