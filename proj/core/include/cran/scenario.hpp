#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cran/rng.hpp"

namespace cran {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

struct GeometryConfig {
  int bs_count = 7;
  double lattice_spacing_km = 0.8;
  int user_pool_size = 200;
  /// Users are drawn on a disk around the central BS. 1.2 km covers the
  /// outer ring of a 0.8 km lattice; set 0.8 to confine users to the ring.
  double user_disk_radius_km = 1.2;
  int users_per_slot = 12;

  void validate() const;
};

struct ChannelParams {
  int antennas_per_bs = 2;
  double antenna_gain_dbi = 10.0;
  double shadowing_std_db = 8.0;
  double noise_psd_dbm_hz = -172.0;
  double bandwidth_hz = 10e6;
  /// BS-user distances are clamped to this value before path loss.
  double min_distance_km = 0.01;

  /// sigma^2 in watts.
  double noise_power_w() const;
  void validate() const;
};

struct PopularityModel {
  int file_count = 0;
  double zipf_alpha = 0.0;
  Eigen::VectorXd probabilities;  ///< most popular first
};

enum class CacheMode { none, uncoded, coded };

std::string to_string(CacheMode mode);
CacheMode parse_cache_mode(const std::string& name);

struct CachePlacement {
  Eigen::MatrixXd delta;  ///< F x L fractions cached at each BS
  double cache_size = 0.0;
  CacheMode mode = CacheMode::none;
  double coded_fraction = 1.0;
  /// Coded caches hold disjoint parity subsets, so fractions held by
  /// different BSs add up toward recovery.
  bool distinct_parity = false;

  int files() const { return static_cast<int>(delta.rows()); }
  int bs_count() const { return static_cast<int>(delta.cols()); }
};

struct TimeSlot {
  std::vector<int> users;    ///< indices into the user pool
  Eigen::MatrixXcd channels; ///< M x (L*Nt); row m holds the stacked channel of user m
  std::uint64_t slot_seed = 0;

  int user_count() const { return static_cast<int>(channels.rows()); }
};

/// Hexagonal lattice: the center BS at the origin surrounded by complete
/// rings (L = 1, 7, 19, ...). Ring one starts on the positive x axis and
/// proceeds counter-clockwise in 60 degree steps.
std::vector<Point2> build_lattice(const GeometryConfig& config);

/// Area-uniform i.i.d. points on a disk centered at the origin.
std::vector<Point2> sample_user_positions(int count, double radius_km, Rng& rng);

/// 148.1 + 37.6 log10(d), d in km.
double path_loss_db(double distance_km);

/// h = g * sqrt(10^(-PL/10) * phi * zeta) for given small-scale fading g and
/// shadowing (in dB). Distance is clamped to params.min_distance_km.
Eigen::VectorXcd channel_from_fading(double distance_km, const ChannelParams& params,
                                     const Eigen::VectorXcd& g, double shadowing_db);

/// Draws fresh Rayleigh fading and log-normal shadowing for one BS-user link.
Eigen::VectorXcd draw_channel(const Point2& bs, const Point2& user, const ChannelParams& params,
                              Rng& rng);

PopularityModel zipf_popularity(int file_count, double alpha);

/// Most-popular-first placement, identical at every BS. Uncoded caches hold
/// the S most popular files whole; coded caches hold `coded_fraction` of the
/// S / coded_fraction most popular files.
CachePlacement place_caches(const PopularityModel& popularity, int bs_count, double cache_size,
                            CacheMode mode, double coded_fraction = 0.5);

/// Selects M distinct users uniformly and draws their channels to every BS.
TimeSlot draw_time_slot(const std::vector<Point2>& user_pool,
                        const std::vector<Point2>& base_stations, int users_per_slot,
                        const ChannelParams& params, Rng& rng);

struct ScenarioConfig {
  GeometryConfig geometry;
  ChannelParams channel;
  int file_count = 20;
  double zipf_alpha = 1.2;

  void validate() const;
};

/// Fixed part of an experiment. Slots are derived on demand from named
/// random streams, so slot k is the same regardless of which other slots
/// were generated before it.
struct Scenario {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  std::vector<Point2> base_stations;
  std::vector<Point2> users;
  PopularityModel popularity;
  double noise_power_w = 0.0;

  TimeSlot slot(int index) const;
};

Scenario make_scenario(const ScenarioConfig& config, std::uint64_t seed);

nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j,
                                         const ScenarioConfig& defaults = {});
nlohmann::json to_json(const CachePlacement& placement);
nlohmann::json to_json(const TimeSlot& slot);
/// Positions, popularity, seeds and (optionally) a placement and slots.
nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

}  // namespace cran
