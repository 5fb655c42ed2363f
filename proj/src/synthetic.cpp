#include "larvaecast/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "larvaecast/csv.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/ingest.hpp"
#include "larvaecast/random.hpp"

namespace larvaecast::synthetic {

namespace {

using csv::format_number;

std::string padded(const char* prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return prefix + digits;
}

/// Round to a fixed number of decimals so the CSV stays readable.
double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

GeoPoint offset_point(const GeoPoint& origin, double km, double bearing) {
  constexpr double kDegPerKm = 1.0 / 111.2;
  const double dlat = km * std::cos(bearing) * kDegPerKm;
  const double dlon = km * std::sin(bearing) * kDegPerKm / std::cos(origin.latitude * std::numbers::pi / 180.0);
  return {origin.latitude + dlat, origin.longitude + dlon};
}

struct RegionProfile {
  const char* name;
  double latitude;
  double longitude;
  double elevation_m;
};

constexpr std::array<RegionProfile, 12> kRegions = {{
    {"Alpine Ridge", 39.5, -106.0, 2450.0},
    {"High Plains", 35.0, -101.8, 1100.0},
    {"Trans Pecos", 31.0, -104.0, 1350.0},
    {"Gulf Coast", 29.5, -95.0, 15.0},
    {"Piedmont", 35.5, -80.5, 250.0},
    {"Great Basin", 40.0, -116.5, 1650.0},
    {"Lake Plains", 42.5, -84.0, 260.0},
    {"Delta", 33.0, -90.8, 45.0},
    {"North Woods", 46.5, -92.0, 420.0},
    {"Mesa", 36.5, -108.5, 1900.0},
    {"Tidewater", 37.0, -76.5, 10.0},
    {"Prairie", 41.0, -97.5, 480.0},
}};

}  // namespace

double planted_log10_count(double tmean, double precip_mm, double elevation_m) {
  const double zt = (tmean - 16.0) / 8.0;
  const double zp = (precip_mm - 3.0) / 1.5;
  const double ze = (elevation_m - 1000.0) / 700.0;
  return 1.5 + 0.45 * zt + 0.25 * zp - 0.3 * ze + 0.12 * zt * zp;
}

void write_dataset(const std::filesystem::path& dir, const Options& options) {
  if (options.stations < 2 || options.regions < 1 || options.regions > kRegions.size())
    throw ConfigError("synthetic: need >= 2 stations and 1.." + std::to_string(kRegions.size()) + " regions");
  if (options.last_series_year - options.first_series_year < 29)
    throw ConfigError("synthetic: series must span at least 30 years");
  std::filesystem::create_directories(dir);
  RandomStream rng(derive_seed(options.seed, 0x5EED));

  // Stations with 60 months of records.
  std::vector<StationRecord> stations;
  std::vector<GeoPoint> station_sites;
  for (std::size_t s = 0; s < options.stations; ++s) {
    const GeoPoint site{round_to(rng.uniform(31.0, 44.0), 4), round_to(rng.uniform(-112.0, -82.0), 4)};
    const double elevation =
        round_to(std::clamp(2200.0 * (-site.longitude - 88.0) / 24.0 + rng.normal(0.0, 250.0), 5.0, 2800.0), 1);
    const double annual = 24.0 - 0.6 * (site.latitude - 31.0) - 0.0055 * elevation;
    const double wetness = 1.5 + 3.0 * (site.longitude + 112.0) / 30.0;
    station_sites.push_back(site);
    for (int year = 2017; year <= 2021; ++year) {
      for (int month = 1; month <= 12; ++month) {
        StationRecord r;
        r.station_id = padded("ST", s + 1, 2);
        r.position = site;
        r.month = {year, month};
        const double season = std::sin(2.0 * std::numbers::pi * (month - 4) / 12.0);
        r.tmean_c = round_to(annual + 9.0 * season + rng.normal(0.0, 1.0), 2);
        r.tmax_c = round_to(r.tmean_c + 6.0 + std::abs(rng.normal(0.0, 0.8)), 2);
        r.tmin_c = round_to(r.tmean_c - 6.0 - std::abs(rng.normal(0.0, 0.8)), 2);
        r.precip_mm = round_to(std::max(0.2, wetness + 0.8 * season + rng.normal(0.0, 0.6)), 2);
        r.precip_days = round_to(std::clamp(1.5 + 2.4 * r.precip_mm + rng.normal(0.0, 1.0), 0.0, 31.0), 1);
        r.elevation_m = elevation;
        stations.push_back(std::move(r));
      }
    }
  }

  // Observation sites: two near each station plus a few with no station in range.
  std::vector<std::pair<std::string, GeoPoint>> locations;
  for (std::size_t s = 0; s < station_sites.size(); ++s)
    for (int k = 0; k < 2; ++k) {
      const auto p = offset_point(station_sites[s], rng.uniform(3.0, 25.0), rng.uniform(0.0, 2.0 * std::numbers::pi));
      locations.emplace_back(padded("L", locations.size() + 1, 3), GeoPoint{round_to(p.latitude, 4), round_to(p.longitude, 4)});
    }
  const std::array<GeoPoint, 3> remote = {{{47.8, -120.5}, {25.9, -80.4}, {48.5, -68.9}}};
  for (const auto& p : remote) {
    for (const auto& site : station_sites)
      if (haversine_km(p, site) <= 60.0) throw InvariantError("synthetic: remote site too close to a station");
    locations.emplace_back(padded("L", locations.size() + 1, 3), p);
  }

  std::vector<std::vector<std::string>> obs_rows;
  auto add_obs = [&](const std::string& id, const GeoPoint& p, const Date& d, const char* source, long long count) {
    obs_rows.push_back({id, format_number(p.latitude), format_number(p.longitude), d.iso(), source,
                        std::to_string(count)});
  };
  for (const auto& [id, position] : locations) {
    for (std::size_t k = 0; k < options.observations_per_location; ++k) {
      const int year = 2017 + static_cast<int>(rng.below(5));
      const int month = 1 + static_cast<int>(rng.below(12));
      const Date date{year, month, 1 + static_cast<int>(rng.below(28))};
      LarvaeObservation probe{id, position, date, WaterSource::kStill, 0};
      const auto joined = join_nearest_station(std::span(&probe, 1), stations);
      long long count = static_cast<long long>(rng.below(200));
      if (!joined.rows.empty()) {
        const auto& f = joined.rows.front().features;
        const double v = planted_log10_count(f[kTmean], f[kPrecipMm], f[kElevation]) + rng.normal(0.0, 0.08);
        count = std::max(0LL, std::llround(std::pow(10.0, v) - 1.0));
      }
      const char* source = rng.uniform() < 0.5 ? "still" : "flowing";
      if (rng.uniform() < 0.07 && count >= 2) {
        const long long first = count / 3;
        add_obs(id, position, date, source, first);
        add_obs(id, position, date, source, count - first);
      } else {
        add_obs(id, position, date, source, count);
      }
      if (rng.uniform() < 0.08) add_obs(id, position, date, "container", static_cast<long long>(rng.below(500)));
    }
  }
  csv::write_file(dir / "observations.csv",
                  {"location_id", "latitude", "longitude", "date", "water_source", "larvae_count"}, obs_rows);

  std::vector<std::vector<std::string>> station_rows;
  for (const auto& s : stations)
    station_rows.push_back({s.station_id, format_number(s.position.latitude), format_number(s.position.longitude),
                            s.month.iso(), format_number(s.tmean_c), format_number(s.tmax_c), format_number(s.tmin_c),
                            format_number(s.precip_days), format_number(s.precip_mm), format_number(s.elevation_m)});
  csv::write_file(dir / "stations.csv",
                  {"station_id", "latitude", "longitude", "month", "tmean_c", "tmax_c", "tmin_c", "precip_days",
                   "precip_mm", "elevation_m"},
                  station_rows);

  // Regional summer series following a damped periodic trend plus noise.
  std::vector<std::vector<std::string>> series_rows, region_rows;
  nlohmann::ordered_json geo = {{"type", "FeatureCollection"}, {"features", nlohmann::ordered_json::array()}};
  for (std::size_t r = 0; r < options.regions; ++r) {
    const auto& profile = kRegions[r];
    const double base_t = 31.0 - 0.55 * (profile.latitude - 29.0) - 0.004 * profile.elevation_m;
    const double base_p = std::max(0.6, 1.0 + 3.2 * (profile.longitude + 117.0) / 41.0);
    const double k_min = rng.uniform(5.0, 8.0);
    const double k_max = rng.uniform(5.5, 9.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<std::array<double, 4>> values;
    for (int year = options.first_series_year; year <= options.last_series_year; ++year) {
      const double t = year - options.first_series_year;
      const double trend = 0.01 * t - std::exp(0.01 * t) * std::sin(0.6 * t) * 0.5 * std::pow(t, 0.03);
      const double tmean = round_to(base_t + 1.5 * trend + 0.02 * t + rng.normal(0.0, 0.25), 3);
      const double tmin = round_to(tmean - k_min + rng.normal(0.0, 0.15), 3);
      const double tmax = round_to(tmean + k_max + rng.normal(0.0, 0.15), 3);
      const double precip =
          round_to(std::max(0.1, base_p + 0.004 * t + 0.3 * std::sin(0.45 * t + phase) + rng.normal(0.0, 0.15)), 3);
      values.push_back({tmean, tmin, tmax, precip});
    }
    const std::array<const char*, 4> names = {"summer_tmean", "summer_tmin", "summer_tmax", "summer_precip"};
    for (std::size_t v = 0; v < names.size(); ++v)
      for (std::size_t i = 0; i < values.size(); ++i)
        series_rows.push_back({profile.name, names[v], std::to_string(options.first_series_year + static_cast<int>(i)),
                               format_number(values[i][v])});
    region_rows.push_back({profile.name, format_number(profile.elevation_m)});

    const double h = 1.5;
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (auto [dx, dy] : std::array<std::pair<double, double>, 5>{{{-h, -h}, {h, -h}, {h, h}, {-h, h}, {-h, -h}}})
      ring.push_back({profile.longitude + dx, profile.latitude + dy});
    geo["features"].push_back({{"type", "Feature"},
                               {"properties", {{"region_id", profile.name}, {"elevation_m", profile.elevation_m}}},
                               {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}});
  }
  csv::write_file(dir / "series.csv", {"region_id", "variable", "year", "value"}, series_rows);
  csv::write_file(dir / "regions.csv", {"region_id", "elevation_m"}, region_rows);
  std::ofstream out(dir / "regions.geojson", std::ios::binary | std::ios::trunc);
  out << geo.dump(2) << '\n';
  if (!out) throw DataError("failed writing regions.geojson");
}

}  // namespace larvaecast::synthetic
