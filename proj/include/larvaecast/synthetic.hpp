#pragma once

// Seeded synthetic dataset with a planted feature -> larvae-count relation.
// Stands in for the citizen-science observations and station archives.

#include <cstdint>
#include <filesystem>

namespace larvaecast::synthetic {

struct Options {
  std::uint64_t seed = 7;
  std::size_t stations = 30;
  std::size_t observations_per_location = 4;
  std::size_t regions = 10;
  int first_series_year = 1979;
  int last_series_year = 2021;
};

/// Planted relation used to generate counts: log10(count + 1) as a function
/// of the six station features (tmean, tmax, tmin, precip_days, precip_mm,
/// elevation).
double planted_log10_count(double tmean, double precip_mm, double elevation_m);

/// Writes observations.csv, stations.csv, series.csv, regions.csv and
/// regions.geojson into `dir`.
void write_dataset(const std::filesystem::path& dir, const Options& options = {});

}  // namespace larvaecast::synthetic
