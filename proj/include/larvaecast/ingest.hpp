#pragma once

// Observation, station and climate-series ingestion plus the cleaning rules
// applied before feature assembly.

#include <array>
#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "larvaecast/series.hpp"

namespace larvaecast {

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  /// Days since 1970-01-01 (proleptic Gregorian).
  long days_since_epoch() const;
  static Date from_days(long days);
  bool valid() const;
  std::string iso() const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

std::optional<Date> parse_iso_date(std::string_view text);

struct YearMonth {
  int year = 1970;
  int month = 1;

  std::string iso() const;
  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

std::optional<YearMonth> parse_year_month(std::string_view text);

enum class WaterSource { kStill, kFlowing, kContainer };

std::string_view to_string(WaterSource source);

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
};

struct LarvaeObservation {
  std::string location_id;
  GeoPoint position;
  Date date;
  WaterSource water_source = WaterSource::kStill;
  long long larvae_count = 0;
};

struct StationRecord {
  std::string station_id;
  GeoPoint position;
  YearMonth month;
  double tmean_c = 0.0;
  double tmax_c = 0.0;
  double tmin_c = 0.0;
  double precip_days = 0.0;
  double precip_mm = 0.0;
  double elevation_m = 0.0;
};

/// Feature order of the abundance regressor's input vector.
enum FeatureIndex : std::size_t {
  kTmean = 0,
  kTmax = 1,
  kTmin = 2,
  kPrecipDays = 3,
  kPrecipMm = 4,
  kElevation = 5,
};
inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureColumns = {
    "tmean_c", "tmax_c", "tmin_c", "precip_days", "precip_mm", "elevation_m"};

struct FeatureRow {
  std::string location_id;
  Date date;
  std::string station_id;
  std::array<double, kFeatureCount> features{};
  double larvae_count = 0.0;
};

/// Per-rule accounting of every dropped observation.
struct IngestionReport {
  std::size_t input_rows = 0;
  std::size_t dropped_container = 0;
  std::size_t dropped_merged = 0;
  std::size_t dropped_proximity = 0;
  std::size_t output_rows = 0;
  std::vector<std::string> excluded_locations;  // distinct, sorted

  bool reconciles() const {
    return input_rows == output_rows + dropped_container + dropped_merged + dropped_proximity;
  }
};

std::vector<LarvaeObservation> parse_observations(std::istream& in, const std::string& source);
std::vector<LarvaeObservation> parse_observations(const std::filesystem::path& path);
std::vector<StationRecord> parse_stations(std::istream& in, const std::string& source);
std::vector<StationRecord> parse_stations(const std::filesystem::path& path);

/// Groups rows by (region, variable) in first-seen order, sorted by year.
/// Gaps or repeated years are data errors.
std::vector<RegionSeries> parse_series(std::istream& in, const std::string& source);
std::vector<RegionSeries> parse_series(const std::filesystem::path& path);

/// Removes artificial-container observations, keeping order.
std::vector<LarvaeObservation> filter_container_sources(std::span<const LarvaeObservation> obs);

/// Collapses rows sharing (location, date) into one whose count is the sum.
/// Output is sorted by location then date.
std::vector<LarvaeObservation> merge_duplicates(std::span<const LarvaeObservation> obs);

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDefaultMaxStationKm = 48.28;  // 30 miles

double haversine_km(const GeoPoint& a, const GeoPoint& b);

struct JoinResult {
  std::vector<FeatureRow> rows;
  std::vector<std::string> excluded_locations;  // one entry per dropped observation
};

/// Joins each observation to the nearest station reporting the observation's
/// calendar month within `max_km`. Distance ties go to the smaller station id.
JoinResult join_nearest_station(std::span<const LarvaeObservation> obs, std::span<const StationRecord> stations,
                                double max_km = kDefaultMaxStationKm);

struct CleanedFeatures {
  std::vector<FeatureRow> rows;
  IngestionReport report;
};

/// container filter -> duplicate merge -> station join. Throws DataError if
/// nothing survives, naming the rule that removed the last rows.
CleanedFeatures clean_and_join(std::span<const LarvaeObservation> obs, std::span<const StationRecord> stations,
                               double max_km = kDefaultMaxStationKm);

void write_features(const std::filesystem::path& path, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features(const std::filesystem::path& path);

/// First and last day of the summer averaging window.
inline constexpr int kSummerStartMonth = 6, kSummerStartDay = 22;
inline constexpr int kSummerEndMonth = 9, kSummerEndDay = 22;

struct DailyValue {
  Date date;
  double value = 0.0;
};

struct MonthlyValue {
  YearMonth month;
  double value = 0.0;
};

/// Mean over June 22 - September 22 inclusive of `year`. Every day of the
/// window must be present.
double summer_average(std::span<const DailyValue> daily, int year);

/// Monthly-resolution variant: each month weighted by its days in the window.
double summer_average(std::span<const MonthlyValue> monthly, int year);

}  // namespace larvaecast
