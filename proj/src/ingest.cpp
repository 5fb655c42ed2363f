#include "larvaecast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <tuple>

#include "larvaecast/csv.hpp"
#include "larvaecast/error.hpp"

namespace larvaecast {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[static_cast<std::size_t>(m - 1)];
}

std::optional<int> parse_int(std::string_view text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

GeoPoint read_position(const csv::Table& table, const csv::Row& row, std::size_t lat_col, std::size_t lon_col) {
  GeoPoint p{table.number(row, lat_col), table.number(row, lon_col)};
  if (p.latitude < -90.0 || p.latitude > 90.0)
    throw DataError(table.where(row, lat_col) + ": latitude out of range [-90, 90]");
  if (p.longitude < -180.0 || p.longitude > 180.0)
    throw DataError(table.where(row, lon_col) + ": longitude out of range [-180, 180]");
  return p;
}

template <typename Parser>
auto parse_path(const std::filesystem::path& path, Parser&& parser) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parser(in, path.string());
}

}  // namespace

long Date::days_since_epoch() const {
  // Howard Hinnant's days_from_civil.
  const int y = year - (month <= 2 ? 1 : 0);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = y - era * 400;
  const int mp = month + (month > 2 ? -3 : 9);
  const int doy = (153 * mp + 2) / 5 + day - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<long>(era) * 146097 + doe - 719468;
}

Date Date::from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const long doe = z - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const long d = doy - (153 * mp + 2) / 5 + 1;
  const long m = mp < 10 ? mp + 3 : mp - 9;
  const long y = yoe + era * 400 + (m <= 2 ? 1 : 0);
  return Date{static_cast<int>(y), static_cast<int>(m), static_cast<int>(d)};
}

bool Date::valid() const {
  return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
}

std::string Date::iso() const { return std::to_string(year) + "-" + two_digits(month) + "-" + two_digits(day); }

std::optional<Date> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_int(text.substr(0, 4));
  const auto m = parse_int(text.substr(5, 2));
  const auto d = parse_int(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  Date date{*y, *m, *d};
  if (!date.valid()) return std::nullopt;
  return date;
}

std::string YearMonth::iso() const { return std::to_string(year) + "-" + two_digits(month); }

std::optional<YearMonth> parse_year_month(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  const auto y = parse_int(text.substr(0, 4));
  const auto m = parse_int(text.substr(5, 2));
  if (!y || !m || *m < 1 || *m > 12) return std::nullopt;
  return YearMonth{*y, *m};
}

std::string_view to_string(WaterSource source) {
  switch (source) {
    case WaterSource::kStill: return "still";
    case WaterSource::kFlowing: return "flowing";
    case WaterSource::kContainer: return "container";
  }
  return "unknown";
}

std::vector<LarvaeObservation> parse_observations(std::istream& in, const std::string& source) {
  const auto table = csv::parse(in, source);
  const auto c_id = table.column("location_id");
  const auto c_lat = table.column("latitude");
  const auto c_lon = table.column("longitude");
  const auto c_date = table.column("date");
  const auto c_src = table.column("water_source");
  const auto c_count = table.column("larvae_count");

  std::vector<LarvaeObservation> out;
  out.reserve(table.rows().size());
  for (const auto& row : table.rows()) {
    LarvaeObservation obs;
    obs.location_id = table.field(row, c_id);
    if (obs.location_id.empty()) throw DataError(table.where(row, c_id) + ": empty location id");
    obs.position = read_position(table, row, c_lat, c_lon);
    const auto date = parse_iso_date(table.field(row, c_date));
    if (!date) throw ParseError(table.where(row, c_date) + ": expected an ISO-8601 date (YYYY-MM-DD)");
    obs.date = *date;
    const auto& src = table.field(row, c_src);
    if (src == "still")
      obs.water_source = WaterSource::kStill;
    else if (src == "flowing")
      obs.water_source = WaterSource::kFlowing;
    else if (src == "container")
      obs.water_source = WaterSource::kContainer;
    else
      throw ParseError(table.where(row, c_src) + ": unknown water source '" + src + "'");
    obs.larvae_count = table.integer(row, c_count);
    if (obs.larvae_count < 0) throw DataError(table.where(row, c_count) + ": negative larvae count");
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<LarvaeObservation> parse_observations(const std::filesystem::path& path) {
  return parse_path(path, [](std::istream& in, const std::string& s) { return parse_observations(in, s); });
}

std::vector<StationRecord> parse_stations(std::istream& in, const std::string& source) {
  const auto table = csv::parse(in, source);
  const auto c_id = table.column("station_id");
  const auto c_lat = table.column("latitude");
  const auto c_lon = table.column("longitude");
  const auto c_month = table.column("month");
  const auto c_tmean = table.column("tmean_c");
  const auto c_tmax = table.column("tmax_c");
  const auto c_tmin = table.column("tmin_c");
  const auto c_days = table.column("precip_days");
  const auto c_mm = table.column("precip_mm");
  const auto c_elev = table.column("elevation_m");

  std::vector<StationRecord> out;
  std::set<std::pair<std::string, YearMonth>> seen;
  for (const auto& row : table.rows()) {
    StationRecord s;
    s.station_id = table.field(row, c_id);
    if (s.station_id.empty()) throw DataError(table.where(row, c_id) + ": empty station id");
    s.position = read_position(table, row, c_lat, c_lon);
    const auto month = parse_year_month(table.field(row, c_month));
    if (!month) throw ParseError(table.where(row, c_month) + ": expected YYYY-MM");
    s.month = *month;
    s.tmean_c = table.number(row, c_tmean);
    s.tmax_c = table.number(row, c_tmax);
    s.tmin_c = table.number(row, c_tmin);
    s.precip_days = table.number(row, c_days);
    s.precip_mm = table.number(row, c_mm);
    s.elevation_m = table.number(row, c_elev);
    if (!(s.tmin_c <= s.tmean_c && s.tmean_c <= s.tmax_c))
      throw DataError(table.where(row, c_tmean) + ": temperature ordering violated (need tmin <= tmean <= tmax)");
    if (s.precip_days < 0.0 || s.precip_days > 31.0)
      throw DataError(table.where(row, c_days) + ": precipitation days out of range [0, 31]");
    if (s.precip_mm < 0.0) throw DataError(table.where(row, c_mm) + ": negative precipitation amount");
    if (!seen.emplace(s.station_id, s.month).second)
      throw DataError(table.where(row, c_month) + ": duplicate record for station " + s.station_id + " in " +
                      s.month.iso());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<StationRecord> parse_stations(const std::filesystem::path& path) {
  return parse_path(path, [](std::istream& in, const std::string& s) { return parse_stations(in, s); });
}

std::vector<RegionSeries> parse_series(std::istream& in, const std::string& source) {
  const auto table = csv::parse(in, source);
  const auto c_region = table.column("region_id");
  const auto c_var = table.column("variable");
  const auto c_year = table.column("year");
  const auto c_value = table.column("value");

  struct Entry {
    int year;
    double value;
    std::size_t line;
  };
  std::vector<std::pair<std::string, VariableKind>> keys;
  std::map<std::pair<std::string, VariableKind>, std::vector<Entry>> groups;
  for (const auto& row : table.rows()) {
    const auto& region = table.field(row, c_region);
    if (region.empty()) throw DataError(table.where(row, c_region) + ": empty region id");
    const auto kind = parse_variable_kind(table.field(row, c_var));
    if (!kind) throw ParseError(table.where(row, c_var) + ": unknown variable '" + table.field(row, c_var) + "'");
    const auto year = table.integer(row, c_year);
    const auto key = std::pair{region, *kind};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back({static_cast<int>(year), table.number(row, c_value), row.line});
  }

  std::vector<RegionSeries> out;
  for (const auto& key : keys) {
    auto& entries = groups[key];
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.year < b.year; });
    RegionSeries s;
    s.region_id = key.first;
    s.variable = key.second;
    s.start_year = entries.front().year;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].year != s.start_year + static_cast<int>(i))
        throw DataError(source + ":" + std::to_string(entries[i].line) + ": series " + s.label() +
                        " years are not consecutive at " + std::to_string(entries[i].year));
      s.values.push_back(entries[i].value);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RegionSeries> parse_series(const std::filesystem::path& path) {
  return parse_path(path, [](std::istream& in, const std::string& s) { return parse_series(in, s); });
}

std::vector<LarvaeObservation> filter_container_sources(std::span<const LarvaeObservation> obs) {
  std::vector<LarvaeObservation> out;
  std::copy_if(obs.begin(), obs.end(), std::back_inserter(out),
               [](const LarvaeObservation& o) { return o.water_source != WaterSource::kContainer; });
  return out;
}

std::vector<LarvaeObservation> merge_duplicates(std::span<const LarvaeObservation> obs) {
  std::vector<LarvaeObservation> sorted(obs.begin(), obs.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const LarvaeObservation& a, const LarvaeObservation& b) {
    return std::tie(a.location_id, a.date) < std::tie(b.location_id, b.date);
  });
  std::vector<LarvaeObservation> out;
  for (auto& o : sorted) {
    if (!out.empty() && out.back().location_id == o.location_id && out.back().date == o.date)
      out.back().larvae_count += o.larvae_count;
    else
      out.push_back(std::move(o));
  }
  return out;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  for (const auto& p : {a, b})
    if (!(p.latitude >= -90.0 && p.latitude <= 90.0 && p.longitude >= -180.0 && p.longitude <= 180.0))
      throw DomainError("haversine_km: invalid coordinate");
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * kRad;
  const double dlon = (b.longitude - a.longitude) * kRad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude * kRad) * std::cos(b.latitude * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

JoinResult join_nearest_station(std::span<const LarvaeObservation> obs, std::span<const StationRecord> stations,
                                double max_km) {
  if (!(max_km > 0.0)) throw ConfigError("join_nearest_station: max_km must be positive");
  std::map<YearMonth, std::vector<const StationRecord*>> by_month;
  for (const auto& s : stations) by_month[s.month].push_back(&s);

  JoinResult result;
  for (const auto& o : obs) {
    const StationRecord* best = nullptr;
    double best_km = 0.0;
    if (const auto it = by_month.find(YearMonth{o.date.year, o.date.month}); it != by_month.end()) {
      for (const auto* s : it->second) {
        const double km = haversine_km(o.position, s->position);
        if (km > max_km) continue;
        if (!best || km < best_km || (km == best_km && s->station_id < best->station_id)) {
          best = s;
          best_km = km;
        }
      }
    }
    if (!best) {
      result.excluded_locations.push_back(o.location_id);
      continue;
    }
    FeatureRow row;
    row.location_id = o.location_id;
    row.date = o.date;
    row.station_id = best->station_id;
    row.features = {best->tmean_c, best->tmax_c, best->tmin_c, best->precip_days, best->precip_mm, best->elevation_m};
    row.larvae_count = static_cast<double>(o.larvae_count);
    result.rows.push_back(std::move(row));
  }
  return result;
}

CleanedFeatures clean_and_join(std::span<const LarvaeObservation> obs, std::span<const StationRecord> stations,
                               double max_km) {
  CleanedFeatures out;
  auto& rep = out.report;
  rep.input_rows = obs.size();
  if (obs.empty()) throw DataError("no observations to prepare");
  const auto filtered = filter_container_sources(obs);
  rep.dropped_container = obs.size() - filtered.size();
  if (filtered.empty()) throw DataError("no data: every observation removed by rule 'container'");
  const auto merged = merge_duplicates(filtered);
  rep.dropped_merged = filtered.size() - merged.size();
  auto joined = join_nearest_station(merged, stations, max_km);
  rep.dropped_proximity = joined.excluded_locations.size();
  rep.excluded_locations = std::move(joined.excluded_locations);
  std::sort(rep.excluded_locations.begin(), rep.excluded_locations.end());
  rep.excluded_locations.erase(std::unique(rep.excluded_locations.begin(), rep.excluded_locations.end()),
                               rep.excluded_locations.end());
  out.rows = std::move(joined.rows);
  rep.output_rows = out.rows.size();
  if (out.rows.empty()) throw DataError("no data: every observation removed by rule 'proximity'");
  if (!rep.reconciles()) throw InvariantError("ingestion drop accounting does not reconcile");
  return out;
}

void write_features(const std::filesystem::path& path, std::span<const FeatureRow> rows) {
  std::vector<std::string> header = {"location_id", "date", "station_id"};
  for (auto c : kFeatureColumns) header.emplace_back(c);
  header.emplace_back("larvae_count");
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    std::vector<std::string> fields = {r.location_id, r.date.iso(), r.station_id};
    for (double v : r.features) fields.push_back(csv::format_number(v));
    fields.push_back(csv::format_number(r.larvae_count));
    body.push_back(std::move(fields));
  }
  csv::write_file(path, header, body);
}

std::vector<FeatureRow> read_features(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const auto c_loc = table.column("location_id");
  const auto c_date = table.column("date");
  const auto c_station = table.column("station_id");
  const auto c_count = table.column("larvae_count");
  std::array<std::size_t, kFeatureCount> c_feat{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) c_feat[i] = table.column(kFeatureColumns[i]);

  std::vector<FeatureRow> out;
  for (const auto& row : table.rows()) {
    FeatureRow r;
    r.location_id = table.field(row, c_loc);
    const auto date = parse_iso_date(table.field(row, c_date));
    if (!date) throw ParseError(table.where(row, c_date) + ": expected an ISO-8601 date");
    r.date = *date;
    r.station_id = table.field(row, c_station);
    for (std::size_t i = 0; i < kFeatureCount; ++i) r.features[i] = table.number(row, c_feat[i]);
    r.larvae_count = table.number(row, c_count);
    if (r.larvae_count < 0.0) throw DataError(table.where(row, c_count) + ": negative larvae count");
    if (!(r.features[kTmin] <= r.features[kTmean] && r.features[kTmean] <= r.features[kTmax]))
      throw DataError(table.where(row, c_feat[kTmean]) + ": temperature ordering violated");
    out.push_back(std::move(r));
  }
  return out;
}

double summer_average(std::span<const DailyValue> daily, int year) {
  const long first = Date{year, kSummerStartMonth, kSummerStartDay}.days_since_epoch();
  const long last = Date{year, kSummerEndMonth, kSummerEndDay}.days_since_epoch();
  std::map<long, double> in_window;
  for (const auto& d : daily) {
    const long day = d.date.days_since_epoch();
    if (day >= first && day <= last) in_window[day] = d.value;
  }
  if (static_cast<long>(in_window.size()) != last - first + 1)
    throw DataError("summer_average: " + std::to_string(year) + " window Jun 22 - Sep 22 is not fully covered (" +
                    std::to_string(in_window.size()) + " of " + std::to_string(last - first + 1) + " days)");
  double total = 0.0;
  for (const auto& [day, value] : in_window) total += value;
  return total / static_cast<double>(in_window.size());
}

double summer_average(std::span<const MonthlyValue> monthly, int year) {
  double total = 0.0;
  double weight = 0.0;
  for (int m = kSummerStartMonth; m <= kSummerEndMonth; ++m) {
    const int first = m == kSummerStartMonth ? kSummerStartDay : 1;
    const int last = m == kSummerEndMonth ? kSummerEndDay : days_in_month(year, m);
    const auto it = std::find_if(monthly.begin(), monthly.end(),
                                 [&](const MonthlyValue& v) { return v.month == YearMonth{year, m}; });
    if (it == monthly.end())
      throw DataError("summer_average: " + std::to_string(year) + " window is missing month " +
                      YearMonth{year, m}.iso());
    const double days = last - first + 1;
    total += it->value * days;
    weight += days;
  }
  return total / weight;
}

}  // namespace larvaecast
