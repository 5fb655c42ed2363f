#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "larvaecast/csv.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/ingest.hpp"
#include "larvaecast/random.hpp"
#include "test_support.hpp"

using namespace larvaecast;

namespace {

const std::string kObsHeader = "location_id,latitude,longitude,date,water_source,larvae_count\n";
const std::string kStationHeader =
    "station_id,latitude,longitude,month,tmean_c,tmax_c,tmin_c,precip_days,precip_mm,elevation_m\n";

std::vector<LarvaeObservation> obs_from(const std::string& body) {
  std::istringstream in(kObsHeader + body);
  return parse_observations(in, "obs.csv");
}

std::vector<StationRecord> stations_from(const std::string& body) {
  std::istringstream in(kStationHeader + body);
  return parse_stations(in, "stations.csv");
}

/// Point `km` kilometres due north of `p` along the meridian.
GeoPoint north_of(const GeoPoint& p, double km) {
  return {p.latitude + km / kEarthRadiusKm * 180.0 / std::numbers::pi, p.longitude};
}

LarvaeObservation observation(std::string id, GeoPoint at, Date date, long long count,
                              WaterSource src = WaterSource::kStill) {
  return {std::move(id), at, date, src, count};
}

StationRecord station(std::string id, GeoPoint at, YearMonth month, double tmean = 20.0) {
  return {std::move(id), at, month, tmean, tmean + 6, tmean - 6, 5.0, 12.0, 1500.0};
}

template <typename Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("dates") {
  CHECK(parse_iso_date("2021-07-04") == Date{2021, 7, 4});
  CHECK_FALSE(parse_iso_date("2021-02-29"));
  CHECK(parse_iso_date("2020-02-29"));
  CHECK_FALSE(parse_iso_date("2021-7-4x"));
  CHECK(Date{1970, 1, 1}.days_since_epoch() == 0);
  CHECK(Date{2000, 3, 1}.days_since_epoch() == 11017);
  for (long d : {-1000L, 0L, 11017L, 19000L}) CHECK(Date::from_days(d).days_since_epoch() == d);
  CHECK(Date{2019, 6, 2}.iso() == "2019-06-02");
  CHECK(parse_year_month("2019-06") == YearMonth{2019, 6});
  CHECK_FALSE(parse_year_month("2019-13"));
}

TEST_CASE("observation parsing") {
  CHECK(obs_from("").empty());

  const auto rows = obs_from("A,40.0,-105.0,2019-07-01,container,3\nB,41.0,-104.5,2019-07-02,flowing,0\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].water_source == WaterSource::kContainer);
  CHECK(rows[0].larvae_count == 3);
  CHECK(rows[1].water_source == WaterSource::kFlowing);
  CHECK(rows[1].position.longitude == -104.5);

  const auto msg = error_message([] { obs_from("A,40.0,-105.0,2019-07-01,still,3\nB,95,-105.0,2019-07-01,still,1\n"); });
  CHECK(msg.find("obs.csv:3") != std::string::npos);
  CHECK(msg.find("latitude") != std::string::npos);
  CHECK_THROWS_AS(obs_from("B,95,-105.0,2019-07-01,still,1\n"), DataError);

  CHECK_THROWS_AS(obs_from("A,40,-105,2019-07-01,puddle,1\n"), ParseError);
  CHECK_THROWS_AS(obs_from("A,40,-105,07/01/2019,still,1\n"), ParseError);
  CHECK_THROWS_AS(obs_from("A,40,-105,2019-07-01,still,-2\n"), DataError);
  CHECK_THROWS_AS(obs_from("A,40,-105,2019-07-01,still,1.5\n"), ParseError);
  CHECK_THROWS_AS(obs_from("A,north,-105,2019-07-01,still,1\n"), ParseError);

  std::istringstream missing("location_id,latitude,longitude,date,larvae_count\n");
  const auto missing_msg = error_message([&] { parse_observations(missing, "m.csv"); });
  CHECK(missing_msg.find("water_source") != std::string::npos);
}

TEST_CASE("station parsing validates records") {
  const auto ok = stations_from("S1,40,-105,2019-07,20,26,14,5,12,1500\n");
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].month == YearMonth{2019, 7});
  CHECK(ok[0].elevation_m == 1500.0);

  CHECK_THROWS_AS(stations_from("S1,40,-105,2019-07,27,26,14,5,12,1500\n"), DataError);
  CHECK_THROWS_AS(stations_from("S1,40,-105,2019-07,20,26,14,32,12,1500\n"), DataError);
  CHECK_THROWS_AS(stations_from("S1,40,-105,2019-07,20,26,14,5,-1,1500\n"), DataError);
  CHECK_THROWS_AS(stations_from("S1,40,-105,2019-07,20,26,14,5,12,1500\nS1,40,-105,2019-07,21,26,14,5,12,1500\n"),
                  DataError);
  CHECK_THROWS_AS(stations_from("S1,40,-105,2019-7x,20,26,14,5,12,1500\n"), ParseError);
}

TEST_CASE("series parsing groups and checks years") {
  std::istringstream in(
      "region_id,variable,year,value\n"
      "R1,summer_tmean,2001,11\nR1,summer_tmean,2000,10\nR2,summer_precip,1990,3\nR1,summer_tmean,2002,12\n");
  const auto series = parse_series(in, "s.csv");
  REQUIRE(series.size() == 2);
  CHECK(series[0].region_id == "R1");
  CHECK(series[0].start_year == 2000);
  CHECK(series[0].values == std::vector<double>{10, 11, 12});
  CHECK(series[0].end_year() == 2002);
  CHECK(series[1].variable == VariableKind::kSummerPrecip);

  std::istringstream gap("region_id,variable,year,value\nR1,summer_tmean,2000,1\nR1,summer_tmean,2002,1\n");
  CHECK_THROWS_AS(parse_series(gap, "g.csv"), DataError);
  std::istringstream repeat("region_id,variable,year,value\nR1,summer_tmean,2000,1\nR1,summer_tmean,2000,1\n");
  CHECK_THROWS_AS(parse_series(repeat, "r.csv"), DataError);
  std::istringstream unknown("region_id,variable,year,value\nR1,winter,2000,1\n");
  CHECK_THROWS_AS(parse_series(unknown, "u.csv"), ParseError);
}

TEST_CASE("container filter and duplicate merge") {
  const GeoPoint p{40, -105};
  const std::vector<LarvaeObservation> obs = {
      observation("A", p, {2019, 7, 1}, 5, WaterSource::kContainer),
      observation("B", p, {2019, 7, 1}, 2),
      observation("C", p, {2019, 7, 2}, 0, WaterSource::kFlowing),
  };
  const auto kept = filter_container_sources(obs);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].location_id == "B");
  CHECK(kept[1].location_id == "C");

  const std::vector<LarvaeObservation> dup = {observation("L", p, {2019, 7, 1}, 3),
                                              observation("L", p, {2019, 7, 1}, 4)};
  const auto merged = merge_duplicates(dup);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].larvae_count == 7);

  const std::vector<LarvaeObservation> mixed = {
      observation("Z", p, {2019, 7, 1}, 1), observation("A", p, {2019, 8, 1}, 1), observation("A", p, {2019, 7, 1}, 1),
      observation("Z", p, {2019, 7, 1}, 9), observation("A", p, {2019, 7, 1}, 2)};
  const auto m = merge_duplicates(mixed);
  REQUIRE(m.size() == 3);
  CHECK(m[0].location_id == "A");
  CHECK(m[0].date == Date{2019, 7, 1});
  CHECK(m[0].larvae_count == 3);
  CHECK(m[1].date == Date{2019, 8, 1});
  CHECK(m[2].larvae_count == 10);
  long long before = 0, after = 0;
  for (const auto& o : mixed) before += o.larvae_count;
  for (const auto& o : m) after += o.larvae_count;
  CHECK(before == after);
}

TEST_CASE("haversine distance") {
  CHECK(haversine_km({40, -105}, {40, -105}) == 0.0);
  CHECK(haversine_km({0, 0}, {0, 90}) == doctest::Approx(std::numbers::pi / 2 * 6371.0).epsilon(1e-12));
  CHECK(haversine_km({0, 0}, {0, 90}) == doctest::Approx(10007.5).epsilon(1e-5));
  RandomStream rng(3);
  for (int i = 0; i < 50; ++i) {
    const GeoPoint a{rng.uniform(-90, 90), rng.uniform(-180, 180)}, b{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    CHECK(haversine_km(a, b) == doctest::Approx(haversine_km(b, a)).epsilon(1e-14));
    CHECK(haversine_km(a, b) <= std::numbers::pi * 6371.0 + 1e-9);
  }
  CHECK(haversine_km({40, -105}, north_of({40, -105}, 10.0)) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK_THROWS_AS(haversine_km({91, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(haversine_km({0, 0}, {0, 181}), DomainError);
}

TEST_CASE("nearest-station join") {
  const GeoPoint site{40.0, -105.0};
  const YearMonth july{2019, 7};
  const std::vector<LarvaeObservation> obs = {observation("A", site, {2019, 7, 15}, 4)};

  SUBCASE("station within range is joined") {
    const std::vector<StationRecord> st = {station("S10", north_of(site, 10.0), july, 21.0)};
    const auto r = join_nearest_station(obs, st);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].station_id == "S10");
    CHECK(r.rows[0].features[kTmean] == 21.0);
    CHECK(r.rows[0].features[kTmax] == 27.0);
    CHECK(r.rows[0].features[kElevation] == 1500.0);
    CHECK(r.rows[0].larvae_count == 4.0);
    CHECK(r.excluded_locations.empty());
  }
  SUBCASE("station out of range excludes the observation") {
    const std::vector<StationRecord> st = {station("S60", north_of(site, 60.0), july)};
    const auto r = join_nearest_station(obs, st);
    CHECK(r.rows.empty());
    CHECK(r.excluded_locations == std::vector<std::string>{"A"});
  }
  SUBCASE("nearest station wins regardless of order") {
    std::vector<StationRecord> st = {station("S20", north_of(site, 20.0), july, 30.0),
                                     station("S05", north_of(site, 5.0), july, 10.0)};
    CHECK(join_nearest_station(obs, st).rows.at(0).station_id == "S05");
    std::reverse(st.begin(), st.end());
    CHECK(join_nearest_station(obs, st).rows.at(0).station_id == "S05");
  }
  SUBCASE("only the observation's month is eligible") {
    const std::vector<StationRecord> st = {station("NEAR", north_of(site, 1.0), {2019, 8}),
                                           station("FAR", north_of(site, 30.0), july)};
    CHECK(join_nearest_station(obs, st).rows.at(0).station_id == "FAR");
  }
  SUBCASE("equidistant stations go to the smaller id") {
    const std::vector<StationRecord> st = {station("S2", north_of(site, 7.0), july),
                                           station("S1", north_of(site, 7.0), july)};
    CHECK(join_nearest_station(obs, st).rows.at(0).station_id == "S1");
  }
  CHECK_THROWS_AS(join_nearest_station(obs, std::vector<StationRecord>{}, 0.0), ConfigError);
}

TEST_CASE("join is independent of station order") {
  RandomStream rng(12);
  const GeoPoint centre{39.0, -106.0};
  std::vector<StationRecord> st;
  for (int i = 0; i < 25; ++i)
    st.push_back(station("S" + std::to_string(i), {centre.latitude + rng.uniform(-0.6, 0.6),
                                                   centre.longitude + rng.uniform(-0.6, 0.6)},
                         {2019, 7}, rng.uniform(10, 25)));
  std::vector<LarvaeObservation> obs;
  for (int i = 0; i < 40; ++i)
    obs.push_back(observation("L" + std::to_string(i),
                              {centre.latitude + rng.uniform(-0.8, 0.8), centre.longitude + rng.uniform(-0.8, 0.8)},
                              {2019, 7, 10}, 1));
  const auto base = join_nearest_station(obs, st, 25.0);
  for (int trial = 0; trial < 5; ++trial) {
    rng.shuffle(std::span(st));
    const auto again = join_nearest_station(obs, st, 25.0);
    REQUIRE(again.rows.size() == base.rows.size());
    for (std::size_t i = 0; i < base.rows.size(); ++i) CHECK(again.rows[i].station_id == base.rows[i].station_id);
    CHECK(again.excluded_locations == base.excluded_locations);
  }
}

TEST_CASE("clean_and_join accounts for every dropped row") {
  const GeoPoint site{40.0, -105.0};
  const std::vector<StationRecord> st = {station("S1", north_of(site, 3.0), {2019, 7})};
  const std::vector<LarvaeObservation> obs = {
      observation("A", site, {2019, 7, 1}, 1, WaterSource::kContainer),
      observation("B", site, {2019, 7, 1}, 2),
      observation("B", site, {2019, 7, 1}, 3),
      observation("C", north_of(site, 100.0), {2019, 7, 1}, 4),
      observation("C", north_of(site, 100.0), {2019, 7, 2}, 4),
      observation("D", site, {2019, 7, 3}, 0, WaterSource::kFlowing),
  };
  const auto out = clean_and_join(obs, st);
  const auto& rep = out.report;
  CHECK(rep.input_rows == 6);
  CHECK(rep.dropped_container == 1);
  CHECK(rep.dropped_merged == 1);
  CHECK(rep.dropped_proximity == 2);
  CHECK(rep.output_rows == 2);
  CHECK(rep.excluded_locations == std::vector<std::string>{"C"});
  CHECK(rep.reconciles());
  CHECK(out.rows[0].larvae_count == 5.0);

  const std::vector<LarvaeObservation> containers = {
      observation("A", site, {2019, 7, 1}, 1, WaterSource::kContainer)};
  const auto msg = error_message([&] { clean_and_join(containers, st); });
  CHECK(msg.find("container") != std::string::npos);
  const std::vector<LarvaeObservation> remote = {observation("C", north_of(site, 100.0), {2019, 7, 1}, 4)};
  const auto msg2 = error_message([&] { clean_and_join(remote, st); });
  CHECK(msg2.find("proximity") != std::string::npos);
}

TEST_CASE("feature files round-trip") {
  testing::TempDir dir("features");
  std::vector<FeatureRow> rows(2);
  rows[0] = {"L1", {2019, 7, 1}, "S1", {20.125, 26.5, 13.75, 4.2, 11.0 / 3.0, 1612.0}, 17.0};
  rows[1] = {"L, quoted", {2020, 8, 30}, "S2", {-1e-7, 0.1, -0.2, 0.0, 0.0, 0.0}, 0.0};
  rows[1].features = {0.1, 0.3, -0.2, 0.0, 1e-300, 3.0};
  write_features(dir / "f.csv", rows);
  const auto back = read_features(dir / "f.csv");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].location_id == rows[i].location_id);
    CHECK(back[i].date == rows[i].date);
    CHECK(back[i].station_id == rows[i].station_id);
    CHECK(back[i].features == rows[i].features);
    CHECK(back[i].larvae_count == rows[i].larvae_count);
  }
}

TEST_CASE("summer averages") {
  std::vector<DailyValue> daily;
  for (Date d{2019, 6, 1}; d <= Date{2019, 9, 30}; d = Date::from_days(d.days_since_epoch() + 1))
    daily.push_back({d, 20.0});
  CHECK(summer_average(daily, 2019) == 20.0);

  // Value = offset from June 22; the window holds offsets 0..92.
  const long june22 = Date{2019, 6, 22}.days_since_epoch();
  for (auto& v : daily) v.value = static_cast<double>(v.date.days_since_epoch() - june22);
  CHECK(summer_average(daily, 2019) == doctest::Approx(46.0).epsilon(1e-14));

  auto gap = daily;
  gap.erase(std::find_if(gap.begin(), gap.end(), [](const DailyValue& v) { return v.date == Date{2019, 8, 10}; }));
  CHECK_THROWS_AS(summer_average(gap, 2019), DataError);
  CHECK_THROWS_AS(summer_average(daily, 2020), DataError);

  const std::vector<MonthlyValue> monthly = {
      {{2019, 5}, 999.0}, {{2019, 6}, 10.0}, {{2019, 7}, 20.0}, {{2019, 8}, 30.0}, {{2019, 9}, 40.0}};
  CHECK(summer_average(monthly, 2019) == doctest::Approx((9 * 10.0 + 31 * 20.0 + 31 * 30.0 + 22 * 40.0) / 93.0));
  CHECK_THROWS_AS(summer_average(std::span(monthly).first(3), 2019), DataError);
}

TEST_CASE("csv helpers") {
  CHECK(csv::split_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});
  CHECK(csv::escape("x,y") == "\"x,y\"");
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678, 1e21})
    CHECK(std::stod(csv::format_number(v)) == v);
  std::istringstream in("a,b\n1,2\n");
  const auto t = csv::parse(in, "t.csv");
  CHECK(t.where(t.rows()[0], 1) == "t.csv:2 column 'b'");
  CHECK_THROWS_AS(t.column("zz"), ParseError);
}
