#include "larvaecast/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "larvaecast/csv.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/model_document.hpp"

namespace larvaecast::pipeline {

using json = nlohmann::ordered_json;

namespace {

void write_json(const fs::path& path, const json& doc) {
  if (path.empty()) return;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

json to_json(const stats::CorrelationReport& r) {
  return {{"r", r.r},
          {"n", r.n},
          {"t_stat", r.t_stat},
          {"p_value", r.p_value},
          {"tail", r.tail == stats::Tail::kOne ? "one" : "two"}};
}

json to_json(const stats::ResidualSummary& s) {
  return {{"n_positive_underestimates", s.n_positive},
          {"n_negative_overestimates", s.n_negative},
          {"n_zero", s.n_zero},
          {"max_positive", s.max_positive},
          {"max_negative", s.max_negative}};
}

json to_json(const IngestionReport& r) {
  return {{"input_rows", r.input_rows},
          {"dropped", {{"container", r.dropped_container}, {"merged", r.dropped_merged}, {"proximity", r.dropped_proximity}}},
          {"output_rows", r.output_rows},
          {"excluded_locations", r.excluded_locations}};
}

std::string lstm_file(VariableKind kind) { return "lstm_" + std::string(to_string(kind)) + ".model"; }

const RegionSeries* find_series(const std::vector<RegionSeries>& all, const std::string& region, VariableKind kind) {
  for (const auto& s : all)
    if (s.region_id == region && s.variable == kind) return &s;
  return nullptr;
}

std::vector<std::string> region_order(const std::vector<RegionSeries>& all) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : all)
    if (seen.insert(s.region_id).second) out.push_back(s.region_id);
  return out;
}

/// Values of `a` and `b` over their overlapping years.
std::pair<std::vector<double>, std::vector<double>> overlap(const RegionSeries& a, const RegionSeries& b) {
  const int first = std::max(a.start_year, b.start_year);
  const int last = std::min(a.end_year(), b.end_year());
  std::pair<std::vector<double>, std::vector<double>> out;
  for (int y = first; y <= last; ++y) {
    out.first.push_back(a.values[static_cast<std::size_t>(y - a.start_year)]);
    out.second.push_back(b.values[static_cast<std::size_t>(y - b.start_year)]);
  }
  return out;
}

}  // namespace

// --- prepare ---------------------------------------------------------------

IngestionReport cmd_prepare(const PrepareOptions& options) {
  const auto observations = parse_observations(options.observations);
  const auto stations = parse_stations(options.stations);
  auto cleaned = clean_and_join(observations, stations, options.max_km);
  write_features(options.features_out, cleaned.rows);
  write_json(options.report_out, to_json(cleaned.report));
  return cleaned.report;
}

// --- abundance model ---------------------------------------------------------

Eigen::VectorXd AbundanceModel::predict_log10(const Eigen::MatrixXd& raw_rows) const {
  const Eigen::MatrixXd scaled = scaler.apply(raw_rows);
  return nn::predict(network, scaled.transpose()).row(0).transpose();
}

double AbundanceModel::predict_log10(const std::array<double, kFeatureCount>& raw) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < kFeatureCount; ++i) row(0, static_cast<Eigen::Index>(i)) = raw[i];
  return predict_log10(row)(0);
}

void save_abundance_model(const fs::path& path, const AbundanceModel& model) {
  const std::vector<ModelDocument> docs = {to_document(model.network), to_document(model.scaler, model.log_transform)};
  save_documents(path, docs);
}

AbundanceModel load_abundance_model(const fs::path& path) {
  const auto docs = load_documents(path);
  std::optional<nn::DenseNetworkd> network;
  std::optional<std::pair<FeatureScaler, LogCountTransform>> transforms;
  for (const auto& doc : docs) {
    if (doc.schema() == "dense")
      network = dense_from_document(doc);
    else if (doc.schema() == "feature-scaler")
      transforms = feature_scaler_from_document(doc);
  }
  if (!network || !transforms) throw ParseError(path.string() + ": abundance model needs 'dense' and 'feature-scaler' documents");
  if (transforms->first.width() != static_cast<std::size_t>(network->input_width()))
    throw ParseError(path.string() + ": scaler width does not match network input width");
  return {*network, transforms->first, transforms->second};
}

ChronologicalSplit split_oldest(std::vector<FeatureRow> rows, std::size_t holdout) {
  std::stable_sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
    return std::tie(a.date, a.location_id) < std::tie(b.date, b.location_id);
  });
  ChronologicalSplit split;
  const auto cut = rows.begin() + static_cast<std::ptrdiff_t>(std::min(holdout, rows.size()));
  split.validation.assign(rows.begin(), cut);
  split.train.assign(cut, rows.end());
  return split;
}

Eigen::MatrixXd feature_matrix(const std::vector<FeatureRow>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].features[j];
  return m;
}

AbundanceTrainingOutcome train_abundance_model(const std::vector<FeatureRow>& rows, std::size_t holdout_oldest,
                                               const nn::TrainConfig& train) {
  train.validate();
  if (holdout_oldest >= rows.size())
    throw ConfigError("holdout_oldest (" + std::to_string(holdout_oldest) + ") must be smaller than the dataset (" +
                      std::to_string(rows.size()) + " rows)");
  if (rows.size() - holdout_oldest < train.batch_size)
    throw ConfigError("training split of " + std::to_string(rows.size() - holdout_oldest) +
                      " rows is smaller than one batch of " + std::to_string(train.batch_size));
  auto split = split_oldest(rows, holdout_oldest);

  AbundanceTrainingOutcome out;
  auto& model = out.model;
  const Eigen::MatrixXd train_raw = feature_matrix(split.train);
  model.scaler = fit_feature_scaler(train_raw);
  if (model.scaler.fit_rows != split.train.size())
    throw InvariantError("feature scaler was not fitted on exactly the training split");
  Eigen::VectorXd targets(train_raw.rows());
  for (std::size_t i = 0; i < split.train.size(); ++i)
    targets(static_cast<Eigen::Index>(i)) = model.log_transform.forward(split.train[i].larvae_count);

  auto trained = nn::train_abundance<double>(model.scaler.apply(train_raw), targets, train);
  model.network = std::move(trained.model);

  auto& rep = out.report;
  rep.n_train = split.train.size();
  rep.n_validation = split.validation.size();
  rep.epochs = trained.log.epoch_losses.size();
  rep.plateaued = trained.log.plateaued;
  rep.final_loss = trained.log.epoch_losses.empty() ? 0.0 : trained.log.epoch_losses.back();

  const Eigen::VectorXd train_pred = model.predict_log10(train_raw);
  rep.train = stats::correlate(std::vector<double>(train_pred.begin(), train_pred.end()),
                               std::vector<double>(targets.begin(), targets.end()));
  if (!split.validation.empty()) {
    const Eigen::VectorXd val_pred = model.predict_log10(feature_matrix(split.validation));
    std::vector<double> truth;
    for (const auto& r : split.validation) truth.push_back(model.log_transform.forward(r.larvae_count));
    const std::vector<double> pred(val_pred.begin(), val_pred.end());
    rep.validation_residuals = stats::residual_summary(pred, truth);
    if (truth.size() >= 3) {
      try {
        rep.validation = stats::correlate(pred, truth);
      } catch (const DataError&) {
        rep.validation.reset();  // constant predictions or labels: correlation undefined
      }
    }
  }
  if (rep.n_train + rep.n_validation != rows.size()) throw InvariantError("train/validation split lost rows");
  return out;
}

AbundanceTrainingReport cmd_train_abundance(const TrainAbundanceOptions& options) {
  const auto rows = read_features(options.features);
  auto outcome = train_abundance_model(rows, options.holdout_oldest, options.train);
  save_abundance_model(options.model_out, outcome.model);
  const auto& rep = outcome.report;
  json doc = {{"seed", options.train.seed},
              {"n_train", rep.n_train},
              {"n_validation", rep.n_validation},
              {"epochs", rep.epochs},
              {"plateaued", rep.plateaued},
              {"final_train_loss", rep.final_loss},
              {"parameter_count", outcome.model.network.parameter_count()},
              {"train", to_json(rep.train)},
              {"validation", rep.validation ? to_json(*rep.validation) : json(nullptr)},
              {"validation_residuals", to_json(rep.validation_residuals)}};
  write_json(options.report_out, doc);
  return rep;
}

// --- climate models ----------------------------------------------------------

ClimateModels cmd_train_climate(const TrainClimateOptions& options) {
  options.windows.validate();
  const auto all = parse_series(options.series);
  ClimateModels models;

  for (std::size_t v = 0; v < kForecastVariables.size(); ++v) {
    const auto kind = kForecastVariables[v];
    std::vector<nn::WindowPair> pairs;
    for (const auto& s : all) {
      if (s.variable != kind || s.values.size() < options.windows.lookback + options.windows.horizon) continue;
      auto w = nn::make_windows(s, options.windows);
      pairs.insert(pairs.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    if (pairs.empty())
      throw DataError("no " + std::string(to_string(kind)) + " series long enough for " +
                      std::to_string(options.windows.lookback + options.windows.horizon) + "-year windows");
    auto cfg = options.train;
    cfg.seed = derive_seed(options.train.seed, v + 1);
    auto trained = nn::train_lstm(pairs, cfg);
    models.forecasters.emplace(kind, nn::LstmForecaster{std::move(trained.model), options.windows});
  }

  for (const auto& region : region_order(all)) {
    const auto* mean = find_series(all, region, VariableKind::kSummerTmean);
    const auto* lo = find_series(all, region, VariableKind::kSummerTmin);
    const auto* hi = find_series(all, region, VariableKind::kSummerTmax);
    if (!mean || !lo || !hi) continue;
    const auto [m1, tmin] = overlap(*mean, *lo);
    const auto [m2, tmax] = overlap(*mean, *hi);
    if (m1.empty() || m2.empty()) continue;
    models.offsets[region] = OffsetK{estimate_k(m1, tmin, ExtremeKind::kMin), estimate_k(m2, tmax, ExtremeKind::kMax)};
  }

  const auto rows = read_features(options.features);
  std::vector<double> amount, days;
  for (const auto& r : rows) {
    amount.push_back(r.features[kPrecipMm]);
    days.push_back(r.features[kPrecipDays]);
  }
  models.precip_days = fit_linear(amount, days);

  save_climate_models(options.out_dir, models);
  return models;
}

void save_climate_models(const fs::path& dir, const ClimateModels& models) {
  fs::create_directories(dir);
  for (const auto& [kind, forecaster] : models.forecasters) {
    const std::vector<ModelDocument> docs = {to_document(forecaster)};
    save_documents(dir / lstm_file(kind), docs);
  }
  std::vector<ModelDocument> offsets;
  for (const auto& [region, k] : models.offsets) offsets.push_back(to_document(region, k));
  if (!offsets.empty()) save_documents(dir / "offsets.model", offsets);
  const std::vector<ModelDocument> linear = {to_document(models.precip_days)};
  save_documents(dir / "precip_days.model", linear);
}

ClimateModels load_climate_models(const fs::path& dir) {
  ClimateModels models;
  for (auto kind : kForecastVariables) {
    const auto docs = load_documents(dir / lstm_file(kind));
    models.forecasters.emplace(kind, lstm_from_document(docs.at(0)));
  }
  if (fs::exists(dir / "offsets.model"))
    for (const auto& doc : load_documents(dir / "offsets.model")) models.offsets.insert(offsets_from_document(doc));
  models.precip_days = linear_from_document(load_documents(dir / "precip_days.model").at(0));
  return models;
}

// --- forecast ----------------------------------------------------------------

ForecastSummary run_forecast(const std::vector<RegionSeries>& all, const ClimateModels& models, std::size_t rounds,
                             int target_year) {
  ForecastSummary summary;
  const auto& mean_model = models.forecasters.at(VariableKind::kSummerTmean);
  const auto& precip_model = models.forecasters.at(VariableKind::kSummerPrecip);

  for (const auto& region : region_order(all)) {
    const auto* mean = find_series(all, region, VariableKind::kSummerTmean);
    const auto* precip = find_series(all, region, VariableKind::kSummerPrecip);
    const auto offsets = models.offsets.find(region);
    try {
      if (!mean || !precip) throw DataError("region " + region + " lacks summer_tmean or summer_precip series");
      if (offsets == models.offsets.end()) throw DataError("region " + region + " has no min/max temperature offsets");

      auto run = [&](const RegionSeries& s, const nn::LstmForecaster& f) {
        ForecastConfig cfg;
        cfg.lookback = f.windows.lookback;
        cfg.horizon = f.windows.horizon;
        cfg.rounds = rounds;
        if (s.values.size() < cfg.lookback)
          throw DataError("series " + s.label() + " has " + std::to_string(s.values.size()) + " values; need " +
                          std::to_string(cfg.lookback));
        if (s.end_year() + static_cast<int>(cfg.horizon * cfg.rounds) < target_year)
          throw ConfigError("forecast of " + s.label() + " with t=" + std::to_string(rounds) + " ends before " +
                            std::to_string(target_year));
        ForecastInput input{s.region_id, s.variable, s.end_year(),
                            Eigen::Map<const Eigen::VectorXd>(s.values.data() + s.values.size() - cfg.lookback,
                                                              static_cast<Eigen::Index>(cfg.lookback))};
        BlockPredictor predictor = [&f](const Eigen::VectorXd& x) { return f(x); };
        return forecast(predictor, {input}, cfg).front();
      };
      const auto tmean = run(*mean, mean_model);
      auto amount = run(*precip, precip_model);
      for (double& v : amount.values) v = std::max(v, 0.0);
      const auto derived = derive_min_max(tmean.values, offsets->second);

      auto emit = [&](std::string_view name, int start, const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
          summary.rows.push_back({region, std::string(name), start + static_cast<int>(i), values[i]});
      };
      std::vector<double> days;
      for (double v : amount.values) days.push_back(predict_days(models.precip_days, v));
      emit(to_string(VariableKind::kSummerTmean), tmean.start_year, tmean.values);
      emit(to_string(VariableKind::kSummerTmin), tmean.start_year, derived.min);
      emit(to_string(VariableKind::kSummerTmax), tmean.start_year, derived.max);
      emit(to_string(VariableKind::kSummerPrecip), amount.start_year, amount.values);
      emit("precip_days", amount.start_year, days);
    } catch (const DataError& e) {
      summary.warnings.push_back(e.what());
    }
  }
  if (summary.rows.empty()) throw DataError("no region could be forecast");
  return summary;
}

ForecastSummary cmd_forecast(const ForecastOptions& options) {
  if (options.rounds < 1) throw ConfigError("forecast rounds must be positive");
  const auto all = parse_series(options.series);
  const auto models = load_climate_models(options.climate_dir);
  auto summary = run_forecast(all, models, options.rounds, options.target_year);
  std::vector<std::vector<std::string>> body;
  for (const auto& r : summary.rows)
    body.push_back({r.region_id, r.variable, std::to_string(r.year), csv::format_number(r.value)});
  csv::write_file(options.forecast_out, {"region_id", "variable", "year", "value"}, body);
  return summary;
}

std::vector<ForecastRow> read_forecast(const fs::path& path) {
  const auto table = csv::read_file(path);
  const auto c_region = table.column("region_id");
  const auto c_var = table.column("variable");
  const auto c_year = table.column("year");
  const auto c_value = table.column("value");
  std::vector<ForecastRow> out;
  for (const auto& row : table.rows())
    out.push_back({table.field(row, c_region), table.field(row, c_var), static_cast<int>(table.integer(row, c_year)),
                   table.number(row, c_value)});
  return out;
}

// --- project -----------------------------------------------------------------

std::map<std::string, double> read_region_elevations(const fs::path& path) {
  const auto table = csv::read_file(path);
  const auto c_region = table.column("region_id");
  const auto c_elev = table.column("elevation_m");
  std::map<std::string, double> out;
  for (const auto& row : table.rows())
    if (!out.emplace(table.field(row, c_region), table.number(row, c_elev)).second)
      throw DataError(table.where(row, c_region) + ": duplicate region");
  return out;
}

std::vector<AbundanceProjection> project(const std::vector<ForecastRow>& forecast, const AbundanceModel& model,
                                         const std::map<std::string, double>& elevations,
                                         const std::vector<int>& years) {
  std::map<std::tuple<std::string, std::string, int>, double> lookup;
  std::vector<std::string> regions;
  std::set<std::string> seen;
  for (const auto& r : forecast) {
    lookup[{r.region_id, r.variable, r.year}] = r.value;
    if (seen.insert(r.region_id).second) regions.push_back(r.region_id);
  }
  const std::array<std::string, 5> variables = {"summer_tmean", "summer_tmax", "summer_tmin", "precip_days",
                                                "summer_precip"};

  std::vector<AbundanceProjection> out;
  for (const auto& region : regions) {
    const auto elev = elevations.find(region);
    if (elev == elevations.end()) throw DataError("region " + region + " has no configured elevation");
    for (int year : years) {
      AbundanceProjection p;
      p.region_id = region;
      p.year = year;
      for (std::size_t i = 0; i < variables.size(); ++i) {
        const auto it = lookup.find({region, variables[i], year});
        if (it == lookup.end())
          throw DataError("region " + region + " is missing " + variables[i] + " for " + std::to_string(year));
        p.inputs[i] = it->second;
      }
      p.inputs[kElevation] = elev->second;
      p.log10_abundance = model.predict_log10(p.inputs);
      p.abundance = model.log_transform.inverse(p.log10_abundance);
      out.push_back(p);
    }
  }
  return out;
}

namespace {

const std::vector<std::string> kProjectionHeader = {"region_id", "year",      "log10_abundance", "abundance",
                                                    "tmean_c",   "tmax_c",    "tmin_c",          "precip_days",
                                                    "precip_mm", "elevation_m"};

}  // namespace

std::vector<AbundanceProjection> cmd_project(const ProjectOptions& options) {
  if (options.years.empty()) throw ConfigError("project: no target years");
  const auto forecast_rows = read_forecast(options.forecast);
  const auto model = load_abundance_model(options.model);
  const auto elevations = read_region_elevations(options.regions);
  auto projections = project(forecast_rows, model, elevations, options.years);
  std::vector<std::vector<std::string>> body;
  for (const auto& p : projections) {
    std::vector<std::string> row = {p.region_id, std::to_string(p.year), csv::format_number(p.log10_abundance),
                                    csv::format_number(p.abundance)};
    for (double v : p.inputs) row.push_back(csv::format_number(v));
    body.push_back(std::move(row));
  }
  csv::write_file(options.projections_out, kProjectionHeader, body);
  return projections;
}

std::vector<AbundanceProjection> read_projections(const fs::path& path) {
  const auto table = csv::read_file(path);
  std::array<std::size_t, 10> c{};
  for (std::size_t i = 0; i < kProjectionHeader.size(); ++i) c[i] = table.column(kProjectionHeader[i]);
  std::vector<AbundanceProjection> out;
  for (const auto& row : table.rows()) {
    AbundanceProjection p;
    p.region_id = table.field(row, c[0]);
    p.year = static_cast<int>(table.integer(row, c[1]));
    p.log10_abundance = table.number(row, c[2]);
    p.abundance = table.number(row, c[3]);
    for (std::size_t i = 0; i < kFeatureCount; ++i) p.inputs[i] = table.number(row, c[4 + i]);
    out.push_back(p);
  }
  return out;
}

// --- report ------------------------------------------------------------------

std::optional<double> percent_change(double start, double end) {
  if (start == 0.0) return std::nullopt;
  return 100.0 * (end - start) / start;
}

ReportSummary cmd_report(const ReportOptions& options) {
  const auto projections = read_projections(options.projections);
  std::vector<std::string> regions;
  std::map<std::pair<std::string, int>, const AbundanceProjection*> by_key;
  for (const auto& p : projections) {
    if (by_key.emplace(std::pair{p.region_id, p.year}, &p).second &&
        std::find(regions.begin(), regions.end(), p.region_id) == regions.end())
      regions.push_back(p.region_id);
  }

  auto need = [&](const std::string& region, int year) {
    const auto it = by_key.find({region, year});
    if (it == by_key.end())
      throw DataError("projections for region " + region + " lack year " + std::to_string(year));
    return it->second;
  };

  ReportSummary summary;
  std::vector<std::vector<std::string>> choropleth, changes;
  auto pct_text = [](std::optional<double> v) { return v ? csv::format_number(*v) : std::string(); };
  for (const auto& region : regions) {
    const auto* start = need(region, options.start_year);
    const auto* end = need(region, options.end_year);
    choropleth.push_back({region, std::to_string(end->year), csv::format_number(end->log10_abundance),
                          csv::format_number(end->abundance)});
    PercentChange change{region, start->abundance, end->abundance, percent_change(start->abundance, end->abundance)};
    changes.push_back({region, std::to_string(options.start_year), std::to_string(options.end_year),
                       csv::format_number(change.start_value), csv::format_number(change.end_value),
                       pct_text(change.percent), change.percent ? "ok" : "undefined change",
                       pct_text(percent_change(start->inputs[kTmean], end->inputs[kTmean])),
                       pct_text(percent_change(start->inputs[kPrecipMm], end->inputs[kPrecipMm]))});
    summary.changes.push_back(change);
  }
  csv::write_file(options.out_dir / "choropleth.csv", {"region_id", "year", "log10_abundance", "abundance"},
                  choropleth);
  csv::write_file(options.out_dir / "percent_change.csv",
                  {"region_id", "start_year", "end_year", "start_abundance", "end_abundance", "percent_change",
                   "status", "tmean_percent_change", "precip_percent_change"},
                  changes);

  if (options.geometry) {
    std::ifstream in(*options.geometry);
    if (!in) throw DataError("cannot open " + options.geometry->string());
    json geo;
    try {
      geo = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(options.geometry->string() + ": " + e.what());
    }
    if (!geo.is_object() || !geo.contains("features") || !geo["features"].is_array())
      throw ParseError(options.geometry->string() + ": expected a GeoJSON FeatureCollection");
    std::set<std::string> matched;
    for (auto& feature : geo["features"]) {
      if (!feature.is_object() || !feature.contains("properties") || !feature["properties"].is_object()) continue;
      auto& props = feature["properties"];
      if (!props.contains(options.region_property) || !props[options.region_property].is_string()) continue;
      const auto id = props[options.region_property].get<std::string>();
      const auto it = by_key.find({id, options.end_year});
      if (it == by_key.end()) continue;
      matched.insert(id);
      props["year"] = options.end_year;
      props["log10_abundance"] = it->second->log10_abundance;
      props["abundance"] = it->second->abundance;
      const auto change = std::find_if(summary.changes.begin(), summary.changes.end(),
                                       [&](const PercentChange& c) { return c.region_id == id; });
      props["percent_change"] = change != summary.changes.end() && change->percent ? json(*change->percent) : json(nullptr);
    }
    for (const auto& region : regions)
      if (!matched.count(region)) summary.unmatched_regions.push_back(region);
    fs::create_directories(options.out_dir);
    std::ofstream out(options.out_dir / "choropleth.geojson", std::ios::binary | std::ios::trunc);
    out << geo.dump(2) << '\n';
    if (!out) throw DataError("failed writing choropleth.geojson");
  }
  return summary;
}

// --- everything ----------------------------------------------------------------

RunSummary cmd_run(const RunOptions& options) {
  RunSummary summary;
  const auto& in = options.data_dir;
  const auto& out = options.out_dir;
  fs::create_directories(out);

  summary.ingestion = cmd_prepare({in / "observations.csv", in / "stations.csv", out / "features.csv",
                                   out / "ingest_report.json", options.max_km});

  TrainAbundanceOptions abundance{out / "features.csv", out / "abundance.model", out / "train_report.json",
                                  options.holdout_oldest, options.abundance_train};
  abundance.train.seed = options.seed;
  summary.abundance = cmd_train_abundance(abundance);

  TrainClimateOptions climate;
  climate.series = in / "series.csv";
  climate.features = out / "features.csv";
  climate.out_dir = out / "climate";
  climate.train = options.climate_train;
  climate.train.seed = options.seed;
  cmd_train_climate(climate);

  summary.forecast =
      cmd_forecast({in / "series.csv", out / "climate", out / "forecast.csv", options.rounds, options.target_year});

  ProjectOptions project_opts{out / "forecast.csv", out / "abundance.model", in / "regions.csv",
                              out / "projections.csv", {options.start_year, options.target_year}};
  if (options.start_year == options.target_year) project_opts.years = {options.target_year};
  summary.projections = cmd_project(project_opts);

  ReportOptions report{out / "projections.csv", out, options.start_year, options.target_year, std::nullopt, "region_id"};
  if (fs::exists(in / "regions.geojson")) report.geometry = in / "regions.geojson";
  summary.report = cmd_report(report);
  return summary;
}

}  // namespace larvaecast::pipeline
