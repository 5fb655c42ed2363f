#pragma once

// The command layer: each cmd_* reads its inputs from disk, runs one stage
// and writes its outputs. The CLI and the integration tests both call these.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "larvaecast/dense_network.hpp"
#include "larvaecast/forecast_engine.hpp"
#include "larvaecast/ingest.hpp"
#include "larvaecast/lstm.hpp"
#include "larvaecast/preprocess.hpp"
#include "larvaecast/stats.hpp"
#include "larvaecast/training.hpp"
#include "larvaecast/trend_models.hpp"

namespace larvaecast::pipeline {

namespace fs = std::filesystem;

inline constexpr std::size_t kDefaultHoldoutOldest = 35;
inline constexpr int kDefaultTargetYear = 2050;

// --- prepare ---------------------------------------------------------------

struct PrepareOptions {
  fs::path observations;
  fs::path stations;
  fs::path features_out;
  fs::path report_out;  // optional JSON report
  double max_km = kDefaultMaxStationKm;
};

IngestionReport cmd_prepare(const PrepareOptions& options);

// --- abundance model ---------------------------------------------------------

/// The trained regressor together with the transforms fitted on its
/// training split.
struct AbundanceModel {
  nn::DenseNetworkd network;
  FeatureScaler scaler;
  LogCountTransform log_transform;

  /// Eval-mode log10 abundance for raw (unscaled) feature rows (n x 6).
  Eigen::VectorXd predict_log10(const Eigen::MatrixXd& raw_rows) const;
  double predict_log10(const std::array<double, kFeatureCount>& raw) const;
};

void save_abundance_model(const fs::path& path, const AbundanceModel& model);
AbundanceModel load_abundance_model(const fs::path& path);

/// Rows sorted oldest first, the first `holdout` of which form validation.
struct ChronologicalSplit {
  std::vector<FeatureRow> train;
  std::vector<FeatureRow> validation;
};

ChronologicalSplit split_oldest(std::vector<FeatureRow> rows, std::size_t holdout);

Eigen::MatrixXd feature_matrix(const std::vector<FeatureRow>& rows);

struct AbundanceTrainingReport {
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  stats::CorrelationReport train;
  std::optional<stats::CorrelationReport> validation;
  stats::ResidualSummary validation_residuals;
  std::size_t epochs = 0;
  bool plateaued = false;
  double final_loss = 0.0;
};

struct TrainAbundanceOptions {
  fs::path features;
  fs::path model_out;
  fs::path report_out;  // optional JSON report
  std::size_t holdout_oldest = kDefaultHoldoutOldest;
  nn::TrainConfig train;
};

struct AbundanceTrainingOutcome {
  AbundanceModel model;
  AbundanceTrainingReport report;
};

/// Library form of train-abundance on in-memory rows.
AbundanceTrainingOutcome train_abundance_model(const std::vector<FeatureRow>& rows, std::size_t holdout_oldest,
                                               const nn::TrainConfig& train);

AbundanceTrainingReport cmd_train_abundance(const TrainAbundanceOptions& options);

// --- climate models ----------------------------------------------------------

/// Variables forecast by an LSTM; min/max temperature are derived.
inline constexpr std::array<VariableKind, 2> kForecastVariables = {VariableKind::kSummerTmean,
                                                                   VariableKind::kSummerPrecip};

struct ClimateModels {
  std::map<VariableKind, nn::LstmForecaster> forecasters;
  std::map<std::string, OffsetK> offsets;  // per region
  LinearModel precip_days;
};

struct TrainClimateOptions {
  fs::path series;
  fs::path features;  // source rows for the days-of-precipitation model
  fs::path out_dir;
  nn::WindowConfig windows;
  nn::TrainConfig train;
};

ClimateModels cmd_train_climate(const TrainClimateOptions& options);

void save_climate_models(const fs::path& dir, const ClimateModels& models);
ClimateModels load_climate_models(const fs::path& dir);

// --- forecast ----------------------------------------------------------------

struct ForecastOptions {
  fs::path series;
  fs::path climate_dir;
  fs::path forecast_out;
  std::size_t rounds = 3;
  int target_year = kDefaultTargetYear;
};

/// One row of forecast.csv.
struct ForecastRow {
  std::string region_id;
  std::string variable;  // summer_* or precip_days
  int year = 0;
  double value = 0.0;
};

struct ForecastSummary {
  std::vector<ForecastRow> rows;
  std::vector<std::string> warnings;  // regions skipped with a reason
};

ForecastSummary run_forecast(const std::vector<RegionSeries>& series, const ClimateModels& models,
                             std::size_t rounds, int target_year);

ForecastSummary cmd_forecast(const ForecastOptions& options);

std::vector<ForecastRow> read_forecast(const fs::path& path);

// --- project -----------------------------------------------------------------

struct AbundanceProjection {
  std::string region_id;
  int year = 0;
  double log10_abundance = 0.0;
  double abundance = 0.0;
  std::array<double, kFeatureCount> inputs{};
};

struct ProjectOptions {
  fs::path forecast;
  fs::path model;
  fs::path regions;  // region_id,elevation_m
  fs::path projections_out;
  std::vector<int> years = {kDefaultTargetYear};
};

std::map<std::string, double> read_region_elevations(const fs::path& path);

std::vector<AbundanceProjection> project(const std::vector<ForecastRow>& forecast, const AbundanceModel& model,
                                         const std::map<std::string, double>& elevations,
                                         const std::vector<int>& years);

std::vector<AbundanceProjection> cmd_project(const ProjectOptions& options);

std::vector<AbundanceProjection> read_projections(const fs::path& path);

// --- report ------------------------------------------------------------------

struct PercentChange {
  std::string region_id;
  double start_value = 0.0;
  double end_value = 0.0;
  std::optional<double> percent;  // empty when start_value == 0
};

/// 100 * (end - start) / start, or empty for a zero start.
std::optional<double> percent_change(double start, double end);

struct ReportOptions {
  fs::path projections;
  fs::path out_dir;
  int start_year = 2030;
  int end_year = kDefaultTargetYear;
  std::optional<fs::path> geometry;  // GeoJSON FeatureCollection
  std::string region_property = "region_id";
};

struct ReportSummary {
  std::vector<PercentChange> changes;
  std::vector<std::string> unmatched_regions;  // projections with no geometry feature
};

ReportSummary cmd_report(const ReportOptions& options);

// --- everything ----------------------------------------------------------------

struct RunOptions {
  fs::path data_dir;  // observations.csv, stations.csv, series.csv, regions.csv [, regions.geojson]
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::size_t holdout_oldest = kDefaultHoldoutOldest;
  int start_year = 2030;
  int target_year = kDefaultTargetYear;
  std::size_t rounds = 3;
  double max_km = kDefaultMaxStationKm;
  nn::TrainConfig abundance_train;
  nn::TrainConfig climate_train;
};

struct RunSummary {
  IngestionReport ingestion;
  AbundanceTrainingReport abundance;
  ForecastSummary forecast;
  std::vector<AbundanceProjection> projections;
  ReportSummary report;
};

RunSummary cmd_run(const RunOptions& options);

}  // namespace larvaecast::pipeline
