// larvaecast command-line tool.
//
//   larvaecast prepare          --observations O --stations S --out features.csv
//   larvaecast train-abundance  --features F --seed N --model abundance.model
//   larvaecast train-climate    --series S --features F --seed N --out-dir climate/
//   larvaecast forecast         --series S --climate-dir climate/ --out forecast.csv
//   larvaecast project          --forecast F --model M --regions R --out projections.csv
//   larvaecast report           --projections P --out-dir report/
//   larvaecast run              --data-dir D --out-dir O --seed N
//   larvaecast synth            --out-dir D --seed N

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/pipeline.hpp"
#include "larvaecast/synthetic.hpp"

namespace {

using namespace larvaecast;
namespace pl = larvaecast::pipeline;

void add_train_options(CLI::App* cmd, nn::TrainConfig& cfg, const std::string& prefix = "") {
  cmd->add_option("--" + prefix + "batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--" + prefix + "learning-rate", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--" + prefix + "max-epochs", cfg.max_epochs, "Epoch limit")->capture_default_str();
  cmd->add_option("--" + prefix + "patience", cfg.plateau_patience, "Plateau window in epochs")->capture_default_str();
  cmd->add_option("--" + prefix + "tolerance", cfg.plateau_tolerance, "Relative plateau tolerance")
      ->capture_default_str();
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << nlohmann::json{{"warning", w}}.dump() << '\n';
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Larvae abundance projection from forecast climate"};
  app.require_subcommand(1);

  pl::PrepareOptions prepare;
  auto* cmd_prepare = app.add_subcommand("prepare", "Clean observations and join station features");
  cmd_prepare->add_option("--observations", prepare.observations, "observations.csv")->required();
  cmd_prepare->add_option("--stations", prepare.stations, "stations.csv")->required();
  cmd_prepare->add_option("--out", prepare.features_out, "Output features.csv")->required();
  cmd_prepare->add_option("--report", prepare.report_out, "Output ingestion report (JSON)");
  cmd_prepare->add_option("--max-km", prepare.max_km, "Station proximity limit in km")->capture_default_str();

  pl::TrainAbundanceOptions abundance;
  auto* cmd_abundance = app.add_subcommand("train-abundance", "Train the larvae abundance regressor");
  cmd_abundance->add_option("--features", abundance.features, "features.csv")->required();
  cmd_abundance->add_option("--model", abundance.model_out, "Output model document")->required();
  cmd_abundance->add_option("--report", abundance.report_out, "Output training report (JSON)");
  cmd_abundance->add_option("--seed", abundance.train.seed, "Random seed")->required();
  cmd_abundance->add_option("--holdout-oldest", abundance.holdout_oldest, "Oldest rows withheld for validation")
      ->capture_default_str();
  add_train_options(cmd_abundance, abundance.train);

  pl::TrainClimateOptions climate;
  auto* cmd_climate = app.add_subcommand("train-climate", "Train climate LSTMs, offsets and the days model");
  cmd_climate->add_option("--series", climate.series, "series.csv")->required();
  cmd_climate->add_option("--features", climate.features, "features.csv (days-of-precipitation fit)")->required();
  cmd_climate->add_option("--out-dir", climate.out_dir, "Output directory for model documents")->required();
  cmd_climate->add_option("--seed", climate.train.seed, "Random seed")->required();
  cmd_climate->add_option("--lookback", climate.windows.lookback, "Input window length")->capture_default_str();
  cmd_climate->add_option("--horizon", climate.windows.horizon, "Prediction block length")->capture_default_str();
  add_train_options(cmd_climate, climate.train);

  pl::ForecastOptions forecast;
  auto* cmd_forecast = app.add_subcommand("forecast", "Recursive climate forecast per region");
  cmd_forecast->add_option("--series", forecast.series, "series.csv")->required();
  cmd_forecast->add_option("--climate-dir", forecast.climate_dir, "Directory from train-climate")->required();
  cmd_forecast->add_option("--out", forecast.forecast_out, "Output forecast.csv")->required();
  cmd_forecast->add_option("--rounds", forecast.rounds, "Number of prediction blocks t")->capture_default_str();
  cmd_forecast->add_option("--target-year", forecast.target_year, "Year the forecast must reach")
      ->capture_default_str();

  pl::ProjectOptions project;
  auto* cmd_project = app.add_subcommand("project", "Project larvae abundance from forecast climate");
  cmd_project->add_option("--forecast", project.forecast, "forecast.csv")->required();
  cmd_project->add_option("--model", project.model, "Abundance model document")->required();
  cmd_project->add_option("--regions", project.regions, "regions.csv (region_id,elevation_m)")->required();
  cmd_project->add_option("--out", project.projections_out, "Output projections.csv")->required();
  cmd_project->add_option("--years", project.years, "Years to project")->delimiter(',')->capture_default_str();

  pl::ReportOptions report;
  std::string geometry;
  auto* cmd_report = app.add_subcommand("report", "Choropleth table and percent-change report");
  cmd_report->add_option("--projections", report.projections, "projections.csv")->required();
  cmd_report->add_option("--out-dir", report.out_dir, "Output directory")->required();
  cmd_report->add_option("--start-year", report.start_year, "Comparison start year")->capture_default_str();
  cmd_report->add_option("--end-year", report.end_year, "Comparison end / map year")->capture_default_str();
  cmd_report->add_option("--geometry", geometry, "GeoJSON FeatureCollection to merge into");
  cmd_report->add_option("--region-property", report.region_property, "Feature property holding the region id")
      ->capture_default_str();

  pl::RunOptions run;
  auto* cmd_run = app.add_subcommand("run", "Run every stage on a data directory");
  cmd_run->add_option("--data-dir", run.data_dir, "Directory with the input CSVs")->required();
  cmd_run->add_option("--out-dir", run.out_dir, "Output directory")->required();
  cmd_run->add_option("--seed", run.seed, "Random seed")->required();
  cmd_run->add_option("--holdout-oldest", run.holdout_oldest)->capture_default_str();
  cmd_run->add_option("--start-year", run.start_year)->capture_default_str();
  cmd_run->add_option("--target-year", run.target_year)->capture_default_str();
  cmd_run->add_option("--rounds", run.rounds)->capture_default_str();
  cmd_run->add_option("--max-km", run.max_km)->capture_default_str();
  add_train_options(cmd_run, run.abundance_train, "abundance-");
  add_train_options(cmd_run, run.climate_train, "climate-");

  synthetic::Options synth;
  std::string synth_dir;
  auto* cmd_synth = app.add_subcommand("synth", "Write the synthetic demonstration dataset");
  cmd_synth->add_option("--out-dir", synth_dir, "Output directory")->required();
  cmd_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kConfiguration);
  }

  try {
    if (cmd_prepare->parsed()) {
      const auto rep = pl::cmd_prepare(prepare);
      std::cout << "features: " << rep.output_rows << " rows (container " << rep.dropped_container << ", merged "
                << rep.dropped_merged << ", proximity " << rep.dropped_proximity << ")\n";
    } else if (cmd_abundance->parsed()) {
      const auto rep = pl::cmd_train_abundance(abundance);
      std::cout << "train R=" << rep.train.r << " p=" << rep.train.p_value << " n=" << rep.n_train;
      if (rep.validation) std::cout << "; validation R=" << rep.validation->r << " p=" << rep.validation->p_value;
      std::cout << " n=" << rep.n_validation << "; epochs " << rep.epochs << '\n';
    } else if (cmd_climate->parsed()) {
      const auto models = pl::cmd_train_climate(climate);
      std::cout << "trained " << models.forecasters.size() << " forecasters, offsets for " << models.offsets.size()
                << " regions\n";
    } else if (cmd_forecast->parsed()) {
      const auto summary = pl::cmd_forecast(forecast);
      print_warnings(summary.warnings);
      std::cout << "forecast rows: " << summary.rows.size() << '\n';
    } else if (cmd_project->parsed()) {
      const auto rows = pl::cmd_project(project);
      std::cout << "projections: " << rows.size() << '\n';
    } else if (cmd_report->parsed()) {
      if (!geometry.empty()) report.geometry = geometry;
      const auto summary = pl::cmd_report(report);
      if (!summary.unmatched_regions.empty()) {
        std::string list;
        for (const auto& r : summary.unmatched_regions) list += (list.empty() ? "" : ", ") + r;
        print_warnings({"regions missing from geometry document: " + list});
      }
      std::cout << "report regions: " << summary.changes.size() << '\n';
    } else if (cmd_run->parsed()) {
      const auto summary = pl::cmd_run(run);
      print_warnings(summary.forecast.warnings);
      std::cout << "train R=" << summary.abundance.train.r << "; projections " << summary.projections.size() << '\n';
    } else if (cmd_synth->parsed()) {
      synthetic::write_dataset(synth_dir, synth);
      std::cout << "wrote synthetic dataset to " << synth_dir << '\n';
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), static_cast<int>(e.exit_code()));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), static_cast<int>(ExitCode::kInternal));
  }
  return static_cast<int>(ExitCode::kSuccess);
}
