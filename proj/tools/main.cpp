#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "odcmp/error.hpp"
#include "odcmp/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config;
  odcmp::ConfigOverrides overrides;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "pipeline config JSON")->required();
  auto& ov = args.overrides;
  cmd->add_option_function<uint64_t>(
      "--seed", [&ov](uint64_t v) { ov.seed = v; }, "override the config seed");
  cmd->add_option_function<int>(
      "--k", [&ov](int v) { ov.k = v; }, "fixed cluster count (skips the elbow)");
  cmd->add_option_function<std::string>(
      "--k-range",
      [&ov](const std::string& s) {
        auto dots = s.find("..");
        if (dots == std::string::npos) throw CLI::ValidationError("--k-range", "expected a..b");
        ov.k_range = {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
      },
      "elbow search range a..b");
  cmd->add_option_function<double>(
      "--epsilon", [&ov](double v) { ov.epsilon = v; }, "additive RF smoothing (0 = off)");
  cmd->add_flag_function(
      "--include-self", [&ov](int64_t) { ov.include_self = true; },
      "keep same-unit device stays (default)");
  cmd->add_flag_function(
      "--exclude-self", [&ov](int64_t) { ov.include_self = false; },
      "drop same-unit device stays");
  cmd->add_option_function<int>(
      "--workers", [&ov](int v) { ov.workers = v; }, "ingestion/clustering threads (0 = all)");
  cmd->add_option_function<std::string>(
      "--out", [&ov](const std::string& v) { ov.out = v; }, "output directory");
  cmd->add_option_function<std::string>(
      "--window", [&ov](const std::string& v) { ov.window = v; },
      "study window YYYY-MM-DD..YYYY-MM-DD");
  cmd->add_option_function<std::string>(
      "--panel-window", [&ov](const std::string& v) { ov.panel_window = v; },
      "device averaging window YYYY-MM..YYYY-MM");
}

odcmp::PipelineConfig load_with_overrides(const CommonArgs& args) {
  odcmp::PipelineConfig config = odcmp::load_pipeline_config(args.config);
  odcmp::apply_overrides(config, args.overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"odcmp: neighborhood-scale comparison of two OD mobility datasets"};
  app.require_subcommand(1);

  CommonArgs validate_args, ingest_args, cluster_args, compare_args, run_args;
  add_common_flags(app.add_subcommand("crosswalk-validate",
                                      "check crosswalk + features, write zone_features.csv"),
                   validate_args);
  add_common_flags(app.add_subcommand("ingest", "stream flow inputs into zone flow tables"),
                   ingest_args);
  add_common_flags(app.add_subcommand("cluster", "standardize, select k, run k-means"),
                   cluster_args);
  add_common_flags(app.add_subcommand("compare", "build OD/RF/RFR/LRFR outputs and report.json"),
                   compare_args);
  add_common_flags(app.add_subcommand("run", "all stages plus manifest.json"), run_args);

  std::string synth_config, synth_out;
  std::optional<uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic city with planted biases");
  synth->add_option("--config", synth_config, "synth spec JSON")->required();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option_function<uint64_t>(
      "--seed", [&synth_seed](uint64_t v) { synth_seed = v; }, "override the synth seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("crosswalk-validate")) {
      odcmp::run_validate(load_with_overrides(validate_args));
    } else if (app.got_subcommand("ingest")) {
      odcmp::run_ingest(load_with_overrides(ingest_args));
    } else if (app.got_subcommand("cluster")) {
      odcmp::run_cluster(load_with_overrides(cluster_args));
    } else if (app.got_subcommand("compare")) {
      odcmp::run_compare(load_with_overrides(compare_args));
    } else if (app.got_subcommand("run")) {
      odcmp::run_all(load_with_overrides(run_args));
    } else if (app.got_subcommand("synth")) {
      odcmp::run_synth(synth_config, synth_out, synth_seed);
    }
  } catch (const odcmp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return odcmp::kExitConfig;
  } catch (const odcmp::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return odcmp::kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return odcmp::kExitInternal;
  }
  return odcmp::kExitOk;
}
