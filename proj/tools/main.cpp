// bathy: refraction correction pipeline front-end.
//
//   bathy [--config FILE] [--seed N] [--out-dir DIR] [--verbose] [--set sec.key=val]...
//         simulate | pair | train | predict | evaluate | section | report [flags]
//
// Exit codes: 0 success, 2 configuration error, 3 input error, 4 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "bathy/error.hpp"
#include "config.hpp"
#include "pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfig = 2, kInput = 3, kNumerical = 4 };

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

// Sub-command flags are sugar for --set <key>=<value>; they win over the file.
void add_flags(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>& overrides,
               std::initializer_list<FlagSpec> specs) {
  for (const auto& s : specs) {
    const std::string key = s.key;
    cmd->add_option_function<std::string>(
        s.flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        s.help);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Refraction correction of through-water photogrammetric point clouds"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> overrides;
  app.add_option("--config", config_path, "key=value config file with [section] headers");
  add_flags(&app, overrides,
            {{"--seed", "global.seed", "64-bit random seed"},
             {"--out-dir", "global.out_dir", "output directory"}});
  app.add_flag_callback("--verbose", [&] { overrides.emplace_back("global.verbose", "true"); },
                        "log progress to stderr");
  app.add_option("--set", sets, "override any config key, e.g. --set svr.c=10");

  auto* simulate = app.add_subcommand("simulate", "generate true and apparent seabed clouds");
  add_flags(simulate, overrides,
            {{"--preset", "simulate.preset", "slope | flat | sinusoid | grid"},
             {"--points", "simulate.points", "number of seabed samples"},
             {"--refractive-index", "simulate.refractive_index", "water/air index"},
             {"--depth-start", "simulate.depth_start", "slope depth at min_x (m)"},
             {"--depth-end", "simulate.depth_end", "slope depth at max_x (m)"},
             {"--flat-depth", "simulate.flat_depth", "flat preset depth (m)"},
             {"--seabed-file", "simulate.seabed_file", "XYZ grid for preset=grid"},
             {"--cameras-file", "simulate.cameras_file", "XYZ camera positions"},
             {"--sigma-z", "simulate.sigma_z", "apparent depth noise (m)"},
             {"--outlier-rate", "simulate.outlier_rate", "share of invalid apparent depths"}});

  auto* pair = app.add_subcommand("pair", "build filtered (z0, z) samples from two clouds");
  add_flags(pair, overrides,
            {{"--image", "pair.image", "image-based (apparent) cloud"},
             {"--reference", "pair.reference", "reference cloud"},
             {"--max-radius", "pair.max_radius", "matching radius (m)"},
             {"--rule-a", "pair.rule_a", "shallower | literal"}});

  auto* train = app.add_subcommand("train", "fit the depth correction model");
  add_flags(train, overrides,
            {{"--samples", "train.samples", "sample CSV"},
             {"--fraction", "train.fraction", "training share in (0, 1]"},
             {"--baseline", "train.baseline", "also fit least squares (true/false)"},
             {"--depth-limit", "train.depth_limit", "only train on depths <= this (m)"},
             {"--merge", "train.merge_samples", "second sample CSV to merge in"},
             {"--merge-fraction", "train.merge_fraction", "share of the merged set to take"},
             {"--c", "svr.c", "slack weight"},
             {"--epsilon", "svr.epsilon", "tube half-width (m)"}});

  auto* pred = app.add_subcommand("predict", "apply a model to a cloud");
  add_flags(pred, overrides,
            {{"--model", "predict.model", "model file"},
             {"--input", "predict.input", "cloud to correct"},
             {"--output", "predict.output", "corrected cloud path"}});

  auto* evaluate = app.add_subcommand("evaluate", "M3C2 before/after comparison");
  add_flags(evaluate, overrides,
            {{"--model", "evaluate.model", "model file"},
             {"--image", "evaluate.image", "uncorrected cloud"},
             {"--reference", "evaluate.reference", "reference cloud"},
             {"--core", "evaluate.core", "core points (default: reference)"},
             {"--normal-mode", "m3c2.normal_mode", "vertical | estimated"},
             {"--train-label", "evaluate.train_label", "label for the report"},
             {"--test-label", "evaluate.test_label", "label for the report"}});

  auto* section = app.add_subcommand("section", "cross-sections through the clouds");
  std::vector<std::string> polylines;
  add_flags(section, overrides,
            {{"--reference", "section.reference", "reference cloud"},
             {"--image", "section.image", "uncorrected cloud"},
             {"--model", "section.model", "model file"},
             {"--half-width", "section.half_width", "corridor half-width (m)"},
             {"--step", "section.station_step", "station spacing (m)"}});
  section->add_option("--polyline", polylines, "vertices 'x1,y1;x2,y2;...' (repeatable)");

  auto* report = app.add_subcommand("report", "collect run statistics into a matrix");
  std::vector<std::string> runs;
  report->add_option("--run", runs, "run directory containing stats.json (repeatable)");
  add_flags(report, overrides, {{"--output", "report.output", "report CSV path"}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    bathy::cli::ConfigStore store;
    if (!config_path.empty()) store.load_file(config_path);
    for (const auto& s : sets) store.set_override(s);
    for (const auto& [k, v] : overrides) store.set(k, v);
    if (!polylines.empty()) {
      std::string joined;
      for (const auto& p : polylines) joined += (joined.empty() ? "" : "|") + p;
      store.set("section.polylines", joined);
    }
    if (!runs.empty()) {
      std::string joined;
      for (const auto& r : runs) joined += (joined.empty() ? "" : "|") + r;
      store.set("report.runs", joined);
    }
    const auto cfg = bathy::cli::build_config(store);

    bathy::cli::Outputs written;
    if (*simulate) written = bathy::cli::cmd_simulate(cfg);
    if (*pair) written = bathy::cli::cmd_pair(cfg);
    if (*train) written = bathy::cli::cmd_train(cfg);
    if (*pred) written = bathy::cli::cmd_predict(cfg);
    if (*evaluate) written = bathy::cli::cmd_evaluate(cfg);
    if (*section) written = bathy::cli::cmd_section(cfg);
    if (*report) written = bathy::cli::cmd_report(cfg);
    for (const auto& f : written) std::cout << f.string() << '\n';
    return kOk;
  } catch (const bathy::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const bathy::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const bathy::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}
