#include "pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bathy/error.hpp"
#include "bathy/evaluation.hpp"
#include "bathy/pairing.hpp"
#include "bathy/refraction_sim.hpp"
#include "bathy/svr.hpp"
#include "bathy/text_format.hpp"

namespace bathy::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void require_input(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!fs::is_regular_file(p)) {
    throw InputError(std::string(what) + " '" + p.string() + "' does not exist");
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError("cannot create output directory '" + dir.string() + "'");
  }
}

void log(const PipelineConfig& cfg, const std::string& msg) {
  if (cfg.global.verbose) std::cerr << "[bathy] " << msg << '\n';
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json stats_json(const ComparisonReport& r) {
  json j;
  const auto& s = *r.stats;
  j["valid_points"] = s.count;
  j["invalid_points"] = r.invalid_count;
  j["gaussian_mean"] = s.gaussian_mean;
  j["rmse"] = s.rmse;
  j["stddev"] = s.stddev;
  return j;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    const auto eq = body.find('=');
    if (body.empty() || body.front() == '#' || eq == std::string_view::npos) continue;
    kv[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
  }
  return kv;
}

std::optional<double> held_out_score(const SvrModel& model, const SampleSet& test) {
  if (test.size() < 2) return std::nullopt;
  std::vector<double> truth;
  std::vector<double> pred;
  truth.reserve(test.size());
  pred.reserve(test.size());
  for (const auto& s : test.samples) {
    truth.push_back(s.z);
    pred.push_back(predict(model, s.z0));
  }
  try {
    return fitting_score(truth, pred);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

std::string score_text(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("n/a");
}

}  // namespace

SimScene make_scene(const SimulateConfig& sim) {
  SimScene scene;
  scene.refractive_index = sim.refractive_index;
  scene.views = sim.views;
  scene.domain = sim.domain;
  if (sim.preset == "slope") {
    scene.seabed = slope_seabed(scene.domain, sim.depth_start, sim.depth_end);
  } else if (sim.preset == "flat") {
    scene.seabed = flat_seabed(sim.flat_depth);
  } else if (sim.preset == "sinusoid") {
    scene.seabed = sinusoid_seabed(sim.sin_mean, sim.sin_amplitude, sim.sin_wavelength);
  } else {
    require_input(sim.seabed_file, "seabed grid");
    auto grid = read_cloud(sim.seabed_file);
    SeabedDomain d{grid[0].x, grid[0].y, grid[0].x, grid[0].y};
    for (const auto& p : grid.points) {
      d.min_x = std::min(d.min_x, p.x);
      d.min_y = std::min(d.min_y, p.y);
      d.max_x = std::max(d.max_x, p.x);
      d.max_y = std::max(d.max_y, p.y);
    }
    scene.domain = d;
    scene.seabed = grid_seabed(std::move(grid));
  }
  if (!sim.cameras_file.empty()) {
    require_input(sim.cameras_file, "camera list");
    scene.cameras = read_cloud(sim.cameras_file).points;
  } else {
    scene.cameras = camera_grid(scene.domain, sim.camera_height, sim.camera_spacing);
  }
  scene.validate();
  return scene;
}

Outputs cmd_simulate(const PipelineConfig& cfg) {
  const auto& sim = cfg.simulate;
  const auto scene = make_scene(sim);
  ensure_dir(cfg.global.out_dir);
  log(cfg, "simulating " + std::to_string(sim.points) + " points over " +
               std::to_string(scene.cameras.size()) + " cameras");

  auto result = simulate_scene(scene, static_cast<std::size_t>(sim.points), cfg.global.seed);
  result = add_noise(result, sim.sigma_z, sim.outlier_rate, cfg.global.seed);

  std::size_t degenerate = 0;
  double max_incidence = 0.0;
  for (const auto& r : result.rays) {
    degenerate += r.degenerate ? 1 : 0;
    max_incidence = std::max(max_incidence, r.mean_incidence_air);
  }

  const auto& out = cfg.global.out_dir;
  Outputs files{out / "true_cloud.xyz", out / "apparent_cloud.xyz", out / "simulate.prov.json"};
  write_cloud(result.true_cloud, files[0]);
  write_cloud(result.apparent_cloud, files[1]);

  json prov;
  prov["seed"] = cfg.global.seed;
  prov["preset"] = sim.preset;
  prov["points"] = sim.points;
  prov["refractive_index"] = sim.refractive_index;
  prov["views"] = sim.views;
  prov["cameras"] = scene.cameras.size();
  prov["domain"] = {scene.domain.min_x, scene.domain.min_y, scene.domain.max_x,
                    scene.domain.max_y};
  prov["sigma_z"] = sim.sigma_z;
  prov["outlier_rate"] = sim.outlier_rate;
  prov["degenerate_points"] = degenerate;
  prov["max_mean_incidence_deg"] = max_incidence * 180.0 / 3.14159265358979323846;
  write_json(prov, files[2]);
  return files;
}

Outputs cmd_pair(const PipelineConfig& cfg) {
  const auto& pc = cfg.pair;
  require_input(pc.image, "image-based cloud");
  require_input(pc.reference, "reference cloud");
  ensure_dir(cfg.global.out_dir);
  auto image = read_cloud(pc.image);
  auto reference = read_cloud(pc.reference);
  const auto raw = reduce_to_reference(image, reference, pc.max_radius);
  const auto kept = filter_samples(raw, pc.rules);
  const auto& p = kept.provenance;
  log(cfg, "pairs: input=" + std::to_string(p.input) + " retained=" + std::to_string(p.retained) +
               " rule_a=" + std::to_string(p.removed_rule_a) +
               " rule_b=" + std::to_string(p.removed_rule_b) +
               " unmatched=" + std::to_string(p.removed_unmatched));
  if (kept.empty()) std::cerr << "warning: no samples survived filtering\n";

  const auto& out = cfg.global.out_dir;
  Outputs files{out / "samples.csv", out / "samples.csv.prov.json",
                out / "apparent_filtered.xyz", out / "reference_filtered.xyz"};
  write_samples(kept, files[0]);
  write_cloud(apparent_cloud(kept), files[2]);
  write_cloud(reference_cloud(kept), files[3]);
  return files;
}

Outputs cmd_train(const PipelineConfig& cfg) {
  const auto& tc = cfg.train;
  require_input(tc.samples, "sample file");
  if (!tc.merge_samples.empty()) require_input(tc.merge_samples, "merge sample file");
  ensure_dir(cfg.global.out_dir);

  auto samples = read_samples(tc.samples);
  if (!tc.merge_samples.empty()) {
    samples = merge_sets(samples, read_samples(tc.merge_samples), tc.merge_fraction,
                         mix_seed(cfg.global.seed, 1));
  }
  if (tc.depth_limit) samples = limit_depth(samples, *tc.depth_limit);
  auto [train, test] = split_samples(samples, tc.fraction, cfg.global.seed);
  log(cfg, "training on " + std::to_string(train.size()) + " samples, holding out " +
               std::to_string(test.size()));

  const auto svr = fit_svr(train, tc.svr);
  for (const auto& w : svr.summary.warnings) std::cerr << "warning: " << w << '\n';

  const auto& out = cfg.global.out_dir;
  Outputs files{out / "model.txt"};
  save_model(svr, files.back());

  std::ostringstream rep;
  rep << "n_total=" << samples.size() << '\n'
      << "n_train=" << train.size() << '\n'
      << "n_test=" << test.size() << '\n'
      << "fraction=" << format_double(tc.fraction) << '\n'
      << "seed=" << cfg.global.seed << '\n'
      << "svr_w=" << format_double(svr.w) << '\n'
      << "svr_b=" << format_double(svr.b) << '\n'
      << "svr_objective=" << format_double(svr.summary.objective) << '\n'
      << "svr_iterations=" << svr.summary.iterations << '\n'
      << "svr_converged=" << (svr.summary.converged ? 1 : 0) << '\n'
      << "svr_r2_test=" << score_text(held_out_score(svr, test)) << '\n';
  if (tc.baseline) {
    const auto lsq = fit_least_squares(train);
    files.push_back(out / "model_lsq.txt");
    save_model(lsq, files.back());
    rep << "lsq_w=" << format_double(lsq.w) << '\n'
        << "lsq_b=" << format_double(lsq.b) << '\n'
        << "lsq_r2_test=" << score_text(held_out_score(lsq, test)) << '\n';
  }
  files.push_back(out / "training_report.txt");
  std::ofstream f(files.back(), std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write '" + files.back().string() + "'");
  f << rep.str();
  return files;
}

Outputs cmd_predict(const PipelineConfig& cfg) {
  const auto& pc = cfg.predict;
  require_input(pc.model, "model");
  require_input(pc.input, "input cloud");
  const auto model = load_model(pc.model);
  const auto corrected = correct_cloud(model, read_cloud(pc.input));
  if (pc.output.has_parent_path()) ensure_dir(pc.output.parent_path());
  write_cloud(corrected, pc.output);
  return {pc.output};
}

Outputs cmd_evaluate(const PipelineConfig& cfg) {
  const auto& ec = cfg.evaluate;
  require_input(ec.model, "model");
  require_input(ec.image, "image-based cloud");
  require_input(ec.reference, "reference cloud");
  if (!ec.core.empty()) require_input(ec.core, "core point cloud");
  ensure_dir(cfg.global.out_dir);

  const auto model = load_model(ec.model);
  const auto image = read_cloud(ec.image);
  const auto reference = read_cloud(ec.reference);
  const auto core = ec.core.empty() ? reference : read_cloud(ec.core);
  const auto corrected = correct_cloud(model, image);

  const auto before = m3c2_distance(reference, image, ec.m3c2, core, ec.bin_width);
  const auto after = m3c2_distance(reference, corrected, ec.m3c2, core, ec.bin_width);
  if (!before.stats || !after.stats) {
    throw NumericalError("no core point has both clouds inside its projection cylinder");
  }
  log(cfg, "mean distance before=" + format_double(before.stats->gaussian_mean) +
               " after=" + format_double(after.stats->gaussian_mean));

  const auto& out = cfg.global.out_dir;
  Outputs files{out / "corrected.xyz",  out / "m3c2_before.csv",       out / "m3c2_after.csv",
                out / "stats.json",     out / "histogram_before.csv", out / "histogram.csv"};
  write_cloud(corrected, files[0]);
  write_distances_csv(before, files[1]);
  write_distances_csv(after, files[2]);

  json j;
  j["train_set"] = ec.train_label;
  j["test_set"] = ec.test_label;
  j["model"] = {{"w", model.w}, {"b", model.b}};
  j["m3c2"] = {{"normal_mode", ec.m3c2.normal_mode == NormalMode::kVertical ? "vertical"
                                                                              : "estimated"},
               {"normal_scale", ec.m3c2.normal_scale},
               {"projection_scale", ec.m3c2.projection_scale},
               {"max_depth", ec.m3c2.max_depth}};
  j["before"] = stats_json(before);
  j["after"] = stats_json(after);
  const auto report_path = ec.model.parent_path() / "training_report.txt";
  if (fs::is_regular_file(report_path)) {
    const auto kv = read_key_values(report_path);
    if (auto it = kv.find("svr_r2_test"); it != kv.end()) j["svr_r2_test"] = it->second;
  }
  write_json(j, files[3]);
  write_histogram_csv(*before.stats, files[4]);
  write_histogram_csv(*after.stats, files[5]);
  return files;
}

Outputs cmd_section(const PipelineConfig& cfg) {
  const auto& sc = cfg.section;
  require_input(sc.reference, "reference cloud");
  require_input(sc.image, "image-based cloud");
  require_input(sc.model, "model");
  ensure_dir(cfg.global.out_dir);

  const auto model = load_model(sc.model);
  std::vector<PointCloud> clouds(3);
  clouds[0] = read_cloud(sc.reference);
  clouds[1] = read_cloud(sc.image);
  clouds[2] = correct_cloud(model, clouds[1]);
  clouds[0].label = "reference";
  clouds[1].label = "uncorrected";
  clouds[2].label = "corrected";

  Outputs files;
  for (std::size_t k = 0; k < sc.polylines.size(); ++k) {
    const auto prof = extract_section(clouds, sc.polylines[k], sc.half_width, sc.station_step);
    files.push_back(cfg.global.out_dir / ("section_" + std::to_string(k + 1) + ".csv"));
    write_section_csv(prof, files.back());
  }
  return files;
}

Outputs cmd_report(const PipelineConfig& cfg) {
  auto runs = cfg.report.runs;
  if (runs.empty()) {
    const auto& root = cfg.global.out_dir;
    if (fs::is_regular_file(root / "stats.json")) runs.push_back(root);
    if (fs::is_directory(root)) {
      std::vector<fs::path> subdirs;
      for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && fs::is_regular_file(e.path() / "stats.json")) {
          subdirs.push_back(e.path());
        }
      }
      std::sort(subdirs.begin(), subdirs.end());
      runs.insert(runs.end(), subdirs.begin(), subdirs.end());
    }
  }
  if (runs.empty()) throw InputError("report found no run directories containing stats.json");

  struct Row {
    std::string train, test;
    json stats;
  };
  std::vector<Row> rows;
  for (const auto& run : runs) {
    const auto path = run / "stats.json";
    require_input(path, "run statistics");
    std::ifstream in(path);
    json j;
    try {
      j = json::parse(in);
      rows.push_back({j.at("train_set").get<std::string>(), j.at("test_set").get<std::string>(), j});
    } catch (const json::exception& e) {
      throw InputError("malformed '" + path.string() + "': " + e.what());
    }
  }

  if (cfg.report.output.has_parent_path()) ensure_dir(cfg.report.output.parent_path());
  Outputs files{cfg.report.output};
  {
    std::ofstream out(files[0], std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + files[0].string() + "'");
    out << "train_set,test_set,before_mean,before_rmse,before_stddev,after_mean,after_rmse,"
           "after_stddev,valid_points,svr_r2_test\n";
    for (const auto& r : rows) {
      const auto& b = r.stats.at("before");
      const auto& a = r.stats.at("after");
      out << r.train << ',' << r.test << ',' << format_double(b.at("gaussian_mean").get<double>())
          << ',' << format_double(b.at("rmse").get<double>()) << ','
          << format_double(b.at("stddev").get<double>()) << ','
          << format_double(a.at("gaussian_mean").get<double>()) << ','
          << format_double(a.at("rmse").get<double>()) << ','
          << format_double(a.at("stddev").get<double>()) << ','
          << a.at("valid_points").get<std::size_t>() << ','
          << r.stats.value("svr_r2_test", std::string("n/a")) << '\n';
    }
  }

  // Train-set x test-set grid of corrected mean distances.
  std::vector<std::string> trains;
  std::vector<std::string> tests;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& r : rows) {
    if (std::find(trains.begin(), trains.end(), r.train) == trains.end()) trains.push_back(r.train);
    if (std::find(tests.begin(), tests.end(), r.test) == tests.end()) tests.push_back(r.test);
    cell[{r.train, r.test}] = r.stats.at("after").at("gaussian_mean").get<double>();
  }
  files.push_back(files[0].parent_path() / (files[0].stem().string() + "_matrix.csv"));
  std::ofstream m(files.back(), std::ios::binary | std::ios::trunc);
  if (!m) throw InputError("cannot write '" + files.back().string() + "'");
  m << "train_set";
  for (const auto& t : tests) m << ',' << t;
  m << '\n';
  for (const auto& tr : trains) {
    m << tr;
    for (const auto& te : tests) {
      const auto it = cell.find({tr, te});
      m << ',' << (it == cell.end() ? std::string() : format_double(it->second));
    }
    m << '\n';
  }
  return files;
}

}  // namespace bathy::cli
