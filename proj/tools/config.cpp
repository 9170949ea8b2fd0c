#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "bathy/error.hpp"
#include "bathy/text_format.hpp"

namespace bathy::cli {

namespace {

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::filesystem::path path_or(const ConfigStore& s, const std::string& key,
                              const std::filesystem::path& fallback) {
  const auto v = s.get(key);
  return v && !v->empty() ? std::filesystem::path(*v) : fallback;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void ConfigStore::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  load_text(ss.str(), path.string());
}

void ConfigStore::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section = "global";
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#' || body.front() == ';') continue;
    const auto where = origin + ":" + std::to_string(line_no);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto value = body.substr(eq + 1);
    // A '#' preceded by whitespace starts a trailing comment.
    for (std::size_t i = 1; i < value.size(); ++i) {
      if (value[i] == '#' && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
        value = value.substr(0, i);
        break;
      }
    }
    set(section + "." + std::string(key), std::string(trim(value)));
  }
}

void ConfigStore::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' lacks '='");
  std::string key(trim(std::string_view(assignment).substr(0, eq)));
  if (key.find('.') == std::string::npos) key = "global." + key;
  set(key, std::string(trim(std::string_view(assignment).substr(eq + 1))));
}

void ConfigStore::set(const std::string& dotted_key, std::string value) {
  values_[dotted_key] = std::move(value);
}

std::optional<std::string> ConfigStore::get(const std::string& dotted_key) const {
  const auto it = values_.find(dotted_key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

bool ConfigStore::contains(const std::string& dotted_key) const {
  return values_.count(dotted_key) != 0;
}

std::string ConfigStore::string_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double ConfigStore::number_or(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const auto d = parse_double(*v);
  if (!d || !std::isfinite(*d)) throw ConfigError(key + ": '" + *v + "' is not a finite number");
  return *d;
}

long ConfigStore::integer_or(const std::string& key, long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const auto d = parse_double(*v);
  if (!d || *d != std::floor(*d) || std::abs(*d) > 9.0e15) {
    throw ConfigError(key + ": '" + *v + "' is not an integer");
  }
  return static_cast<long>(*d);
}

std::uint64_t ConfigStore::seed_or(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const auto s = std::stoull(*v, &used, 0);
    if (used != v->size() || v->front() == '-') throw std::invalid_argument("trailing");
    return s;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + *v + "' is not an unsigned 64-bit seed");
  }
}

bool ConfigStore::flag_or(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
  if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
  throw ConfigError(key + ": '" + *v + "' is not a boolean");
}

Polyline parse_polyline(const std::string& text) {
  Polyline poly;
  for (const auto& vertex : split_list(text, ';')) {
    const auto fields = split_fields(vertex);
    if (fields.size() != 2) throw ConfigError("polyline vertex '" + vertex + "' needs x,y");
    const auto x = parse_double(fields[0]);
    const auto y = parse_double(fields[1]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
      throw ConfigError("polyline vertex '" + vertex + "' is not numeric");
    }
    poly.emplace_back(*x, *y);
  }
  if (poly.size() < 2) throw ConfigError("polyline '" + text + "' needs at least 2 vertices");
  return poly;
}

PipelineConfig build_config(const ConfigStore& s) {
  PipelineConfig cfg;

  auto& g = cfg.global;
  g.seed = s.seed_or("global.seed", g.seed);
  g.out_dir = path_or(s, "global.out_dir", g.out_dir);
  g.verbose = s.flag_or("global.verbose", g.verbose);
  const auto& out = g.out_dir;

  auto& sim = cfg.simulate;
  sim.preset = s.string_or("simulate.preset", sim.preset);
  require(sim.preset == "slope" || sim.preset == "flat" || sim.preset == "sinusoid" ||
              sim.preset == "grid",
          "simulate.preset must be one of slope, flat, sinusoid, grid");
  sim.domain.min_x = s.number_or("simulate.min_x", sim.domain.min_x);
  sim.domain.min_y = s.number_or("simulate.min_y", sim.domain.min_y);
  sim.domain.max_x = s.number_or("simulate.max_x", sim.domain.max_x);
  sim.domain.max_y = s.number_or("simulate.max_y", sim.domain.max_y);
  require(sim.domain.max_x > sim.domain.min_x && sim.domain.max_y > sim.domain.min_y,
          "simulate domain must have positive extent");
  sim.depth_start = s.number_or("simulate.depth_start", sim.depth_start);
  sim.depth_end = s.number_or("simulate.depth_end", sim.depth_end);
  require(sim.depth_start > 0.0 && sim.depth_end > 0.0, "simulate depths must be positive");
  sim.flat_depth = s.number_or("simulate.flat_depth", sim.flat_depth);
  require(sim.flat_depth > 0.0, "simulate.flat_depth must be positive");
  sim.sin_mean = s.number_or("simulate.sin_mean", sim.sin_mean);
  sim.sin_amplitude = s.number_or("simulate.sin_amplitude", sim.sin_amplitude);
  sim.sin_wavelength = s.number_or("simulate.sin_wavelength", sim.sin_wavelength);
  require(sim.sin_mean > 0.0 && sim.sin_wavelength > 0.0,
          "simulate sinusoid needs positive mean depth and wavelength");
  sim.seabed_file = path_or(s, "simulate.seabed_file", {});
  require(sim.preset != "grid" || !sim.seabed_file.empty(),
          "simulate.preset=grid needs simulate.seabed_file");
  sim.camera_height = s.number_or("simulate.camera_height", sim.camera_height);
  sim.camera_spacing = s.number_or("simulate.camera_spacing", sim.camera_spacing);
  require(sim.camera_height > 0.0 && sim.camera_spacing > 0.0,
          "simulate camera height and spacing must be positive");
  sim.cameras_file = path_or(s, "simulate.cameras_file", {});
  sim.refractive_index = s.number_or("simulate.refractive_index", sim.refractive_index);
  require(sim.refractive_index >= 1.0, "simulate.refractive_index must be >= 1");
  sim.views = static_cast<int>(s.integer_or("simulate.views", sim.views));
  require(sim.views >= 2, "simulate.views must be at least 2");
  sim.points = s.integer_or("simulate.points", sim.points);
  require(sim.points >= 1, "simulate.points must be at least 1");
  sim.sigma_z = s.number_or("simulate.sigma_z", sim.sigma_z);
  require(sim.sigma_z >= 0.0, "simulate.sigma_z must be non-negative");
  sim.outlier_rate = s.number_or("simulate.outlier_rate", sim.outlier_rate);
  require(sim.outlier_rate >= 0.0 && sim.outlier_rate < 1.0,
          "simulate.outlier_rate must lie in [0, 1)");

  auto& pr = cfg.pair;
  pr.image = path_or(s, "pair.image", out / "apparent_cloud.xyz");
  pr.reference = path_or(s, "pair.reference", out / "true_cloud.xyz");
  pr.max_radius = s.number_or("pair.max_radius", pr.max_radius);
  require(pr.max_radius > 0.0, "pair.max_radius must be positive");
  const auto rule = s.string_or("pair.rule_a", "shallower");
  require(rule == "shallower" || rule == "literal", "pair.rule_a must be shallower or literal");
  pr.rules.rule_a =
      rule == "literal" ? RuleADirection::kLiteral : RuleADirection::kApparentMustBeShallower;

  auto& tr = cfg.train;
  tr.samples = path_or(s, "train.samples", out / "samples.csv");
  tr.fraction = s.number_or("train.fraction", tr.fraction);
  require(tr.fraction > 0.0 && tr.fraction <= 1.0, "train.fraction must lie in (0, 1]");
  tr.baseline = s.flag_or("train.baseline", tr.baseline);
  if (s.contains("train.depth_limit")) {
    tr.depth_limit = s.number_or("train.depth_limit", 0.0);
    require(*tr.depth_limit > 0.0, "train.depth_limit must be positive");
  }
  tr.merge_samples = path_or(s, "train.merge_samples", {});
  tr.merge_fraction = s.number_or("train.merge_fraction", tr.merge_fraction);
  require(tr.merge_fraction > 0.0 && tr.merge_fraction <= 1.0,
          "train.merge_fraction must lie in (0, 1]");
  tr.svr.c = s.number_or("svr.c", tr.svr.c);
  tr.svr.epsilon = s.number_or("svr.epsilon", tr.svr.epsilon);
  tr.svr.tol = s.number_or("svr.tol", tr.svr.tol);
  tr.svr.max_iter = s.integer_or("svr.max_iter", tr.svr.max_iter);
  tr.svr.standardize = s.flag_or("svr.standardize", tr.svr.standardize);
  tr.svr.validate();

  auto& pd = cfg.predict;
  pd.model = path_or(s, "predict.model", out / "model.txt");
  pd.input = path_or(s, "predict.input", out / "apparent_filtered.xyz");
  pd.output = path_or(s, "predict.output", out / "corrected.xyz");

  auto& ev = cfg.evaluate;
  ev.model = path_or(s, "evaluate.model", out / "model.txt");
  ev.image = path_or(s, "evaluate.image", out / "apparent_filtered.xyz");
  ev.reference = path_or(s, "evaluate.reference", out / "true_cloud.xyz");
  ev.core = path_or(s, "evaluate.core", {});
  const auto mode = s.string_or("m3c2.normal_mode", "vertical");
  require(mode == "vertical" || mode == "estimated",
          "m3c2.normal_mode must be vertical or estimated");
  ev.m3c2.normal_mode = mode == "estimated" ? NormalMode::kEstimated : NormalMode::kVertical;
  ev.m3c2.normal_scale = s.number_or("m3c2.normal_scale", ev.m3c2.normal_scale);
  ev.m3c2.projection_scale = s.number_or("m3c2.projection_scale", ev.m3c2.projection_scale);
  ev.m3c2.max_depth = s.number_or("m3c2.max_depth", ev.m3c2.max_depth);
  ev.m3c2.validate();
  ev.bin_width = s.number_or("m3c2.bin_width", ev.bin_width);
  require(ev.bin_width > 0.0, "m3c2.bin_width must be positive");
  ev.train_label = s.string_or("evaluate.train_label", ev.train_label);
  ev.test_label = s.string_or("evaluate.test_label", ev.test_label);

  auto& sc = cfg.section;
  sc.reference = path_or(s, "section.reference", out / "true_cloud.xyz");
  sc.image = path_or(s, "section.image", out / "apparent_filtered.xyz");
  sc.model = path_or(s, "section.model", out / "model.txt");
  sc.half_width = s.number_or("section.half_width", sc.half_width);
  require(sc.half_width > 0.0, "section.half_width must be positive");
  sc.station_step = s.number_or("section.station_step", sc.station_step);
  require(sc.station_step > 0.0, "section.station_step must be positive");
  if (const auto lines = s.get("section.polylines")) {
    for (const auto& text : split_list(*lines, '|')) sc.polylines.push_back(parse_polyline(text));
  } else {
    const double mid_y = 0.5 * (sim.domain.min_y + sim.domain.max_y);
    sc.polylines.push_back({{sim.domain.min_x, mid_y}, {sim.domain.max_x, mid_y}});
  }
  for (const auto& poly : sc.polylines) {
    double len = 0.0;
    for (std::size_t i = 1; i < poly.size(); ++i) {
      len += std::hypot(poly[i].first - poly[i - 1].first, poly[i].second - poly[i - 1].second);
    }
    require(len > 0.0, "section polyline has zero length");
  }

  auto& rp = cfg.report;
  if (const auto runs = s.get("report.runs")) {
    for (const auto& r : split_list(*runs, '|')) rp.runs.emplace_back(r);
  }
  rp.output = path_or(s, "report.output", out / "report.csv");
  return cfg;
}

}  // namespace bathy::cli
