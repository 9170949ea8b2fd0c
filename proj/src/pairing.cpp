#include "bathy/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bathy/error.hpp"
#include "bathy/text_format.hpp"

namespace bathy {

namespace {

// Provenance for a set selected out of `parent`: the removal counters restart
// because selection is not an outlier decision; lineage is carried over.
Provenance selected_from(const Provenance& parent, std::size_t n, std::string step) {
  Provenance p;
  p.input = n;
  p.retained = n;
  p.sources = parent.sources;
  p.steps = parent.steps;
  p.steps.push_back(std::move(step));
  return p;
}

std::string describe_counts(const Provenance& p) {
  std::ostringstream os;
  os << "input=" << p.input << " retained=" << p.retained << " rule_a=" << p.removed_rule_a
     << " rule_b=" << p.removed_rule_b << " unmatched=" << p.removed_unmatched;
  return os.str();
}

void check_fraction(double fraction, const char* what) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in (0, 1], got " + format_double(fraction));
  }
}

}  // namespace

SampleSet reduce_to_reference(const PointCloud& image_cloud, const PointCloud& reference_cloud,
                              double max_radius) {
  if (image_cloud.empty()) throw InputError("image-based cloud is empty");
  if (reference_cloud.empty()) throw InputError("reference cloud is empty");
  if (!(max_radius > 0.0)) throw ConfigError("max_radius must be positive");

  const SpatialIndex index(image_cloud);
  SampleSet out;
  out.samples.reserve(reference_cloud.size());
  for (const auto& ref : reference_cloud.points) {
    const auto hit = index.nearest(ref.x, ref.y, max_radius);
    if (!hit) {
      ++out.provenance.removed_unmatched;
      continue;
    }
    out.samples.push_back({ref.x, ref.y, image_cloud[*hit].z, ref.z});
  }
  auto& prov = out.provenance;
  prov.input = reference_cloud.size();
  prov.retained = out.samples.size();
  prov.sources = {image_cloud.label, reference_cloud.label};
  prov.steps.push_back("reduce_to_reference max_radius=" + format_double(max_radius));
  return out;
}

SampleSet filter_samples(const SampleSet& raw, const FilterRules& rules) {
  SampleSet out;
  out.provenance = raw.provenance;
  auto& prov = out.provenance;
  // Counts already attributed to earlier removals stay; only `retained` is
  // redistributed.
  prov.retained = 0;
  for (const auto& s : raw.samples) {
    const bool violates_a = rules.rule_a == RuleADirection::kApparentMustBeShallower
                                ? s.z0 <= s.z
                                : s.z0 >= s.z;
    if (violates_a) {
      ++prov.removed_rule_a;
    } else if (s.z0 >= 0.0) {
      ++prov.removed_rule_b;
    } else {
      out.samples.push_back(s);
    }
  }
  prov.retained = out.samples.size();
  prov.steps.push_back(std::string("filter_samples rule_a=") +
                       (rules.rule_a == RuleADirection::kLiteral ? "literal" : "shallower") +
                       (out.samples.empty() ? " EMPTY" : ""));
  return out;
}

std::vector<std::size_t> choose_subset(std::size_t n, double fraction, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < std::min(k, n); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  perm.resize(std::min(k, n));
  std::sort(perm.begin(), perm.end());
  return perm;
}

std::pair<SampleSet, SampleSet> split_samples(const SampleSet& set, double fraction,
                                              std::uint64_t seed) {
  check_fraction(fraction, "split fraction");
  if (set.empty()) throw InputError("cannot split an empty sample set");
  const auto chosen = choose_subset(set.size(), fraction, seed);

  SampleSet train;
  SampleSet test;
  train.samples.reserve(chosen.size());
  test.samples.reserve(set.size() - chosen.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (next < chosen.size() && chosen[next] == i) {
      train.samples.push_back(set.samples[i]);
      ++next;
    } else {
      test.samples.push_back(set.samples[i]);
    }
  }
  const std::string tag = "split fraction=" + format_double(fraction) +
                          " seed=" + std::to_string(seed) + " parent{" +
                          describe_counts(set.provenance) + "}";
  train.provenance = selected_from(set.provenance, train.size(), tag + " part=train");
  test.provenance = selected_from(set.provenance, test.size(), tag + " part=test");
  return {std::move(train), std::move(test)};
}

SampleSet merge_sets(const SampleSet& a, const SampleSet& b, double fraction_b,
                     std::uint64_t seed) {
  if (a.empty()) throw InputError("merge requires a non-empty primary set");
  check_fraction(fraction_b, "merge fraction");
  const auto chosen = b.empty() ? std::vector<std::size_t>{}
                                : choose_subset(b.size(), fraction_b, seed);
  SampleSet out;
  out.samples = a.samples;
  out.samples.reserve(a.size() + chosen.size());
  for (auto i : chosen) out.samples.push_back(b.samples[i]);

  out.provenance.input = out.samples.size();
  out.provenance.retained = out.samples.size();
  out.provenance.sources = a.provenance.sources;
  out.provenance.sources.insert(out.provenance.sources.end(), b.provenance.sources.begin(),
                                b.provenance.sources.end());
  out.provenance.steps = a.provenance.steps;
  out.provenance.steps.push_back("merge a{" + describe_counts(a.provenance) + "} b{" +
                                 describe_counts(b.provenance) + "} fraction_b=" +
                                 format_double(fraction_b) + " seed=" + std::to_string(seed) +
                                 " taken_from_b=" + std::to_string(chosen.size()));
  return out;
}

SampleSet limit_depth(const SampleSet& set, double max_depth) {
  if (!(max_depth > 0.0)) throw ConfigError("depth limit must be positive");
  SampleSet out;
  for (const auto& s : set.samples) {
    if (-s.z <= max_depth) out.samples.push_back(s);
  }
  out.provenance = selected_from(set.provenance, out.size(),
                                 "limit_depth max_depth=" + format_double(max_depth));
  return out;
}

SampleSet pair_aligned(const PointCloud& apparent, const PointCloud& reference) {
  if (apparent.size() != reference.size()) {
    throw InputError("aligned pairing needs clouds of equal length");
  }
  SampleSet out;
  out.samples.reserve(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    out.samples.push_back({reference[i].x, reference[i].y, apparent[i].z, reference[i].z});
  }
  out.provenance.input = out.provenance.retained = out.size();
  out.provenance.sources = {apparent.label, reference.label};
  out.provenance.steps.push_back("pair_aligned");
  return out;
}

PointCloud apparent_cloud(const SampleSet& set) {
  PointCloud c;
  c.label = "apparent";
  c.points.reserve(set.size());
  for (const auto& s : set.samples) c.points.push_back({s.x, s.y, s.z0});
  return c;
}

PointCloud reference_cloud(const SampleSet& set) {
  PointCloud c;
  c.label = "reference";
  c.points.reserve(set.size());
  for (const auto& s : set.samples) c.points.push_back({s.x, s.y, s.z});
  return c;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".prov.json");
}

}  // namespace

void write_samples(const SampleSet& set, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write samples '" + path.string() + "'");
    out << "x,y,z0,z\n";
    for (const auto& s : set.samples) {
      out << format_double(s.x) << ',' << format_double(s.y) << ',' << format_double(s.z0) << ','
          << format_double(s.z) << '\n';
    }
    if (!out) throw InputError("write failure on '" + path.string() + "'");
  }
  const auto& p = set.provenance;
  nlohmann::ordered_json j;
  j["input"] = p.input;
  j["retained"] = p.retained;
  j["removed_rule_a"] = p.removed_rule_a;
  j["removed_rule_b"] = p.removed_rule_b;
  j["removed_unmatched"] = p.removed_unmatched;
  j["sources"] = p.sources;
  j["steps"] = p.steps;
  std::ofstream side(sidecar_path(path), std::ios::binary | std::ios::trunc);
  if (!side) throw InputError("cannot write provenance for '" + path.string() + "'");
  side << j.dump(2) << '\n';
}

SampleSet read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open samples '" + path.string() + "'");
  SampleSet set;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (body == "x,y,z0,z") continue;
    }
    const auto fields = split_fields(body);
    double v[4];
    if (fields.size() != 4) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    for (int k = 0; k < 4; ++k) {
      const auto d = parse_double(fields[k]);
      if (!d || !std::isfinite(*d)) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" +
                         std::string(fields[k]) + "'");
      }
      v[k] = *d;
    }
    set.samples.push_back({v[0], v[1], v[2], v[3]});
  }

  auto& p = set.provenance;
  p.input = p.retained = set.size();
  std::ifstream side(sidecar_path(path));
  if (side) {
    try {
      const auto j = nlohmann::json::parse(side);
      p.sources = j.value("sources", std::vector<std::string>{});
      p.steps = j.value("steps", std::vector<std::string>{});
      p.removed_rule_a = j.value("removed_rule_a", std::size_t{0});
      p.removed_rule_b = j.value("removed_rule_b", std::size_t{0});
      p.removed_unmatched = j.value("removed_unmatched", std::size_t{0});
      p.input = j.value("input", set.size());
      if (j.value("retained", set.size()) != set.size() || !p.conserved()) {
        throw InputError("provenance counts do not match '" + path.string() + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed provenance sidecar for '" + path.string() + "': " + e.what());
    }
  }
  return set;
}

}  // namespace bathy
