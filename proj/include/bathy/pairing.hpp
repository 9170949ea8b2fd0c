#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bathy/pointcloud.hpp"

namespace bathy {

/// One planimetric location carrying both the apparent elevation from the
/// image-based cloud (z0) and the reference elevation (z).
struct DepthSample {
  double x = 0.0;
  double y = 0.0;
  double z0 = 0.0;
  double z = 0.0;

  friend bool operator==(const DepthSample&, const DepthSample&) = default;
};

/// Bookkeeping that travels with a sample set. The counts always satisfy
/// input == retained + removed_rule_a + removed_rule_b + removed_unmatched.
struct Provenance {
  std::size_t input = 0;
  std::size_t retained = 0;
  std::size_t removed_rule_a = 0;
  std::size_t removed_rule_b = 0;
  std::size_t removed_unmatched = 0;
  std::vector<std::string> sources;
  std::vector<std::string> steps;  // human-readable lineage, oldest first

  bool conserved() const noexcept {
    return input == retained + removed_rule_a + removed_rule_b + removed_unmatched;
  }
};

struct SampleSet {
  std::vector<DepthSample> samples;
  Provenance provenance;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

/// Resamples the image-based cloud onto the reference cloud: every reference
/// point takes z0 from its nearest image point within `max_radius`
/// (planimetric). Unmatched reference points are counted, not returned.
SampleSet reduce_to_reference(const PointCloud& image_cloud, const PointCloud& reference_cloud,
                              double max_radius = 1.0);

/// How the "apparent not shallower than reference" outlier rule is read.
enum class RuleADirection {
  kApparentMustBeShallower,  // drop z0 <= z (elevations negative underwater)
  kLiteral,                  // drop z0 >= z, the inequality taken verbatim
};

struct FilterRules {
  RuleADirection rule_a = RuleADirection::kApparentMustBeShallower;
};

/// Drops refraction-inconsistent samples. Rule A is checked first, so a
/// sample violating both rules is counted under rule A. With default rules
/// every survivor satisfies z < z0 < 0.
SampleSet filter_samples(const SampleSet& raw, const FilterRules& rules = {});

/// Seeded uniform split without replacement; |train| = round(fraction * n).
/// Both halves keep the input order.
std::pair<SampleSet, SampleSet> split_samples(const SampleSet& set, double fraction,
                                              std::uint64_t seed);

/// All of `a` followed by a seeded random round(fraction_b * |b|) subset of `b`.
SampleSet merge_sets(const SampleSet& a, const SampleSet& b, double fraction_b,
                     std::uint64_t seed);

/// Keeps samples whose reference depth |z| is at most `max_depth`.
SampleSet limit_depth(const SampleSet& set, double max_depth);

/// Pairs two index-aligned clouds (apparent, reference) point by point,
/// taking x, y from the reference.
SampleSet pair_aligned(const PointCloud& apparent, const PointCloud& reference);

/// (x, y, z0) and (x, y, z) views of a sample set.
PointCloud apparent_cloud(const SampleSet& set);
PointCloud reference_cloud(const SampleSet& set);

/// "x,y,z0,z" CSV plus `<path>.prov.json` sidecar.
void write_samples(const SampleSet& set, const std::filesystem::path& path);
SampleSet read_samples(const std::filesystem::path& path);

/// Uniformly chooses round(fraction * n) distinct indices in [0, n), sorted.
std::vector<std::size_t> choose_subset(std::size_t n, double fraction, std::uint64_t seed);

}  // namespace bathy
