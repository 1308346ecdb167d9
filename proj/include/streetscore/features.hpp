#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "streetscore/model.hpp"

namespace streetscore::features {

// Per-segment aggregates of the matched photos and venues.
struct SegmentFeatures {
  std::string segment_id;
  int64_t n_photos = 0;
  int64_t night_count = 0;
  int64_t notnight_count = 0;
  int64_t male_users = 0;    // distinct owners
  int64_t female_users = 0;  // distinct owners
  std::vector<int> ages;     // one per distinct owner with known age, sorted
  int64_t tag_total = 0;
  int64_t walk_tag_count = 0;
  int64_t car_tag_count = 0;
  std::array<int64_t, model::kVenueCategoryCount> venue_counts{};

  int64_t venue_total() const;
  bool operator==(const SegmentFeatures&) const = default;
};

// Normalized keyword sets for the tag metric. The default walk list is the
// conservative annotator-intersection vocabulary; the car list is just
// car/cars.
struct KeywordLists {
  std::unordered_set<std::string> walk;
  std::unordered_set<std::string> car;

  static KeywordLists defaults();
  // One keyword per line; '#' starts a comment. Entries are normalized.
  static KeywordLists walk_list_from_file(const std::string& path);
};

// Exact-match-after-normalization tag counting. A tag matches at most one
// list; walk keywords take precedence over car.
std::pair<int64_t, int64_t> match_tag_counts(
    const std::vector<std::string>& user_tags, const KeywordLists& lists);

struct AggregateOptions {
  double night_confidence = 0.95;
  KeywordLists keywords = KeywordLists::defaults();
  int threads = 1;
};

// Index-based core join: photo_segments[i] lists segment indices for
// photos[i]; venue_segment[j] is the segment index for venues[j] (-1 for
// unassigned). One SegmentFeatures per segment, zero-filled when nothing
// matched; order follows `segments`.
std::vector<SegmentFeatures> aggregate(
    const std::vector<model::StreetSegment>& segments,
    const std::vector<model::PhotoRecord>& photos,
    const std::vector<model::VenueRecord>& venues,
    const std::vector<std::vector<int32_t>>& photo_segments,
    const std::vector<int32_t>& venue_segment,
    const AggregateOptions& options = {});

// Id-keyed wrapper. Missing map entries mean "unassigned"; ids that do not
// exist in the inputs raise a referential-integrity ValidationError.
std::vector<SegmentFeatures> aggregate_by_id(
    const std::vector<model::StreetSegment>& segments,
    const std::vector<model::PhotoRecord>& photos,
    const std::vector<model::VenueRecord>& venues,
    const std::map<std::string, std::vector<std::string>>& photo_assignment,
    const std::map<std::string, std::string>& venue_assignment,
    const AggregateOptions& options = {});

enum class FractionKind { night, gender, tags };

std::string_view to_string(FractionKind kind);

struct FractionPair {
  std::string segment_id;
  double a = 0.0;
  double b = 0.0;
};

// Paired fractions per segment; segments with a zero denominator are
// excluded from the metric (listed in `excluded`), not dropped from the
// dataset.
struct FractionPairs {
  FractionKind kind = FractionKind::night;
  std::vector<FractionPair> included;
  std::vector<std::string> excluded;
};

FractionPairs fraction_pairs(const std::vector<SegmentFeatures>& features,
                             FractionKind kind);

struct MetricScore {
  std::string segment_id;
  double score = 0.0;
};

// Standardization parameters behind a z-pair metric, computed across the
// included segments (population std).
struct ZMetricParams {
  double mu_a = 0.0;
  double sigma_a = 0.0;
  double mu_b = 0.0;
  double sigma_b = 0.0;
};

// score_i = z(a_i) - z(b_i) with mean/population-std taken over the
// included segments. Degenerate (constant) fractions raise an error naming
// the offending side. The fitted parameters are reported through `params`
// when given.
std::vector<MetricScore> z_pair_metric(const FractionPairs& pairs,
                                       ZMetricParams* params = nullptr);

// Arithmetic mean of the ages list; segments without ages are omitted.
std::vector<std::pair<std::string, double>> mean_age(
    const std::vector<SegmentFeatures>& features);

// Venue-category fractions summing to 1 for segments with at least one
// venue; others are omitted.
std::vector<std::pair<std::string, std::array<double, model::kVenueCategoryCount>>>
category_fractions(const std::vector<SegmentFeatures>& features);

// CSV with one row per segment, sorted by segment id.
std::string features_to_csv(const std::vector<SegmentFeatures>& features);
std::vector<std::string> feature_csv_columns();

}  // namespace streetscore::features
