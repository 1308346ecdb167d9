#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streetscore/features.hpp"
#include "streetscore/geo.hpp"
#include "streetscore/model.hpp"
#include "streetscore/stats.hpp"

namespace streetscore::pipeline {

struct PipelineConfig {
  std::string streets_path;
  std::string photos_path;
  std::string venues_path;
  std::string out_dir = "out";
  double buffer_radius = geo::kDefaultBufferRadiusMeters;
  double night_confidence = 0.95;
  std::string keywords_path;  // empty: built-in walk list
  std::vector<double> stability_thresholds =
      stats::default_stability_thresholds();
  std::string reference_category = "travel";  // dropped from regressions
  bool strict = false;
  int threads = 1;
  uint64_t seed = 1;
};

struct LoadedInputs {
  std::vector<model::StreetSegment> segments;  // geometry projected
  std::vector<model::PhotoRecord> photos;
  std::vector<model::VenueRecord> venues;
  geo::GeoPoint origin;  // projection origin (street centroid)
  size_t photos_skipped = 0;
  size_t venues_skipped = 0;
};

// Parses and validates the inputs and projects street geometry about the
// dataset centroid. Photo/venue paths may be empty when a stage does not
// need them.
LoadedInputs load_inputs(const PipelineConfig& config, bool need_photos,
                         bool need_venues);

struct Assignments {
  // photo_segments[i]: indices of segments whose buffer contains photo i
  std::vector<std::vector<int32_t>> photo_segments;
  // venue_segment[j]: index of the segment closest to venue j (-1 if none)
  std::vector<int32_t> venue_segment;
};

Assignments compute_join(const LoadedInputs& inputs, double buffer_radius,
                         int threads = 1);

std::string photo_assignment_csv(const LoadedInputs& inputs,
                                 const Assignments& asg);
std::string venue_assignment_csv(const LoadedInputs& inputs,
                                 const Assignments& asg);

// Inverse of the *_assignment_csv emitters.
std::map<std::string, std::vector<std::string>> parse_photo_assignment_csv(
    const std::string& content);
std::map<std::string, std::string> parse_venue_assignment_csv(
    const std::string& content);

// One z-pair metric with its exclusions; `error` is set (and scores empty)
// when the metric is degenerate on this dataset.
struct MetricSet {
  std::map<std::string, double> scores;
  std::vector<std::string> excluded;
  features::ZMetricParams params;  // meaningful only when error is empty
  std::string error;
};

struct Metrics {
  MetricSet photo_at_night;
  MetricSet manhood;
  MetricSet zwalkability;
  std::map<std::string, double> mean_age;
  // Raw fraction pairs backing the tag metric (walk fraction, car fraction).
  features::FractionPairs tag_pairs;
};

Metrics compute_metrics(const std::vector<features::SegmentFeatures>& feats);

std::string metrics_csv(const std::vector<features::SegmentFeatures>& feats,
                        const Metrics& metrics);

struct CorrelationEntry {
  std::string name;
  std::optional<double> r;
  int64_t n = 0;
};

struct ReportBundle {
  std::vector<features::SegmentFeatures> features;
  Metrics metrics;
  std::vector<CorrelationEntry> correlations;
  std::map<std::string, stats::RegressionResult> regressions;  // by target
  std::map<std::string, stats::StabilityCurve> curves;         // by metric
  std::map<std::string, std::vector<stats::BinSummary>> bins;  // by metric
  nlohmann::ordered_json summary;
  std::vector<std::string> written_files;
};

// Full pipeline: ingest -> project -> join -> aggregate -> metrics ->
// correlations/regressions/curves/bins -> report files under out_dir.
// Identical inputs and config produce byte-identical outputs.
ReportBundle run_pipeline(const PipelineConfig& config);

// Regression of a target score on venue-category fractions (reference and
// empty categories dropped). Throws DegenerateDataError when the data
// cannot support the fit.
stats::RegressionResult regress_target(
    const std::vector<features::SegmentFeatures>& feats,
    const std::map<std::string, double>& target,
    const std::string& reference_category,
    std::vector<std::string>* dropped_empty = nullptr);

std::optional<double> safe_pearson(const std::vector<double>& x,
                                   const std::vector<double>& y);

// Scored-streets GeoJSON: per-segment scores, metrics, and a color ramp
// bucket, sorted by segment id.
std::string scored_streets_geojson(
    const std::vector<model::StreetSegment>& segments,
    const std::vector<features::SegmentFeatures>& feats,
    const Metrics& metrics);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace streetscore::pipeline
