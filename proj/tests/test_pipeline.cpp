#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "streetscore/errors.hpp"
#include "streetscore/features.hpp"
#include "streetscore/pipeline.hpp"
#include "streetscore/synth.hpp"

using namespace streetscore;
namespace fs = std::filesystem;

namespace {

// One shared small fixture on disk for the pipeline tests.
struct Fixture {
  fs::path dir;
  pipeline::PipelineConfig config;

  Fixture() {
    dir = fs::temp_directory_path() / "streetscore_test_fixture";
    fs::remove_all(dir);
    synth::SynthSpec spec;
    spec.n_segments = 80;
    spec.photos_median = 25;
    spec.seed = 1234;
    synth::synth_city(spec, dir.string());
    config.streets_path = (dir / "streets.geojson").string();
    config.photos_path = (dir / "photos.jsonl").string();
    config.venues_path = (dir / "venues.jsonl").string();
    config.out_dir = (dir / "out").string();
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

std::string slurp(const fs::path& p) {
  return pipeline::read_text_file(p.string());
}

}  // namespace

TEST_CASE("load_inputs projects streets about the dataset centroid") {
  const auto inputs = pipeline::load_inputs(fixture().config, true, true);
  CHECK(inputs.segments.size() == 80);
  CHECK(!inputs.photos.empty());
  CHECK(!inputs.venues.empty());
  CHECK(inputs.photos_skipped == 0);
  for (const auto& s : inputs.segments) {
    REQUIRE(s.geometry.has_value());
  }
  // Centroid origin: planar coordinates are centered around zero.
  double cx = 0;
  size_t count = 0;
  for (const auto& s : inputs.segments) {
    for (const auto& v : s.geometry->vertices()) {
      cx += v.x;
      ++count;
    }
  }
  CHECK(std::abs(cx / static_cast<double>(count)) < 1.0);
}

TEST_CASE("load_inputs errors") {
  pipeline::PipelineConfig config;
  CHECK_THROWS_AS(pipeline::load_inputs(config, false, false),
                  ValidationError);
  config.streets_path = "/nonexistent/streets.geojson";
  CHECK_THROWS_AS(pipeline::load_inputs(config, false, false), IoError);

  const fs::path empty = fs::temp_directory_path() / "empty_streets.geojson";
  pipeline::write_text_file(empty.string(),
                            R"({"type":"FeatureCollection","features":[]})");
  config.streets_path = empty.string();
  CHECK_THROWS_WITH_AS(pipeline::load_inputs(config, false, false),
                       doctest::Contains("no segments"), ValidationError);
}

TEST_CASE("run_pipeline emits the full report bundle") {
  auto config = fixture().config;
  config.out_dir = (fixture().dir / "bundle").string();
  const auto bundle = pipeline::run_pipeline(config);

  CHECK(bundle.features.size() == 80);
  CHECK(bundle.metrics.photo_at_night.error.empty());
  CHECK(bundle.correlations.size() == 7);
  for (const auto& c : bundle.correlations) {
    REQUIRE(c.r.has_value());
    CHECK(*c.r >= -1.0);
    CHECK(*c.r <= 1.0);
  }
  CHECK(bundle.regressions.count("safety") == 1);
  CHECK(bundle.regressions.count("walkability") == 1);
  CHECK(bundle.regressions.at("safety").n > 9);
  CHECK(bundle.curves.size() == 4);
  CHECK(bundle.bins.count("photo_at_night") == 1);
  CHECK(bundle.bins.at("photo_at_night").size() == 3);
  CHECK(bundle.bins.at("manhood").size() == 4);

  for (const char* name :
       {"photo_assignment.csv", "venue_assignment.csv", "features.csv",
        "metrics.csv", "regressions.json", "stability_photo_at_night.csv",
        "stability_manhood.csv", "stability_mean_age.csv",
        "stability_zwalkability.csv", "bins_photo_at_night.csv",
        "bins_manhood.csv", "scored_streets.geojson", "summary.json"}) {
    CHECK(fs::exists(fs::path(config.out_dir) / name));
  }

  const auto summary = nlohmann::json::parse(
      slurp(fs::path(config.out_dir) / "summary.json"));
  CHECK(summary.at("inputs").at("n_segments") == 80);
  CHECK(summary.at("metrics").at("photo_at_night").at("n_scored") > 0);
}

TEST_CASE("run_pipeline output is byte-identical across runs") {
  auto config = fixture().config;
  config.out_dir = (fixture().dir / "det1").string();
  pipeline::run_pipeline(config);
  auto config2 = fixture().config;
  config2.out_dir = (fixture().dir / "det2").string();
  pipeline::run_pipeline(config2);

  size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(config.out_dir)) {
    const auto other = fs::path(config2.out_dir) / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 13);
}

TEST_CASE("join then features equals the fused pipeline") {
  const auto inputs = pipeline::load_inputs(fixture().config, true, true);
  const auto asg = pipeline::compute_join(inputs, 22.5, 1);

  // Fused path.
  const auto fused =
      features::aggregate(inputs.segments, inputs.photos, inputs.venues,
                          asg.photo_segments, asg.venue_segment);

  // Staged path: serialize the assignments, parse them back, aggregate by id.
  const auto photo_map = pipeline::parse_photo_assignment_csv(
      pipeline::photo_assignment_csv(inputs, asg));
  const auto venue_map = pipeline::parse_venue_assignment_csv(
      pipeline::venue_assignment_csv(inputs, asg));
  const auto staged = features::aggregate_by_id(
      inputs.segments, inputs.photos, inputs.venues, photo_map, venue_map);

  CHECK(features::features_to_csv(fused) == features::features_to_csv(staged));
  REQUIRE(fused.size() == staged.size());
  for (size_t i = 0; i < fused.size(); ++i) {
    CHECK(fused[i] == staged[i]);
  }
}

TEST_CASE("metrics CSV lists every segment with blanks for exclusions") {
  const auto inputs = pipeline::load_inputs(fixture().config, true, true);
  const auto asg = pipeline::compute_join(inputs, 22.5, 1);
  const auto feats =
      features::aggregate(inputs.segments, inputs.photos, inputs.venues,
                          asg.photo_segments, asg.venue_segment);
  const auto metrics = pipeline::compute_metrics(feats);
  const std::string csv = pipeline::metrics_csv(feats, metrics);
  // Header plus one row per segment.
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(feats.size()) + 1);
  CHECK(csv.rfind("segment_id,photo_at_night,manhood,zwalkability,mean_age",
                  0) == 0);
}

TEST_CASE("regress_target drops the reference category") {
  const auto inputs = pipeline::load_inputs(fixture().config, true, true);
  const auto asg = pipeline::compute_join(inputs, 22.5, 1);
  const auto feats =
      features::aggregate(inputs.segments, inputs.photos, inputs.venues,
                          asg.photo_segments, asg.venue_segment);
  std::map<std::string, double> safety;
  for (const auto& s : inputs.segments) {
    if (s.safety) safety[s.id] = *s.safety;
  }
  const auto result = pipeline::regress_target(feats, safety, "travel");
  for (const auto& c : result.coefficients) {
    CHECK(c.name != "travel");
    CHECK(stats::significance_code(c.p_value) == c.code);
  }
  CHECK(result.adjusted_r2 <= result.r2);
  CHECK_THROWS_AS(pipeline::regress_target(feats, safety, "nonsense"),
                  ValidationError);
}

TEST_CASE("assignment CSV round-trips through its parser") {
  const std::string csv =
      "photo_id,segment_id\np1,s1\np1,s2\n\"p,2\",\"s\"\"3\"\n";
  const auto parsed = pipeline::parse_photo_assignment_csv(csv);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed.at("p1") == std::vector<std::string>{"s1", "s2"});
  CHECK(parsed.at("p,2") == std::vector<std::string>{"s\"3"});
  CHECK_THROWS_AS(pipeline::parse_photo_assignment_csv(
                      "photo_id,segment_id\nonly_one_column\n"),
                  ParseError);
}

TEST_CASE("pipeline degrades gracefully without target scores") {
  // Streets with geometry only: correlations, regressions, curves, and bins
  // all become unavailable, but the run still completes and reports why.
  const fs::path dir = fs::temp_directory_path() / "streetscore_no_targets";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto city = [] {
    synth::SynthSpec spec;
    spec.n_segments = 40;
    spec.photos_median = 10;
    spec.seed = 77;
    return synth::generate(spec);
  }();
  auto streets = city.streets;
  for (auto& s : streets) {
    s.walkability.reset();
    s.safety.reset();
    s.ratings.reset();
  }
  pipeline::write_text_file((dir / "streets.geojson").string(),
                            model::streets_to_geojson(streets));
  std::string photos_jsonl, venues_jsonl;
  for (const auto& p : city.photos) photos_jsonl += model::to_jsonl(p) + "\n";
  for (const auto& v : city.venues) venues_jsonl += model::to_jsonl(v) + "\n";
  pipeline::write_text_file((dir / "photos.jsonl").string(), photos_jsonl);
  pipeline::write_text_file((dir / "venues.jsonl").string(), venues_jsonl);

  pipeline::PipelineConfig config;
  config.streets_path = (dir / "streets.geojson").string();
  config.photos_path = (dir / "photos.jsonl").string();
  config.venues_path = (dir / "venues.jsonl").string();
  config.out_dir = (dir / "out").string();
  const auto bundle = pipeline::run_pipeline(config);

  CHECK(bundle.metrics.photo_at_night.error.empty());
  for (const auto& c : bundle.correlations) {
    CHECK(c.n == 0);
    CHECK_FALSE(c.r.has_value());
  }
  CHECK(bundle.regressions.empty());
  CHECK(bundle.bins.empty());
  for (const auto& [name, curve] : bundle.curves) {
    for (const auto& p : curve.points) {
      CHECK(p.n == 0);
    }
  }
  CHECK(bundle.summary.at("notes").size() >= 4);
  fs::remove_all(dir);
}

TEST_CASE("scored streets GeoJSON is sorted and carries scores") {
  auto config = fixture().config;
  config.out_dir = (fixture().dir / "geo").string();
  const auto bundle = pipeline::run_pipeline(config);
  const auto doc = nlohmann::json::parse(
      slurp(fs::path(config.out_dir) / "scored_streets.geojson"));
  const auto& feats = doc.at("features");
  REQUIRE(feats.size() == 80);
  std::string prev;
  for (const auto& f : feats) {
    const std::string id = f.at("properties").at("id");
    CHECK(prev < id);
    prev = id;
    CHECK(f.at("properties").contains("walkability"));
    CHECK(f.at("properties").contains("color"));
    CHECK(f.at("properties").contains("overall_walkability"));
  }
}
