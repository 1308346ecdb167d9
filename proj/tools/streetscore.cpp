// streetscore: pipeline CLI for scoring street segments from geo-tagged
// social-media dumps. Inputs are documented in README.md; every config key
// can also be set from a TOML-compatible key=value file via --config, with
// command-line flags taking precedence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streetscore/errors.hpp"
#include "streetscore/features.hpp"
#include "streetscore/pipeline.hpp"
#include "streetscore/score.hpp"
#include "streetscore/stats.hpp"
#include "streetscore/synth.hpp"

namespace {

namespace ss = streetscore;
using nlohmann::ordered_json;

// Shared pipeline options live on the main app; subcommands fall through to
// them, so `streetscore run --streets x` and config-file keys both resolve
// against the same set, with command-line flags taking precedence.
void add_input_options(CLI::App& app, ss::pipeline::PipelineConfig& cfg) {
  app.set_config("--config", "", "TOML-compatible key=value config file");
  app.allow_config_extras(true);
  app.add_option("--streets", cfg.streets_path, "streets GeoJSON path");
  app.add_option("--photos", cfg.photos_path, "photos JSON Lines path");
  app.add_option("--venues", cfg.venues_path, "venues JSON Lines path");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--buffer_radius", cfg.buffer_radius,
                 "street buffer radius in meters");
  app.add_option("--night_confidence", cfg.night_confidence,
                 "machine-tag confidence threshold for night photos");
  app.add_option("--keywords", cfg.keywords_path,
                 "walkability keyword list (one per line)");
  app.add_option("--thresholds", cfg.stability_thresholds,
                 "stability thresholds, ascending")
      ->delimiter(',');
  app.add_option("--reference_category", cfg.reference_category,
                 "venue category dropped from regressions");
  app.add_flag("--strict", cfg.strict, "abort on the first malformed line");
  app.add_option("--threads", cfg.threads, "worker threads for join/aggregate");
  app.add_option("--seed", cfg.seed, "random seed for synth, echoed into reports");
}

void emit_file(const std::string& dir, const std::string& name,
               const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  ss::pipeline::write_text_file(path, content);
  std::cout << "wrote " << path << "\n";
}

std::vector<std::string> read_keyword_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ss::IoError("cannot open keyword list: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      words.push_back(line);
    }
  }
  return words;
}

// Shared compute path for the feature/metric/stat subcommands.
struct Computed {
  ss::pipeline::LoadedInputs inputs;
  ss::pipeline::Assignments assignments;
  std::vector<ss::features::SegmentFeatures> features;
};

Computed compute_features(const ss::pipeline::PipelineConfig& cfg,
                          const std::string& assignments_dir) {
  Computed c;
  c.inputs = ss::pipeline::load_inputs(cfg, true, true);
  ss::features::AggregateOptions options;
  options.night_confidence = cfg.night_confidence;
  options.threads = cfg.threads;
  if (!cfg.keywords_path.empty()) {
    options.keywords =
        ss::features::KeywordLists::walk_list_from_file(cfg.keywords_path);
  }
  if (!assignments_dir.empty()) {
    const auto photo_map = ss::pipeline::parse_photo_assignment_csv(
        ss::pipeline::read_text_file(
            (std::filesystem::path(assignments_dir) / "photo_assignment.csv")
                .string()));
    const auto venue_map = ss::pipeline::parse_venue_assignment_csv(
        ss::pipeline::read_text_file(
            (std::filesystem::path(assignments_dir) / "venue_assignment.csv")
                .string()));
    c.features = ss::features::aggregate_by_id(
        c.inputs.segments, c.inputs.photos, c.inputs.venues, photo_map,
        venue_map, options);
  } else {
    c.assignments =
        ss::pipeline::compute_join(c.inputs, cfg.buffer_radius, cfg.threads);
    c.features = ss::features::aggregate(
        c.inputs.segments, c.inputs.photos, c.inputs.venues,
        c.assignments.photo_segments, c.assignments.venue_segment, options);
  }
  return c;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"street walkability/safety scoring from social-media dumps"};
  app.require_subcommand(1);

  ss::pipeline::PipelineConfig cfg;
  add_input_options(app, cfg);
  auto add_subcommand = [&app](const char* name, const char* desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    return sub;
  };

  auto* ingest = add_subcommand("ingest", "validate inputs and summarize");

  auto* join = add_subcommand(
      "join", "match photos to buffered segments, venues to nearest");

  auto* features_cmd =
      add_subcommand("features", "emit per-segment aggregates CSV");
  std::string assignments_dir;
  features_cmd->add_option(
      "--assignments", assignments_dir,
      "directory with photo/venue assignment CSVs from `join`");

  auto* metrics_cmd = add_subcommand("metrics", "emit per-segment metric CSV");

  auto* regress = add_subcommand(
      "regress", "venue-category regressions for safety/walkability");
  std::string regress_target = "both";
  regress->add_option("--target", regress_target,
                      "safety, walkability, or both");

  auto* curve =
      add_subcommand("curve", "correlation stability vs data volume");
  std::string curve_metric = "night";
  curve->add_option("--metric", curve_metric,
                    "night, manhood, age, or tags");

  auto* bins = add_subcommand("bins", "quantile-bin summaries");
  std::string bins_metric = "night";
  int bins_k = 0;
  bins->add_option("--metric", bins_metric, "night or manhood");
  bins->add_option("--k", bins_k, "bin count (default 3 night, 4 manhood)");

  auto* score_cmd = add_subcommand(
      "score", "composite walkability score and scored GeoJSON");

  auto* walkhood_cmd =
      add_subcommand("walkhood", "reachability polygon around an origin");
  double wh_lon = 0.0, wh_lat = 0.0, wh_minutes = 5.0;
  double wh_speed = ss::score::kDefaultWalkSpeedMetersPerMinute;
  double wh_snap = ss::score::kDefaultSnapToleranceMeters;
  walkhood_cmd->add_option("--lon", wh_lon, "origin longitude")->required();
  walkhood_cmd->add_option("--lat", wh_lat, "origin latitude")->required();
  walkhood_cmd->add_option("--minutes", wh_minutes, "walking time budget");
  walkhood_cmd->add_option("--speed", wh_speed, "walking speed, m/min");
  walkhood_cmd->add_option("--snap_tolerance", wh_snap,
                           "endpoint snap tolerance, meters");

  auto* synth = add_subcommand(
      "synth", "generate a synthetic city with planted correlations");
  ss::synth::SynthSpec spec;
  synth->add_option("--n_segments", spec.n_segments, "segment count");
  synth->add_option("--extent", spec.extent_m, "area side length, meters");
  synth->add_option("--photos_median", spec.photos_median,
                    "median photos per segment");
  synth->add_option("--photos_sigma", spec.photos_sigma,
                    "lognormal sigma of photos per segment");
  synth->add_option("--rho_night", spec.rho_night, "planted night correlation");
  synth->add_option("--rho_gender", spec.rho_gender,
                    "planted gender correlation");
  synth->add_option("--rho_tags", spec.rho_tags, "planted tag correlation");
  synth->add_option("--venues_mean", spec.venues_per_segment_mean,
                    "mean venues per segment");
  synth->add_option("--noise_slope", spec.noise_volume_slope,
                    "extra-noise decay exponent vs volume");
  synth->add_option("--extra_noise", spec.extra_noise,
                    "extra latent noise amplitude");

  auto* run = add_subcommand("run", "full pipeline, all reports");

  auto* agreement =
      add_subcommand("agreement", "annotator keyword-list agreement ratio");
  std::vector<std::string> agreement_files;
  agreement
      ->add_option("--lists", agreement_files,
                   "two or more keyword list files")
      ->expected(-2);

  CLI11_PARSE(app, argc, argv);

  if (ingest->parsed()) {
    const auto inputs = ss::pipeline::load_inputs(
        cfg, !cfg.photos_path.empty(), !cfg.venues_path.empty());
    ordered_json j;
    j["n_segments"] = inputs.segments.size();
    j["n_photos"] = inputs.photos.size();
    j["n_venues"] = inputs.venues.size();
    j["photos_skipped"] = inputs.photos_skipped;
    j["venues_skipped"] = inputs.venues_skipped;
    j["projection_origin"] = {inputs.origin.lon, inputs.origin.lat};
    size_t with_safety = 0, with_walkability = 0, with_ratings = 0;
    for (const auto& s : inputs.segments) {
      if (s.safety) ++with_safety;
      if (s.walkability) ++with_walkability;
      if (s.ratings) ++with_ratings;
    }
    j["segments_with_safety"] = with_safety;
    j["segments_with_walkability"] = with_walkability;
    j["segments_with_ratings"] = with_ratings;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (join->parsed()) {
    const auto inputs = ss::pipeline::load_inputs(cfg, true, true);
    const auto asg =
        ss::pipeline::compute_join(inputs, cfg.buffer_radius, cfg.threads);
    emit_file(cfg.out_dir, "photo_assignment.csv",
              ss::pipeline::photo_assignment_csv(inputs, asg));
    emit_file(cfg.out_dir, "venue_assignment.csv",
              ss::pipeline::venue_assignment_csv(inputs, asg));
    return 0;
  }

  if (features_cmd->parsed()) {
    const auto c = compute_features(cfg, assignments_dir);
    emit_file(cfg.out_dir, "features.csv",
              ss::features::features_to_csv(c.features));
    return 0;
  }

  if (metrics_cmd->parsed()) {
    const auto c = compute_features(cfg, "");
    const auto metrics = ss::pipeline::compute_metrics(c.features);
    emit_file(cfg.out_dir, "metrics.csv",
              ss::pipeline::metrics_csv(c.features, metrics));
    return 0;
  }

  if (regress->parsed()) {
    const auto c = compute_features(cfg, "");
    ordered_json out;
    for (const bool walk_target : {false, true}) {
      const std::string name = walk_target ? "walkability" : "safety";
      if (regress_target != "both" && regress_target != name) continue;
      std::map<std::string, double> target;
      for (const auto& s : c.inputs.segments) {
        const auto& v = walk_target ? s.walkability : s.safety;
        if (v) target.emplace(s.id, *v);
      }
      std::vector<std::string> dropped;
      const auto result = ss::pipeline::regress_target(
          c.features, target, cfg.reference_category, &dropped);
      ordered_json r = ss::stats::to_json(result);
      r["target"] = name;
      r["reference_category"] = cfg.reference_category;
      if (!dropped.empty()) r["dropped_empty_categories"] = dropped;
      out[name] = std::move(r);
    }
    emit_file(cfg.out_dir, "regressions.json", out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (curve->parsed() || bins->parsed()) {
    const std::string metric_arg = curve->parsed() ? curve_metric : bins_metric;
    const auto c = compute_features(cfg, "");
    const auto metrics = ss::pipeline::compute_metrics(c.features);

    std::map<std::string, double> scores;
    std::map<std::string, int64_t> counts;
    std::map<std::string, double> target;
    const bool walk_target = metric_arg == "tags";
    for (const auto& s : c.inputs.segments) {
      const auto& v = walk_target ? s.walkability : s.safety;
      if (v) target.emplace(s.id, *v);
    }
    std::string metric_name;
    for (const auto& f : c.features) {
      int64_t count = 0;
      if (metric_arg == "night") {
        metric_name = "photo_at_night";
        count = f.n_photos;
      } else if (metric_arg == "manhood") {
        metric_name = "manhood";
        count = f.male_users + f.female_users;
      } else if (metric_arg == "age") {
        metric_name = "mean_age";
        count = static_cast<int64_t>(f.ages.size());
      } else if (metric_arg == "tags") {
        metric_name = "zwalkability";
        count = f.tag_total;
      } else {
        throw ss::ValidationError("unknown metric '" + metric_arg + "'");
      }
      counts.emplace(f.segment_id, count);
    }
    if (metric_name == "photo_at_night") scores = metrics.photo_at_night.scores;
    else if (metric_name == "manhood") scores = metrics.manhood.scores;
    else if (metric_name == "mean_age") scores = metrics.mean_age;
    else scores = metrics.zwalkability.scores;

    if (curve->parsed()) {
      const auto result = ss::stats::stability_curve(
          scores, target, counts, cfg.stability_thresholds);
      emit_file(cfg.out_dir, "stability_" + metric_name + ".csv",
                ss::stats::to_csv(result));
    } else {
      if (bins_k == 0) bins_k = metric_arg == "manhood" ? 4 : 3;
      std::vector<std::pair<std::string, double>> pairs;
      for (const auto& [id, v] : scores) {
        if (target.count(id)) pairs.emplace_back(id, v);
      }
      const auto result = ss::stats::quantile_bin(pairs, target, bins_k);
      emit_file(cfg.out_dir, "bins_" + metric_name + ".csv",
                ss::stats::to_csv(result));
    }
    return 0;
  }

  if (score_cmd->parsed()) {
    const auto inputs = ss::pipeline::load_inputs(cfg, false, false);
    std::ostringstream csv;
    csv << "segment_id,overall_walkability\n";
    std::vector<const ss::model::StreetSegment*> sorted;
    for (const auto& s : inputs.segments) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });
    size_t scored = 0;
    for (const auto* s : sorted) {
      if (!s->ratings) continue;
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.12g",
                    ss::score::overall_walkability(*s->ratings));
      csv << s->id << ',' << buf << '\n';
      ++scored;
    }
    emit_file(cfg.out_dir, "composite_scores.csv", csv.str());
    emit_file(cfg.out_dir, "scored_streets.geojson",
              ss::pipeline::scored_streets_geojson(inputs.segments, {}, {}));
    std::cout << "scored " << scored << " of " << inputs.segments.size()
              << " segments\n";
    return 0;
  }

  if (walkhood_cmd->parsed()) {
    const auto inputs = ss::pipeline::load_inputs(cfg, false, false);
    const auto net = ss::score::build_network(inputs.segments, wh_snap);
    const auto origin =
        ss::geo::project({wh_lon, wh_lat}, inputs.origin);
    const auto hull = ss::score::walkhood(net, origin, wh_minutes, wh_speed);
    emit_file(cfg.out_dir, "walkhood.geojson",
              ss::score::walkhood_to_geojson(hull, inputs.origin));
    return 0;
  }

  if (synth->parsed()) {
    spec.seed = cfg.seed;
    ss::synth::synth_city(spec, cfg.out_dir);
    std::cout << "wrote streets.geojson, photos.jsonl, venues.jsonl under "
              << cfg.out_dir << "\n";
    return 0;
  }

  if (run->parsed()) {
    const auto bundle = ss::pipeline::run_pipeline(cfg);
    for (const auto& path : bundle.written_files) {
      std::cout << "wrote " << path << "\n";
    }
    for (const auto& c : bundle.correlations) {
      std::cout << c.name << ": "
                << (c.r ? std::to_string(*c.r) : std::string("undefined"))
                << " (n=" << c.n << ")\n";
    }
    return 0;
  }

  if (agreement->parsed()) {
    std::vector<std::vector<std::string>> lists;
    for (const auto& path : agreement_files) {
      lists.push_back(read_keyword_file(path));
    }
    const auto result = ss::synth::annotation_agreement(lists);
    ordered_json j;
    j["n_lists"] = lists.size();
    j["merged_size"] = result.merged.size();
    j["intersected_size"] = result.intersected.size();
    j["agreement"] = result.agreement;
    j["merged"] = result.merged;
    j["intersected"] = result.intersected;
    j["definition_note"] =
        "agreement = |intersection| / |union|; the merged/intersected ratio "
        "is its reciprocal and exceeds 1 whenever the lists differ";
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ss::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ss::ErrorKind::degenerate_stats ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
