#include "streetscore/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "streetscore/errors.hpp"
#include "streetscore/score.hpp"

namespace streetscore::pipeline {

namespace {

using nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// Minimal RFC-4180 row splitter (quotes, escaped quotes, embedded commas).
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::vector<geo::IndexedSegment> indexed_segments(
    const std::vector<model::StreetSegment>& segments) {
  std::vector<geo::IndexedSegment> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    out.push_back({s.id, *s.geometry});
  }
  return out;
}

std::map<std::string, double> target_map(
    const std::vector<model::StreetSegment>& segments, bool walkability) {
  std::map<std::string, double> out;
  for (const auto& s : segments) {
    const auto& v = walkability ? s.walkability : s.safety;
    if (v) out.emplace(s.id, *v);
  }
  return out;
}

CorrelationEntry correlate_maps(const std::string& name,
                                const std::map<std::string, double>& a,
                                const std::map<std::string, double>& b) {
  std::vector<double> x, y;
  for (const auto& [id, v] : a) {
    const auto it = b.find(id);
    if (it != b.end()) {
      x.push_back(v);
      y.push_back(it->second);
    }
  }
  CorrelationEntry entry;
  entry.name = name;
  entry.n = static_cast<int64_t>(x.size());
  entry.r = safe_pearson(x, y);
  return entry;
}

const char* kColorRamp[5] = {"#d73027", "#fc8d59", "#fee08b", "#a6d96a",
                             "#1a9850"};

// 5-bucket red-to-green ramp over a fixed score range.
std::string ramp_color(double value, double lo, double hi) {
  const double t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
  const int bucket = std::min(4, static_cast<int>(t * 5.0));
  return kColorRamp[bucket];
}

}  // namespace

std::optional<double> safe_pearson(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  if (x.size() < 3) return std::nullopt;
  try {
    return stats::pearson(x, y);
  } catch (const DegenerateDataError&) {
    return std::nullopt;
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

LoadedInputs load_inputs(const PipelineConfig& config, bool need_photos,
                         bool need_venues) {
  LoadedInputs inputs;
  if (config.streets_path.empty()) {
    throw ValidationError("no streets file configured");
  }
  inputs.segments = model::parse_streets(read_text_file(config.streets_path));
  if (inputs.segments.empty()) {
    throw ValidationError("streets file contains no segments");
  }

  // Projection origin: centroid of all street vertices.
  double lon = 0.0, lat = 0.0;
  size_t count = 0;
  for (const auto& s : inputs.segments) {
    for (const auto& p : s.raw_coords) {
      lon += p.lon;
      lat += p.lat;
      ++count;
    }
  }
  inputs.origin = geo::GeoPoint{lon / static_cast<double>(count),
                                lat / static_cast<double>(count)};
  for (auto& s : inputs.segments) {
    std::vector<geo::PlanarPoint> planar;
    planar.reserve(s.raw_coords.size());
    for (const auto& p : s.raw_coords) {
      planar.push_back(geo::project(p, inputs.origin));
    }
    s.geometry = geo::Polyline(std::move(planar));
  }

  if (need_photos) {
    if (config.photos_path.empty()) {
      throw ValidationError("no photos file configured");
    }
    std::ifstream in(config.photos_path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + config.photos_path);
    auto [photos, skipped] = model::parse_photos(in, config.strict);
    inputs.photos = std::move(photos);
    inputs.photos_skipped = skipped;
  }
  if (need_venues) {
    if (config.venues_path.empty()) {
      throw ValidationError("no venues file configured");
    }
    std::ifstream in(config.venues_path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + config.venues_path);
    auto [venues, skipped] = model::parse_venues(in, config.strict);
    inputs.venues = std::move(venues);
    inputs.venues_skipped = skipped;
  }
  return inputs;
}

Assignments compute_join(const LoadedInputs& inputs, double buffer_radius,
                         int threads) {
  if (!(buffer_radius > 0.0)) {
    throw ValidationError("buffer radius must be > 0");
  }
  const auto indexed = indexed_segments(inputs.segments);
  const geo::SpatialIndex index =
      geo::build_index(indexed, 2.0 * buffer_radius);

  Assignments asg;
  asg.photo_segments.resize(inputs.photos.size());
  const int pool_size = std::max(
      1, std::min<int>(threads,
                       static_cast<int>(inputs.photos.size() / 4096) + 1));
  auto match_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const geo::PlanarPoint p =
          geo::project(inputs.photos[i].location, inputs.origin);
      asg.photo_segments[i] =
          geo::match_point_indices(index, indexed, p, buffer_radius);
    }
  };
  if (pool_size == 1) {
    match_range(0, inputs.photos.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (inputs.photos.size() + pool_size - 1) / pool_size;
    for (int t = 0; t < pool_size; ++t) {
      const size_t begin = std::min(inputs.photos.size(), chunk * t);
      const size_t end = std::min(inputs.photos.size(), begin + chunk);
      pool.emplace_back([&, begin, end] { match_range(begin, end); });
    }
    for (auto& th : pool) th.join();
  }

  asg.venue_segment.resize(inputs.venues.size(), -1);
  for (size_t j = 0; j < inputs.venues.size(); ++j) {
    const geo::PlanarPoint p =
        geo::project(inputs.venues[j].location, inputs.origin);
    asg.venue_segment[j] = geo::nearest_segment_index(index, indexed, p);
  }
  return asg;
}

std::string photo_assignment_csv(const LoadedInputs& inputs,
                                 const Assignments& asg) {
  std::ostringstream out;
  out << "photo_id,segment_id\n";
  for (size_t i = 0; i < inputs.photos.size(); ++i) {
    std::vector<std::string> ids;
    for (int32_t s : asg.photo_segments[i]) {
      ids.push_back(inputs.segments[static_cast<size_t>(s)].id);
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
      out << csv_escape(inputs.photos[i].id) << ',' << csv_escape(id) << '\n';
    }
  }
  return out.str();
}

std::string venue_assignment_csv(const LoadedInputs& inputs,
                                 const Assignments& asg) {
  std::ostringstream out;
  out << "venue_id,segment_id\n";
  for (size_t j = 0; j < inputs.venues.size(); ++j) {
    if (asg.venue_segment[j] < 0) continue;
    out << csv_escape(inputs.venues[j].id) << ','
        << csv_escape(
               inputs.segments[static_cast<size_t>(asg.venue_segment[j])].id)
        << '\n';
  }
  return out.str();
}

std::map<std::string, std::vector<std::string>> parse_photo_assignment_csv(
    const std::string& content) {
  std::map<std::string, std::vector<std::string>> out;
  std::istringstream in(content);
  std::string line;
  bool header = true;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header) {
      header = false;
      continue;
    }
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != 2) {
      throw ParseError("photo assignment line " + std::to_string(line_no) +
                       ": expected 2 columns");
    }
    out[fields[0]].push_back(fields[1]);
  }
  return out;
}

std::map<std::string, std::string> parse_venue_assignment_csv(
    const std::string& content) {
  std::map<std::string, std::string> out;
  std::istringstream in(content);
  std::string line;
  bool header = true;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header) {
      header = false;
      continue;
    }
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != 2) {
      throw ParseError("venue assignment line " + std::to_string(line_no) +
                       ": expected 2 columns");
    }
    out[fields[0]] = fields[1];
  }
  return out;
}

Metrics compute_metrics(const std::vector<features::SegmentFeatures>& feats) {
  Metrics m;
  auto fill = [&](features::FractionKind kind, MetricSet& set) {
    const auto pairs = features::fraction_pairs(feats, kind);
    set.excluded = pairs.excluded;
    if (kind == features::FractionKind::tags) m.tag_pairs = pairs;
    try {
      for (const auto& score : features::z_pair_metric(pairs, &set.params)) {
        set.scores.emplace(score.segment_id, score.score);
      }
    } catch (const DegenerateDataError& e) {
      set.scores.clear();
      set.error = e.what();
    }
  };
  fill(features::FractionKind::night, m.photo_at_night);
  fill(features::FractionKind::gender, m.manhood);
  fill(features::FractionKind::tags, m.zwalkability);
  for (const auto& [id, age] : features::mean_age(feats)) {
    m.mean_age.emplace(id, age);
  }
  return m;
}

std::string metrics_csv(const std::vector<features::SegmentFeatures>& feats,
                        const Metrics& metrics) {
  std::vector<std::string> ids;
  for (const auto& f : feats) ids.push_back(f.segment_id);
  std::sort(ids.begin(), ids.end());

  std::ostringstream out;
  out << "segment_id,photo_at_night,manhood,zwalkability,mean_age\n";
  auto cell = [&](const std::map<std::string, double>& m,
                  const std::string& id) {
    const auto it = m.find(id);
    return it == m.end() ? std::string() : fmt(it->second);
  };
  for (const auto& id : ids) {
    out << csv_escape(id) << ',' << cell(metrics.photo_at_night.scores, id)
        << ',' << cell(metrics.manhood.scores, id) << ','
        << cell(metrics.zwalkability.scores, id) << ','
        << cell(metrics.mean_age, id) << '\n';
  }
  return out.str();
}

stats::RegressionResult regress_target(
    const std::vector<features::SegmentFeatures>& feats,
    const std::map<std::string, double>& target,
    const std::string& reference_category,
    std::vector<std::string>* dropped_empty) {
  const auto ref = model::parse_venue_category(reference_category);
  if (!ref) {
    throw ValidationError("unknown reference category '" + reference_category +
                          "'");
  }
  const auto fractions = features::category_fractions(feats);

  // Candidate columns: all categories except the reference.
  std::vector<int> columns;
  for (int c = 0; c < model::kVenueCategoryCount; ++c) {
    if (static_cast<model::VenueCategory>(c) != *ref) columns.push_back(c);
  }

  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (const auto& [id, frac] : fractions) {
    const auto it = target.find(id);
    if (it == target.end()) continue;
    std::vector<double> row;
    row.reserve(columns.size());
    for (int c : columns) row.push_back(frac[static_cast<size_t>(c)]);
    X.push_back(std::move(row));
    y.push_back(it->second);
  }
  if (y.empty()) {
    throw DegenerateDataError(
        "regression: no segments with both venues and a target score");
  }

  // Drop categories absent from the data; they carry no information and
  // would only trip the collinearity check.
  std::vector<size_t> keep;
  for (size_t j = 0; j < columns.size(); ++j) {
    bool any = false;
    for (const auto& row : X) {
      if (row[j] != 0.0) {
        any = true;
        break;
      }
    }
    const std::string name(
        model::to_string(static_cast<model::VenueCategory>(columns[j])));
    if (any) {
      keep.push_back(j);
    } else if (dropped_empty) {
      dropped_empty->push_back(name);
    }
  }
  std::vector<std::vector<double>> Xk;
  Xk.reserve(X.size());
  for (const auto& row : X) {
    std::vector<double> r;
    r.reserve(keep.size());
    for (size_t j : keep) r.push_back(row[j]);
    Xk.push_back(std::move(r));
  }
  std::vector<std::string> names;
  for (size_t j : keep) {
    names.emplace_back(
        model::to_string(static_cast<model::VenueCategory>(columns[j])));
  }
  return stats::ols_fit(Xk, y, names);
}

std::string scored_streets_geojson(
    const std::vector<model::StreetSegment>& segments,
    const std::vector<features::SegmentFeatures>& feats,
    const Metrics& metrics) {
  std::map<std::string, const features::SegmentFeatures*> by_id;
  for (const auto& f : feats) by_id.emplace(f.segment_id, &f);

  std::vector<const model::StreetSegment*> sorted;
  for (const auto& s : segments) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  ordered_json doc;
  doc["type"] = "FeatureCollection";
  ordered_json features_json = ordered_json::array();
  for (const auto* s : sorted) {
    ordered_json f;
    f["type"] = "Feature";
    ordered_json props;
    props["id"] = s->id;
    if (s->walkability) props["walkability"] = *s->walkability;
    if (s->safety) props["safety"] = *s->safety;
    if (s->ratings) {
      props["overall_walkability"] = score::overall_walkability(*s->ratings);
    }
    auto metric_prop = [&](const char* key,
                           const std::map<std::string, double>& m) {
      const auto it = m.find(s->id);
      if (it != m.end()) props[key] = it->second;
    };
    metric_prop("photo_at_night", metrics.photo_at_night.scores);
    metric_prop("manhood", metrics.manhood.scores);
    metric_prop("zwalkability", metrics.zwalkability.scores);
    metric_prop("mean_age", metrics.mean_age);
    const auto fit = by_id.find(s->id);
    if (fit != by_id.end()) {
      props["n_photos"] = fit->second->n_photos;
      props["n_venues"] = fit->second->venue_total();
    }
    if (s->walkability) {
      props["color"] = ramp_color(*s->walkability, 1.0, 5.0);
      props["color_by"] = "walkability";
    } else if (s->safety) {
      props["color"] = ramp_color(*s->safety, 0.5, 5.0);
      props["color_by"] = "safety";
    }
    f["properties"] = std::move(props);
    ordered_json coords = ordered_json::array();
    for (const auto& p : s->raw_coords) coords.push_back({p.lon, p.lat});
    f["geometry"] = {{"type", "LineString"},
                     {"coordinates", std::move(coords)}};
    features_json.push_back(std::move(f));
  }
  doc["features"] = std::move(features_json);
  return doc.dump(2) + "\n";
}

ReportBundle run_pipeline(const PipelineConfig& config) {
  ReportBundle bundle;
  const LoadedInputs inputs = load_inputs(config, true, true);
  const Assignments asg =
      compute_join(inputs, config.buffer_radius, config.threads);

  features::AggregateOptions agg_options;
  agg_options.night_confidence = config.night_confidence;
  agg_options.threads = config.threads;
  if (!config.keywords_path.empty()) {
    agg_options.keywords =
        features::KeywordLists::walk_list_from_file(config.keywords_path);
  }
  bundle.features = features::aggregate(inputs.segments, inputs.photos,
                                        inputs.venues, asg.photo_segments,
                                        asg.venue_segment, agg_options);
  bundle.metrics = compute_metrics(bundle.features);

  const auto safety = target_map(inputs.segments, false);
  const auto walkability = target_map(inputs.segments, true);

  // Raw walk/car fractions, for the per-list correlations.
  std::map<std::string, double> walk_frac, car_frac;
  for (const auto& p : bundle.metrics.tag_pairs.included) {
    walk_frac.emplace(p.segment_id, p.a);
    car_frac.emplace(p.segment_id, p.b);
  }

  bundle.correlations.push_back(correlate_maps(
      "photo_at_night_vs_safety", bundle.metrics.photo_at_night.scores, safety));
  bundle.correlations.push_back(
      correlate_maps("manhood_vs_safety", bundle.metrics.manhood.scores, safety));
  bundle.correlations.push_back(
      correlate_maps("mean_age_vs_safety", bundle.metrics.mean_age, safety));
  bundle.correlations.push_back(correlate_maps(
      "zwalkability_vs_walkability", bundle.metrics.zwalkability.scores,
      walkability));
  bundle.correlations.push_back(
      correlate_maps("walk_fraction_vs_walkability", walk_frac, walkability));
  bundle.correlations.push_back(
      correlate_maps("car_fraction_vs_walkability", car_frac, walkability));
  bundle.correlations.push_back(
      correlate_maps("safety_vs_walkability", safety, walkability));

  ordered_json notes = ordered_json::array();

  for (const bool walk_target : {false, true}) {
    const char* name = walk_target ? "walkability" : "safety";
    try {
      std::vector<std::string> dropped;
      const auto result =
          regress_target(bundle.features, walk_target ? walkability : safety,
                         config.reference_category, &dropped);
      bundle.regressions.emplace(name, result);
      if (!dropped.empty()) {
        std::string note = std::string("regression on ") + name +
                           ": empty categories dropped:";
        for (const auto& d : dropped) note += " " + d;
        notes.push_back(note);
      }
    } catch (const Error& e) {
      notes.push_back(std::string("regression on ") + name +
                      " unavailable: " + e.what());
    }
  }

  // Stability curves: metric vs target over segments with at least T units
  // of supporting data.
  std::map<std::string, int64_t> photo_counts, user_counts, age_counts,
      tag_counts;
  for (const auto& f : bundle.features) {
    photo_counts.emplace(f.segment_id, f.n_photos);
    user_counts.emplace(f.segment_id, f.male_users + f.female_users);
    age_counts.emplace(f.segment_id, static_cast<int64_t>(f.ages.size()));
    tag_counts.emplace(f.segment_id, f.tag_total);
  }
  const auto& ladder = config.stability_thresholds;
  bundle.curves.emplace(
      "photo_at_night",
      stats::stability_curve(bundle.metrics.photo_at_night.scores, safety,
                             photo_counts, ladder));
  bundle.curves.emplace(
      "manhood", stats::stability_curve(bundle.metrics.manhood.scores, safety,
                                        user_counts, ladder));
  bundle.curves.emplace(
      "mean_age", stats::stability_curve(bundle.metrics.mean_age, safety,
                                         age_counts, ladder));
  bundle.curves.emplace(
      "zwalkability",
      stats::stability_curve(bundle.metrics.zwalkability.scores, walkability,
                             tag_counts, ladder));

  // Bin summaries: tertiles of photo@night and quartiles of manhood, both
  // against safety.
  auto binnable = [&](const std::map<std::string, double>& scores) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [id, v] : scores) {
      if (safety.count(id)) out.emplace_back(id, v);
    }
    return out;
  };
  auto try_bins = [&](const char* metric_name,
                      const std::map<std::string, double>& scores, int k) {
    try {
      bundle.bins.emplace(metric_name,
                          stats::quantile_bin(binnable(scores), safety, k));
    } catch (const Error& e) {
      notes.push_back(std::string("bins for ") + metric_name +
                      " unavailable: " + e.what());
    }
  };
  try_bins("photo_at_night", bundle.metrics.photo_at_night.scores, 3);
  try_bins("manhood", bundle.metrics.manhood.scores, 4);

  // Summary document.
  ordered_json summary;
  summary["inputs"] = {
      {"streets", config.streets_path},
      {"photos", config.photos_path},
      {"venues", config.venues_path},
      {"n_segments", inputs.segments.size()},
      {"n_photos", inputs.photos.size()},
      {"n_venues", inputs.venues.size()},
      {"photos_skipped", inputs.photos_skipped},
      {"venues_skipped", inputs.venues_skipped},
  };
  summary["config"] = {
      {"buffer_radius", config.buffer_radius},
      {"night_confidence", config.night_confidence},
      {"reference_category", config.reference_category},
      {"stability_thresholds", config.stability_thresholds},
      {"seed", config.seed},
      {"threads", config.threads},
      {"keywords",
       config.keywords_path.empty() ? "built-in" : config.keywords_path},
  };
  size_t matched_photos = 0;
  for (const auto& segs : asg.photo_segments) {
    if (!segs.empty()) ++matched_photos;
  }
  summary["join"] = {
      {"photos_matched", matched_photos},
      {"venues_assigned", inputs.venues.size()},
      {"projection_origin", {inputs.origin.lon, inputs.origin.lat}},
  };
  auto metric_summary = [](const MetricSet& set) {
    ordered_json j;
    j["n_scored"] = set.scores.size();
    j["n_excluded"] = set.excluded.size();
    if (set.error.empty()) {
      j["mu_a"] = set.params.mu_a;
      j["sigma_a"] = set.params.sigma_a;
      j["mu_b"] = set.params.mu_b;
      j["sigma_b"] = set.params.sigma_b;
    } else {
      j["error"] = set.error;
    }
    return j;
  };
  summary["metrics"] = {
      {"photo_at_night", metric_summary(bundle.metrics.photo_at_night)},
      {"manhood", metric_summary(bundle.metrics.manhood)},
      {"zwalkability", metric_summary(bundle.metrics.zwalkability)},
      {"mean_age", ordered_json{{"n_scored", bundle.metrics.mean_age.size()}}},
  };
  ordered_json correlations = ordered_json::array();
  for (const auto& c : bundle.correlations) {
    ordered_json cj;
    cj["name"] = c.name;
    if (c.r) cj["r"] = *c.r;
    cj["n"] = c.n;
    correlations.push_back(std::move(cj));
  }
  summary["correlations"] = std::move(correlations);
  {
    ordered_json curves_json;
    for (const auto& [metric_name, curve] : bundle.curves) {
      curves_json[metric_name] = stats::to_json(curve);
    }
    summary["stability_curves"] = std::move(curves_json);
    ordered_json bins_json;
    for (const auto& [metric_name, bins] : bundle.bins) {
      bins_json[metric_name] = stats::to_json(bins);
    }
    summary["bins"] = std::move(bins_json);
  }
  summary["notes"] = std::move(notes);
  bundle.summary = summary;

  // Emit the report files.
  std::filesystem::create_directories(config.out_dir);
  const auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path =
        (std::filesystem::path(config.out_dir) / name).string();
    write_text_file(path, content);
    bundle.written_files.push_back(path);
  };
  emit("photo_assignment.csv", photo_assignment_csv(inputs, asg));
  emit("venue_assignment.csv", venue_assignment_csv(inputs, asg));
  emit("features.csv", features::features_to_csv(bundle.features));
  emit("metrics.csv", metrics_csv(bundle.features, bundle.metrics));
  {
    ordered_json reg = ordered_json::object();
    for (const auto& [target, result] : bundle.regressions) {
      ordered_json r = stats::to_json(result);
      r["target"] = target;
      r["reference_category"] = config.reference_category;
      reg[target] = std::move(r);
      emit("regression_" + target + ".csv", stats::to_csv(result));
    }
    emit("regressions.json", reg.dump(2) + "\n");
  }
  for (const auto& [metric_name, curve] : bundle.curves) {
    emit("stability_" + metric_name + ".csv", stats::to_csv(curve));
  }
  for (const auto& [metric_name, bins] : bundle.bins) {
    emit("bins_" + metric_name + ".csv", stats::to_csv(bins));
  }
  emit("scored_streets.geojson",
       scored_streets_geojson(inputs.segments, bundle.features,
                              bundle.metrics));
  emit("summary.json", summary.dump(2) + "\n");
  return bundle;
}

}  // namespace streetscore::pipeline
