#include "streetscore/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "streetscore/errors.hpp"

namespace streetscore::features {

namespace {

// Attributes resolved once per owner across the whole photo set. Conflicting
// records (dirty data) resolve to the value on the lexicographically
// smallest photo id, which keeps aggregation permutation-invariant.
struct OwnerInfo {
  std::optional<model::Gender> gender;
  std::string gender_photo_id;
  std::optional<int> age;
  std::string age_photo_id;
};

// Per-segment partial counts produced by one photo partition.
struct Partial {
  int64_t n_photos = 0;
  int64_t night_count = 0;
  int64_t notnight_count = 0;
  int64_t tag_total = 0;
  int64_t walk_tag_count = 0;
  int64_t car_tag_count = 0;
  std::unordered_set<int32_t> owners;
};

void accumulate_photos(const std::vector<model::PhotoRecord>& photos,
                       const std::vector<std::vector<int32_t>>& photo_segments,
                       const std::vector<int32_t>& photo_owner,
                       const AggregateOptions& options, size_t begin,
                       size_t end, std::vector<Partial>& partials) {
  for (size_t i = begin; i < end; ++i) {
    const auto& photo = photos[i];
    if (photo_segments[i].empty()) continue;
    const auto night = model::classify_night(photo, options.night_confidence);
    const auto [walk, car] = match_tag_counts(photo.user_tags, options.keywords);
    for (int32_t seg : photo_segments[i]) {
      Partial& p = partials[static_cast<size_t>(seg)];
      p.n_photos += 1;
      if (night == model::NightClass::night) {
        p.night_count += 1;
      } else if (night == model::NightClass::not_night) {
        p.notnight_count += 1;
      }
      p.tag_total += static_cast<int64_t>(photo.user_tags.size());
      p.walk_tag_count += walk;
      p.car_tag_count += car;
      p.owners.insert(photo_owner[i]);
    }
  }
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

}  // namespace

int64_t SegmentFeatures::venue_total() const {
  return std::accumulate(venue_counts.begin(), venue_counts.end(), int64_t{0});
}

KeywordLists KeywordLists::defaults() {
  KeywordLists lists;
  for (const char* kw :
       {"sidewalk", "footway", "street light", "clean street", "pedestrian",
        "bench", "resting", "tree", "greenery", "art", "architecture",
        "historical", "bike", "private", "hill", "social"}) {
    lists.walk.insert(model::normalize_tag(kw));
  }
  lists.car = {"car", "cars"};
  return lists;
}

KeywordLists KeywordLists::walk_list_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open keyword list: " + path);
  }
  KeywordLists lists;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string norm = model::normalize_tag(line);
    if (!norm.empty()) lists.walk.insert(norm);
  }
  if (lists.walk.empty()) {
    throw ValidationError("keyword list is empty: " + path);
  }
  lists.car = {"car", "cars"};
  return lists;
}

std::pair<int64_t, int64_t> match_tag_counts(
    const std::vector<std::string>& user_tags, const KeywordLists& lists) {
  int64_t walk = 0, car = 0;
  for (const auto& tag : user_tags) {
    const std::string norm = model::normalize_tag(tag);
    if (lists.walk.count(norm)) {
      ++walk;
    } else if (lists.car.count(norm)) {
      ++car;
    }
  }
  return {walk, car};
}

std::vector<SegmentFeatures> aggregate(
    const std::vector<model::StreetSegment>& segments,
    const std::vector<model::PhotoRecord>& photos,
    const std::vector<model::VenueRecord>& venues,
    const std::vector<std::vector<int32_t>>& photo_segments,
    const std::vector<int32_t>& venue_segment,
    const AggregateOptions& options) {
  const size_t n_segments = segments.size();
  if (photo_segments.size() != photos.size()) {
    throw ValidationError("photo assignment size does not match photo count");
  }
  if (venue_segment.size() != venues.size()) {
    throw ValidationError("venue assignment size does not match venue count");
  }
  for (const auto& segs : photo_segments) {
    for (int32_t s : segs) {
      if (s < 0 || static_cast<size_t>(s) >= n_segments) {
        throw ValidationError("photo assignment references unknown segment");
      }
    }
  }
  for (int32_t s : venue_segment) {
    if (s != -1 && (s < 0 || static_cast<size_t>(s) >= n_segments)) {
      throw ValidationError("venue assignment references unknown segment");
    }
  }

  // Owner table: ids to dense indices plus globally resolved demographics.
  std::unordered_map<std::string, int32_t> owner_index;
  std::vector<OwnerInfo> owners;
  std::vector<int32_t> photo_owner(photos.size(), -1);
  for (size_t i = 0; i < photos.size(); ++i) {
    const auto& photo = photos[i];
    auto [it, inserted] = owner_index.try_emplace(
        photo.owner_id, static_cast<int32_t>(owners.size()));
    if (inserted) owners.emplace_back();
    photo_owner[i] = it->second;
    OwnerInfo& info = owners[static_cast<size_t>(it->second)];
    if (photo.gender &&
        (info.gender_photo_id.empty() || photo.id < info.gender_photo_id)) {
      info.gender = photo.gender;
      info.gender_photo_id = photo.id;
    }
    if (photo.age &&
        (info.age_photo_id.empty() || photo.id < info.age_photo_id)) {
      info.age = photo.age;
      info.age_photo_id = photo.id;
    }
  }

  // Photo pass, optionally partitioned across threads. Partials merge with
  // integer additions and set unions, so the result matches the sequential
  // run exactly.
  const int threads =
      std::max(1, std::min<int>(options.threads,
                                static_cast<int>(photos.size() / 1024) + 1));
  std::vector<std::vector<Partial>> partials(
      static_cast<size_t>(threads), std::vector<Partial>(n_segments));
  if (threads == 1) {
    accumulate_photos(photos, photo_segments, photo_owner, options, 0,
                      photos.size(), partials[0]);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (photos.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const size_t begin = std::min(photos.size(), chunk * t);
      const size_t end = std::min(photos.size(), begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        accumulate_photos(photos, photo_segments, photo_owner, options, begin,
                          end, partials[static_cast<size_t>(t)]);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<SegmentFeatures> result(n_segments);
  for (size_t s = 0; s < n_segments; ++s) {
    SegmentFeatures& f = result[s];
    f.segment_id = segments[s].id;
    std::unordered_set<int32_t> segment_owners;
    for (auto& partial : partials) {
      Partial& p = partial[s];
      f.n_photos += p.n_photos;
      f.night_count += p.night_count;
      f.notnight_count += p.notnight_count;
      f.tag_total += p.tag_total;
      f.walk_tag_count += p.walk_tag_count;
      f.car_tag_count += p.car_tag_count;
      segment_owners.merge(p.owners);
    }
    for (int32_t owner : segment_owners) {
      const OwnerInfo& info = owners[static_cast<size_t>(owner)];
      if (info.gender == model::Gender::male) f.male_users += 1;
      if (info.gender == model::Gender::female) f.female_users += 1;
      if (info.age) f.ages.push_back(*info.age);
    }
    std::sort(f.ages.begin(), f.ages.end());
  }

  for (size_t v = 0; v < venues.size(); ++v) {
    if (venue_segment[v] == -1) continue;
    result[static_cast<size_t>(venue_segment[v])]
        .venue_counts[static_cast<size_t>(venues[v].category)] += 1;
  }
  return result;
}

std::vector<SegmentFeatures> aggregate_by_id(
    const std::vector<model::StreetSegment>& segments,
    const std::vector<model::PhotoRecord>& photos,
    const std::vector<model::VenueRecord>& venues,
    const std::map<std::string, std::vector<std::string>>& photo_assignment,
    const std::map<std::string, std::string>& venue_assignment,
    const AggregateOptions& options) {
  std::unordered_map<std::string, int32_t> segment_index;
  for (size_t i = 0; i < segments.size(); ++i) {
    segment_index.emplace(segments[i].id, static_cast<int32_t>(i));
  }
  std::unordered_map<std::string, size_t> photo_index;
  for (size_t i = 0; i < photos.size(); ++i) {
    photo_index.emplace(photos[i].id, i);
  }
  std::unordered_map<std::string, size_t> venue_index;
  for (size_t i = 0; i < venues.size(); ++i) {
    venue_index.emplace(venues[i].id, i);
  }

  auto lookup_segment = [&](const std::string& id) {
    const auto it = segment_index.find(id);
    if (it == segment_index.end()) {
      throw ValidationError("assignment references unknown segment id '" + id +
                            "'");
    }
    return it->second;
  };

  std::vector<std::vector<int32_t>> photo_segments(photos.size());
  for (const auto& [photo_id, segment_ids] : photo_assignment) {
    const auto it = photo_index.find(photo_id);
    if (it == photo_index.end()) {
      throw ValidationError("assignment references unknown photo id '" +
                            photo_id + "'");
    }
    for (const auto& seg_id : segment_ids) {
      photo_segments[it->second].push_back(lookup_segment(seg_id));
    }
  }
  std::vector<int32_t> venue_segment(venues.size(), -1);
  for (const auto& [venue_id, seg_id] : venue_assignment) {
    const auto it = venue_index.find(venue_id);
    if (it == venue_index.end()) {
      throw ValidationError("assignment references unknown venue id '" +
                            venue_id + "'");
    }
    venue_segment[it->second] = lookup_segment(seg_id);
  }
  return aggregate(segments, photos, venues, photo_segments, venue_segment,
                   options);
}

std::string_view to_string(FractionKind kind) {
  switch (kind) {
    case FractionKind::night: return "night";
    case FractionKind::gender: return "gender";
    case FractionKind::tags: return "tags";
  }
  return "unknown";
}

FractionPairs fraction_pairs(const std::vector<SegmentFeatures>& features,
                             FractionKind kind) {
  FractionPairs out;
  out.kind = kind;
  for (const auto& f : features) {
    double a = 0.0, b = 0.0;
    int64_t denom = 0;
    switch (kind) {
      case FractionKind::night:
        denom = f.night_count + f.notnight_count;
        if (denom > 0) {
          a = static_cast<double>(f.night_count) / static_cast<double>(denom);
          b = static_cast<double>(f.notnight_count) /
              static_cast<double>(denom);
        }
        break;
      case FractionKind::gender:
        denom = f.male_users + f.female_users;
        if (denom > 0) {
          a = static_cast<double>(f.male_users) / static_cast<double>(denom);
          b = static_cast<double>(f.female_users) / static_cast<double>(denom);
        }
        break;
      case FractionKind::tags:
        denom = f.tag_total;
        if (denom > 0) {
          a = static_cast<double>(f.walk_tag_count) /
              static_cast<double>(denom);
          b = static_cast<double>(f.car_tag_count) / static_cast<double>(denom);
        }
        break;
    }
    if (denom > 0) {
      out.included.push_back({f.segment_id, a, b});
    } else {
      out.excluded.push_back(f.segment_id);
    }
  }
  return out;
}

std::vector<MetricScore> z_pair_metric(const FractionPairs& pairs,
                                       ZMetricParams* params) {
  const auto& included = pairs.included;
  if (included.size() < 2) {
    throw DegenerateDataError(
        std::string("z-pair metric '") + std::string(to_string(pairs.kind)) +
        "' needs at least 2 included segments, got " +
        std::to_string(included.size()));
  }
  const double n = static_cast<double>(included.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (const auto& p : included) {
    mean_a += p.a;
    mean_b += p.b;
  }
  mean_a /= n;
  mean_b /= n;
  double var_a = 0.0, var_b = 0.0;
  for (const auto& p : included) {
    var_a += (p.a - mean_a) * (p.a - mean_a);
    var_b += (p.b - mean_b) * (p.b - mean_b);
  }
  const double sigma_a = std::sqrt(var_a / n);  // population std
  const double sigma_b = std::sqrt(var_b / n);
  const char* side_names[2][3] = {
      {"night fraction", "male-user fraction", "walk-tag fraction"},
      {"not-night fraction", "female-user fraction", "car-tag fraction"}};
  const int k = static_cast<int>(pairs.kind);
  if (sigma_a == 0.0) {
    throw DegenerateDataError(std::string("degenerate metric: ") +
                              side_names[0][k] +
                              " is constant across segments");
  }
  if (sigma_b == 0.0) {
    throw DegenerateDataError(std::string("degenerate metric: ") +
                              side_names[1][k] +
                              " is constant across segments");
  }
  if (params) *params = {mean_a, sigma_a, mean_b, sigma_b};
  std::vector<MetricScore> scores;
  scores.reserve(included.size());
  for (const auto& p : included) {
    scores.push_back(
        {p.segment_id, (p.a - mean_a) / sigma_a - (p.b - mean_b) / sigma_b});
  }
  return scores;
}

std::vector<std::pair<std::string, double>> mean_age(
    const std::vector<SegmentFeatures>& features) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& f : features) {
    if (f.ages.empty()) continue;
    const int64_t sum = std::accumulate(f.ages.begin(), f.ages.end(),
                                        int64_t{0});
    out.emplace_back(f.segment_id,
                     static_cast<double>(sum) /
                         static_cast<double>(f.ages.size()));
  }
  return out;
}

std::vector<std::pair<std::string, std::array<double, model::kVenueCategoryCount>>>
category_fractions(const std::vector<SegmentFeatures>& features) {
  std::vector<std::pair<std::string, std::array<double, model::kVenueCategoryCount>>>
      out;
  for (const auto& f : features) {
    const int64_t total = f.venue_total();
    if (total == 0) continue;
    std::array<double, model::kVenueCategoryCount> fractions{};
    for (size_t c = 0; c < fractions.size(); ++c) {
      fractions[c] = static_cast<double>(f.venue_counts[c]) /
                     static_cast<double>(total);
    }
    out.emplace_back(f.segment_id, fractions);
  }
  return out;
}

std::vector<std::string> feature_csv_columns() {
  std::vector<std::string> cols = {
      "segment_id", "n_photos",       "night_count",  "notnight_count",
      "male_users", "female_users",   "age_count",    "age_mean",
      "tag_total",  "walk_tag_count", "car_tag_count", "venue_total"};
  for (int c = 0; c < model::kVenueCategoryCount; ++c) {
    cols.push_back("venue_" + std::string(model::to_string(
                                  static_cast<model::VenueCategory>(c))));
  }
  return cols;
}

std::string features_to_csv(const std::vector<SegmentFeatures>& features) {
  std::vector<const SegmentFeatures*> sorted;
  sorted.reserve(features.size());
  for (const auto& f : features) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) {
              return a->segment_id < b->segment_id;
            });

  std::ostringstream out;
  const auto cols = feature_csv_columns();
  for (size_t i = 0; i < cols.size(); ++i) {
    if (i) out << ',';
    out << cols[i];
  }
  out << '\n';
  for (const auto* f : sorted) {
    out << csv_escape(f->segment_id) << ',' << f->n_photos << ','
        << f->night_count << ',' << f->notnight_count << ',' << f->male_users
        << ',' << f->female_users << ',' << f->ages.size() << ',';
    if (!f->ages.empty()) {
      const int64_t sum =
          std::accumulate(f->ages.begin(), f->ages.end(), int64_t{0});
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g",
                    static_cast<double>(sum) /
                        static_cast<double>(f->ages.size()));
      out << buf;
    }
    out << ',' << f->tag_total << ',' << f->walk_tag_count << ','
        << f->car_tag_count << ',' << f->venue_total();
    for (int64_t c : f->venue_counts) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

}  // namespace streetscore::features
