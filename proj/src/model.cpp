#include "streetscore/model.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "streetscore/errors.hpp"

namespace streetscore::model {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::unordered_map<std::string, VenueCategory>& category_aliases() {
  static const std::unordered_map<std::string, VenueCategory> aliases = {
      {"arts", VenueCategory::arts},
      {"arts & entertainment", VenueCategory::arts},
      {"college", VenueCategory::college},
      {"college & education", VenueCategory::college},
      {"college & university", VenueCategory::college},
      {"food", VenueCategory::food},
      {"nightlife", VenueCategory::nightlife},
      {"nightlife spot", VenueCategory::nightlife},
      {"outdoors", VenueCategory::outdoors},
      {"outdoors & recreation", VenueCategory::outdoors},
      {"residential", VenueCategory::residential},
      {"shopping", VenueCategory::shopping},
      {"shops", VenueCategory::shopping},
      {"shop & service", VenueCategory::shopping},
      {"travel", VenueCategory::travel},
      {"travel & transport", VenueCategory::travel},
      {"work", VenueCategory::work},
      {"professional & other places", VenueCategory::work},
  };
  return aliases;
}

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
std::string canonical_category_key(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

double require_number(const json& j, const char* field, const char* what) {
  if (!j.is_number()) {
    throw ValidationError(std::string(what) + ": field '" + field +
                          "' must be a number");
  }
  return j.get<double>();
}

std::string require_string(const json& j, const char* field,
                           const char* what) {
  if (!j.is_string()) {
    throw ValidationError(std::string(what) + ": field '" + field +
                          "' must be a string");
  }
  return j.get<std::string>();
}

int64_t require_nonneg_int(const json& j, const char* field,
                           const char* what) {
  if (!j.is_number_integer() || j.get<int64_t>() < 0) {
    throw ValidationError(std::string(what) + ": field '" + field +
                          "' must be a non-negative integer");
  }
  return j.get<int64_t>();
}

geo::GeoPoint parse_location(const json& obj, const char* what) {
  if (!obj.contains("lon") || !obj.contains("lat")) {
    throw ValidationError(std::string(what) + ": missing lon/lat");
  }
  geo::GeoPoint p{require_number(obj.at("lon"), "lon", what),
                  require_number(obj.at("lat"), "lat", what)};
  geo::validate_coordinates(p);
  return p;
}

PhotoRecord photo_from_json(const json& obj) {
  static const char* what = "photo";
  if (!obj.is_object()) throw ValidationError("photo: line is not an object");
  PhotoRecord rec;
  if (!obj.contains("id") || !obj.contains("owner_id")) {
    throw ValidationError("photo: missing id/owner_id");
  }
  rec.id = require_string(obj.at("id"), "id", what);
  rec.owner_id = require_string(obj.at("owner_id"), "owner_id", what);
  if (rec.id.empty() || rec.owner_id.empty()) {
    throw ValidationError("photo: id/owner_id must be non-empty");
  }
  rec.location = parse_location(obj, what);
  if (obj.contains("gender")) {
    const std::string g = require_string(obj.at("gender"), "gender", what);
    if (g == "male") {
      rec.gender = Gender::male;
    } else if (g == "female") {
      rec.gender = Gender::female;
    } else {
      throw ValidationError("photo: gender must be 'male' or 'female'");
    }
  }
  if (obj.contains("age")) {
    if (!obj.at("age").is_number_integer()) {
      throw ValidationError("photo: age must be an integer");
    }
    const int64_t age = obj.at("age").get<int64_t>();
    if (age < 1 || age > 130) {
      throw ValidationError("photo: age outside [1, 130]");
    }
    rec.age = static_cast<int>(age);
  }
  if (obj.contains("user_tags")) {
    if (!obj.at("user_tags").is_array()) {
      throw ValidationError("photo: user_tags must be an array");
    }
    for (const auto& t : obj.at("user_tags")) {
      rec.user_tags.push_back(require_string(t, "user_tags[]", what));
    }
  }
  if (obj.contains("machine_tags")) {
    if (!obj.at("machine_tags").is_array()) {
      throw ValidationError("photo: machine_tags must be an array");
    }
    for (const auto& t : obj.at("machine_tags")) {
      if (!t.is_object() || !t.contains("label") || !t.contains("confidence")) {
        throw ValidationError("photo: machine tag needs label and confidence");
      }
      MachineTag tag;
      tag.label = require_string(t.at("label"), "label", what);
      tag.confidence = require_number(t.at("confidence"), "confidence", what);
      if (!(tag.confidence >= 0.0 && tag.confidence <= 1.0)) {
        throw ValidationError("photo: machine tag confidence outside [0, 1]");
      }
      rec.machine_tags.push_back(std::move(tag));
    }
  }
  if (obj.contains("views")) {
    rec.views = require_nonneg_int(obj.at("views"), "views", what);
  }
  if (obj.contains("favorites")) {
    rec.favorites = require_nonneg_int(obj.at("favorites"), "favorites", what);
  }
  if (obj.contains("comments")) {
    rec.comments = require_nonneg_int(obj.at("comments"), "comments", what);
  }
  return rec;
}

VenueRecord venue_from_json(const json& obj) {
  static const char* what = "venue";
  if (!obj.is_object()) throw ValidationError("venue: line is not an object");
  if (!obj.contains("id") || !obj.contains("category")) {
    throw ValidationError("venue: missing id/category");
  }
  VenueRecord rec;
  rec.id = require_string(obj.at("id"), "id", what);
  if (rec.id.empty()) throw ValidationError("venue: id must be non-empty");
  rec.location = parse_location(obj, what);
  const std::string cat = require_string(obj.at("category"), "category", what);
  const auto parsed = parse_venue_category(cat);
  if (!parsed) {
    throw ValidationError("venue: unknown category '" + cat + "'");
  }
  rec.category = *parsed;
  return rec;
}

// Shared driver for the JSON Lines parsers.
template <typename Record, typename FromJson>
std::pair<std::vector<Record>, size_t> parse_jsonl(std::istream& in,
                                                   bool strict,
                                                   const char* what,
                                                   FromJson from_json) {
  std::vector<Record> records;
  std::unordered_set<std::string> seen_ids;
  size_t skipped = 0;
  size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      Record rec = from_json(obj);
      if (!seen_ids.insert(rec.id).second) {
        throw ValidationError(std::string(what) + ": duplicate id '" + rec.id +
                              "'");
      }
      records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      if (strict) {
        throw ParseError(std::string(what) + " line " +
                         std::to_string(line_no) + ": " + e.what());
      }
      ++skipped;
    }
  }
  return {std::move(records), skipped};
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Unicode code points with the White_Space property.
bool is_unicode_space(uint32_t cp) {
  switch (cp) {
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

void location_json_fields(const geo::GeoPoint& p, ordered_json& obj) {
  obj["lon"] = p.lon;
  obj["lat"] = p.lat;
}

}  // namespace

std::string_view to_string(VenueCategory c) {
  switch (c) {
    case VenueCategory::arts: return "arts";
    case VenueCategory::college: return "college";
    case VenueCategory::food: return "food";
    case VenueCategory::nightlife: return "nightlife";
    case VenueCategory::outdoors: return "outdoors";
    case VenueCategory::residential: return "residential";
    case VenueCategory::shopping: return "shopping";
    case VenueCategory::travel: return "travel";
    case VenueCategory::work: return "work";
  }
  return "unknown";
}

std::optional<VenueCategory> parse_venue_category(std::string_view name) {
  const auto& aliases = category_aliases();
  const auto it = aliases.find(canonical_category_key(name));
  if (it == aliases.end()) return std::nullopt;
  return it->second;
}

CategoryRatings::CategoryRatings() {
  values.fill(std::numeric_limits<double>::quiet_NaN());
}

const std::array<std::string_view, 8>& CategoryRatings::names() {
  static const std::array<std::string_view, 8> names = {
      "road_safety",      "easy_to_cross",  "sidewalks",
      "hilliness",        "navigation",     "safety_from_crime",
      "smart_beautiful",  "fun_relaxing"};
  return names;
}

bool CategoryRatings::complete_and_in_range() const {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > 5.0) return false;
  }
  return true;
}

std::vector<StreetSegment> parse_streets(const std::string& geojson_text) {
  json doc;
  try {
    doc = json::parse(geojson_text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("streets: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc.at("features").is_array()) {
    throw ValidationError("streets: expected a GeoJSON FeatureCollection");
  }

  std::vector<StreetSegment> segments;
  std::unordered_set<std::string> seen_ids;
  for (const auto& feature : doc.at("features")) {
    if (!feature.is_object() || feature.value("type", "") != "Feature") {
      throw ValidationError("streets: feature entries must be Features");
    }
    const auto& geom = feature.at("geometry");
    if (geom.value("type", "") != "LineString") {
      throw ValidationError("streets: geometry must be a LineString");
    }
    const auto& coords = geom.at("coordinates");
    if (!coords.is_array() || coords.size() < 2) {
      throw ValidationError(
          "streets: LineString needs at least 2 coordinates");
    }

    StreetSegment seg;
    const auto& props = feature.at("properties");
    if (!props.is_object() || !props.contains("id")) {
      throw ValidationError("streets: feature is missing property 'id'");
    }
    seg.id = require_string(props.at("id"), "id", "streets");
    if (seg.id.empty()) {
      throw ValidationError("streets: id must be non-empty");
    }
    if (!seen_ids.insert(seg.id).second) {
      throw ValidationError("streets: duplicate key: segment id '" + seg.id +
                            "'");
    }

    for (const auto& c : coords) {
      if (!c.is_array() || c.size() < 2 || !c[0].is_number() ||
          !c[1].is_number()) {
        throw ValidationError("streets: coordinates must be [lon, lat] pairs");
      }
      geo::GeoPoint p{c[0].get<double>(), c[1].get<double>()};
      geo::validate_coordinates(p);
      if (!seg.raw_coords.empty() && seg.raw_coords.back() == p) {
        throw ValidationError("streets: segment '" + seg.id +
                              "' repeats consecutive coordinates");
      }
      seg.raw_coords.push_back(p);
    }

    if (props.contains("walkability")) {
      const double w =
          require_number(props.at("walkability"), "walkability", "streets");
      if (w < 1.0 || w > 5.0) {
        throw ValidationError("streets: walkability outside [1, 5] on '" +
                              seg.id + "'");
      }
      seg.walkability = w;
    }
    if (props.contains("safety")) {
      const double s = require_number(props.at("safety"), "safety", "streets");
      if (s < 0.5 || s > 5.0) {
        throw ValidationError("streets: safety outside [0.5, 5] on '" +
                              seg.id + "'");
      }
      seg.safety = s;
    }
    if (props.contains("ratings")) {
      const auto& ratings = props.at("ratings");
      if (!ratings.is_object()) {
        throw ValidationError("streets: ratings must be an object on '" +
                              seg.id + "'");
      }
      CategoryRatings r;
      for (size_t i = 0; i < CategoryRatings::names().size(); ++i) {
        const std::string key(CategoryRatings::names()[i]);
        if (!ratings.contains(key)) {
          throw ValidationError("streets: ratings on '" + seg.id +
                                "' missing '" + key + "'");
        }
        const double v =
            require_number(ratings.at(key), key.c_str(), "streets");
        if (v < 0.0 || v > 5.0) {
          throw ValidationError("streets: rating '" + key +
                                "' outside [0, 5] on '" + seg.id + "'");
        }
        r.values[i] = v;
      }
      seg.ratings = r;
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::pair<std::vector<PhotoRecord>, size_t> parse_photos(std::istream& in,
                                                         bool strict) {
  return parse_jsonl<PhotoRecord>(in, strict, "photos", photo_from_json);
}

std::pair<std::vector<VenueRecord>, size_t> parse_venues(std::istream& in,
                                                         bool strict) {
  return parse_jsonl<VenueRecord>(in, strict, "venues", venue_from_json);
}

NightClass classify_night(const PhotoRecord& photo, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ValidationError("night confidence threshold must be in (0, 1]");
  }
  bool any_confident = false;
  for (const auto& tag : photo.machine_tags) {
    if (tag.confidence > threshold) {
      if (normalize_tag(tag.label) == "night") {
        return NightClass::night;
      }
      any_confident = true;
    }
  }
  return any_confident ? NightClass::not_night : NightClass::unclassified;
}

std::string normalize_tag(std::string_view tag) {
  std::string out;
  out.reserve(tag.size());
  size_t i = 0;
  while (i < tag.size()) {
    const unsigned char c = static_cast<unsigned char>(tag[i]);
    if (c < 0x80) {
      if (!is_ascii_space(c)) {
        out.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      }
      ++i;
      continue;
    }
    // Decode one UTF-8 sequence; pass malformed bytes through untouched.
    uint32_t cp = 0;
    size_t len = 0;
    if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      len = 4;
    } else {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    if (i + len > tag.size()) {
      out.append(tag.substr(i));
      break;
    }
    bool valid = true;
    for (size_t k = 1; k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(tag[i + k]);
      if ((cc & 0xC0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!valid) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    if (!is_unicode_space(cp)) {
      out.append(tag.substr(i, len));
    }
    i += len;
  }
  return out;
}

std::string to_jsonl(const PhotoRecord& photo) {
  ordered_json obj;
  obj["id"] = photo.id;
  location_json_fields(photo.location, obj);
  obj["owner_id"] = photo.owner_id;
  if (photo.gender) {
    obj["gender"] = *photo.gender == Gender::male ? "male" : "female";
  }
  if (photo.age) obj["age"] = *photo.age;
  if (!photo.user_tags.empty()) obj["user_tags"] = photo.user_tags;
  if (!photo.machine_tags.empty()) {
    ordered_json tags = ordered_json::array();
    for (const auto& t : photo.machine_tags) {
      tags.push_back({{"label", t.label}, {"confidence", t.confidence}});
    }
    obj["machine_tags"] = std::move(tags);
  }
  if (photo.views) obj["views"] = *photo.views;
  if (photo.favorites) obj["favorites"] = *photo.favorites;
  if (photo.comments) obj["comments"] = *photo.comments;
  return obj.dump();
}

std::string to_jsonl(const VenueRecord& venue) {
  ordered_json obj;
  obj["id"] = venue.id;
  location_json_fields(venue.location, obj);
  obj["category"] = std::string(to_string(venue.category));
  return obj.dump();
}

std::string streets_to_geojson(const std::vector<StreetSegment>& segments) {
  ordered_json doc;
  doc["type"] = "FeatureCollection";
  ordered_json features = ordered_json::array();
  for (const auto& seg : segments) {
    ordered_json f;
    f["type"] = "Feature";
    ordered_json props;
    props["id"] = seg.id;
    if (seg.walkability) props["walkability"] = *seg.walkability;
    if (seg.safety) props["safety"] = *seg.safety;
    if (seg.ratings) {
      ordered_json r;
      for (size_t i = 0; i < CategoryRatings::names().size(); ++i) {
        r[std::string(CategoryRatings::names()[i])] = seg.ratings->values[i];
      }
      props["ratings"] = std::move(r);
    }
    f["properties"] = std::move(props);
    ordered_json coords = ordered_json::array();
    for (const auto& p : seg.raw_coords) {
      coords.push_back({p.lon, p.lat});
    }
    f["geometry"] = {{"type", "LineString"}, {"coordinates", std::move(coords)}};
    features.push_back(std::move(f));
  }
  doc["features"] = std::move(features);
  return doc.dump(2) + "\n";
}

}  // namespace streetscore::model
