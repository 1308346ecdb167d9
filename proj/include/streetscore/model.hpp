#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streetscore/geo.hpp"

namespace streetscore::model {

enum class Gender { male, female };

enum class NightClass { night, not_night, unclassified };

// Top-level venue categories. Closed set; aliases below map the long
// provider names onto it.
enum class VenueCategory {
  arts,
  college,
  food,
  nightlife,
  outdoors,
  residential,
  shopping,
  travel,
  work,
};

inline constexpr int kVenueCategoryCount = 9;

std::string_view to_string(VenueCategory c);

// Case-insensitive parse over category names and documented aliases
// ("Arts & Entertainment" -> arts, "Shops" -> shopping, ...).
std::optional<VenueCategory> parse_venue_category(std::string_view name);

// Eight street-rating categories, each in [0, 5]. NaN marks a missing
// value; a valid instance has all eight present.
struct CategoryRatings {
  std::array<double, 8> values;

  CategoryRatings();

  static const std::array<std::string_view, 8>& names();

  bool complete_and_in_range() const;
  bool operator==(const CategoryRatings&) const = default;
};

struct StreetSegment {
  std::string id;
  std::vector<geo::GeoPoint> raw_coords;
  std::optional<geo::Polyline> geometry;  // planar, set by projection
  std::optional<double> walkability;      // [1, 5]
  std::optional<double> safety;           // [0.5, 5]
  std::optional<CategoryRatings> ratings;
};

struct MachineTag {
  std::string label;
  double confidence = 0.0;  // [0, 1]
  bool operator==(const MachineTag&) const = default;
};

struct PhotoRecord {
  std::string id;
  geo::GeoPoint location;
  std::string owner_id;
  std::optional<Gender> gender;
  std::optional<int> age;  // [1, 130]
  std::vector<std::string> user_tags;
  std::vector<MachineTag> machine_tags;
  std::optional<int64_t> views;
  std::optional<int64_t> favorites;
  std::optional<int64_t> comments;
  bool operator==(const PhotoRecord&) const = default;
};

struct VenueRecord {
  std::string id;
  geo::GeoPoint location;
  VenueCategory category = VenueCategory::food;
  bool operator==(const VenueRecord&) const = default;
};

// GeoJSON FeatureCollection of LineString features. Throws ParseError on
// malformed JSON and ValidationError on duplicate ids, bad geometry, or
// out-of-range scores/ratings.
std::vector<StreetSegment> parse_streets(const std::string& geojson_text);

// JSON Lines, one photo per line. In lenient mode malformed lines are
// skipped and counted; in strict mode the first one aborts with the line
// number. Records come back in input order.
std::pair<std::vector<PhotoRecord>, size_t> parse_photos(std::istream& in,
                                                         bool strict = false);

std::pair<std::vector<VenueRecord>, size_t> parse_venues(std::istream& in,
                                                         bool strict = false);

// Night if a machine tag normalizing to "night" has confidence strictly
// above the threshold; NotNight if any other machine tag qualifies;
// Unclassified when no machine tag clears the bar.
NightClass classify_night(const PhotoRecord& photo, double threshold = 0.95);

// Lowercases ASCII and strips all whitespace, including common Unicode
// space characters, so "Street Light" and "streetlight" coincide.
std::string normalize_tag(std::string_view tag);

// Serialization (inverse of the parsers; used for synthetic fixtures and
// round-trip checks).
std::string to_jsonl(const PhotoRecord& photo);
std::string to_jsonl(const VenueRecord& venue);
std::string streets_to_geojson(const std::vector<StreetSegment>& segments);

}  // namespace streetscore::model
