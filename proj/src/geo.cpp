#include "streetscore/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "streetscore/errors.hpp"

namespace streetscore::geo {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
// Equirectangular approximation degrades toward the poles.
constexpr double kMaxProjectionLat = 85.0;

}  // namespace

void validate_coordinates(const GeoPoint& p) {
  if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) {
    throw ValidationError("invalid coordinate: lon/lat must be finite");
  }
  if (p.lat < -90.0 || p.lat > 90.0) {
    throw ValidationError("invalid coordinate: lat " + std::to_string(p.lat) +
                          " outside [-90, 90]");
  }
  if (p.lon < -180.0 || p.lon > 180.0) {
    throw ValidationError("invalid coordinate: lon " + std::to_string(p.lon) +
                          " outside [-180, 180]");
  }
}

PlanarPoint project(const GeoPoint& p, const GeoPoint& origin) {
  validate_coordinates(p);
  validate_coordinates(origin);
  if (std::abs(p.lat) >= kMaxProjectionLat ||
      std::abs(origin.lat) >= kMaxProjectionLat) {
    throw ValidationError("projection domain is |lat| < 85 degrees");
  }
  const double cos_lat0 = std::cos(origin.lat * kDegToRad);
  return PlanarPoint{
      kEarthRadiusMeters * (p.lon - origin.lon) * kDegToRad * cos_lat0,
      kEarthRadiusMeters * (p.lat - origin.lat) * kDegToRad};
}

GeoPoint unproject(const PlanarPoint& p, const GeoPoint& origin) {
  validate_coordinates(origin);
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw ValidationError("invalid planar point: x/y must be finite");
  }
  if (std::abs(origin.lat) >= kMaxProjectionLat) {
    throw ValidationError("projection domain is |lat| < 85 degrees");
  }
  const double cos_lat0 = std::cos(origin.lat * kDegToRad);
  return GeoPoint{origin.lon + p.x / (kEarthRadiusMeters * kDegToRad * cos_lat0),
                  origin.lat + p.y / (kEarthRadiusMeters * kDegToRad)};
}

Polyline::Polyline(std::vector<PlanarPoint> vertices)
    : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) {
    throw ValidationError("polyline needs at least 2 vertices");
  }
  for (const auto& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw ValidationError("polyline vertex must be finite");
    }
  }
  for (size_t i = 1; i < vertices_.size(); ++i) {
    if (vertices_[i] == vertices_[i - 1]) {
      throw ValidationError("polyline has repeated consecutive vertices");
    }
    length_ += std::hypot(vertices_[i].x - vertices_[i - 1].x,
                          vertices_[i].y - vertices_[i - 1].y);
  }
  if (!(length_ > 0.0)) {
    throw ValidationError("polyline length must be positive");
  }
}

double point_to_segment_distance(const PlanarPoint& p, const PlanarPoint& a,
                                 const PlanarPoint& b) {
  const double abx = b.x - a.x;
  const double aby = b.y - a.y;
  const double len2 = abx * abx + aby * aby;
  if (len2 == 0.0) {
    return std::hypot(p.x - a.x, p.y - a.y);
  }
  double t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * abx), p.y - (a.y + t * aby));
}

PlanarPoint point_at_arclength(const Polyline& line, double s) {
  const auto& v = line.vertices();
  if (s <= 0.0) return v.front();
  double remaining = s;
  for (size_t i = 1; i < v.size(); ++i) {
    const double len = std::hypot(v[i].x - v[i - 1].x, v[i].y - v[i - 1].y);
    if (remaining <= len) {
      const double t = remaining / len;
      return {v[i - 1].x + t * (v[i].x - v[i - 1].x),
              v[i - 1].y + t * (v[i].y - v[i - 1].y)};
    }
    remaining -= len;
  }
  return v.back();
}

PlanarPoint tangent_at_arclength(const Polyline& line, double s) {
  const auto& v = line.vertices();
  double remaining = std::max(0.0, s);
  for (size_t i = 1; i < v.size(); ++i) {
    const double len = std::hypot(v[i].x - v[i - 1].x, v[i].y - v[i - 1].y);
    if (remaining <= len || i + 1 == v.size()) {
      return {(v[i].x - v[i - 1].x) / len, (v[i].y - v[i - 1].y) / len};
    }
    remaining -= len;
  }
  return {1.0, 0.0};
}

double point_to_polyline_distance(const PlanarPoint& p, const Polyline& line) {
  const auto& v = line.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < v.size(); ++i) {
    best = std::min(best, point_to_segment_distance(p, v[i - 1], v[i]));
  }
  return best;
}

bool buffer_contains(const Polyline& line, const PlanarPoint& p,
                     double radius_m) {
  if (!(radius_m > 0.0)) {
    throw ValidationError("buffer radius must be > 0");
  }
  return point_to_polyline_distance(p, line) <= radius_m;
}

SpatialIndex::SpatialIndex(const std::vector<IndexedSegment>& segments,
                           double cell_size_m)
    : cell_size_(cell_size_m), segment_count_(segments.size()) {
  if (segments.empty()) {
    throw ValidationError("spatial index requires at least one segment");
  }
  if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m)) {
    throw ValidationError("spatial index cell size must be > 0");
  }

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  for (const auto& seg : segments) {
    for (const auto& v : seg.line.vertices()) {
      min_x = std::min(min_x, v.x);
      min_y = std::min(min_y, v.y);
      max_x = std::max(max_x, v.x);
      max_y = std::max(max_y, v.y);
    }
  }
  // Grid covers the global bounding box inflated by one cell, so any point
  // within cell_size of a segment lands inside the grid.
  min_x_ = min_x - cell_size_;
  min_y_ = min_y - cell_size_;
  nx_ = static_cast<int>(std::floor((max_x + cell_size_ - min_x_) / cell_size_)) + 1;
  ny_ = static_cast<int>(std::floor((max_y + cell_size_ - min_y_) / cell_size_)) + 1;
  if (static_cast<int64_t>(nx_) * ny_ > 100'000'000) {
    throw ValidationError("spatial index grid too large; increase cell size");
  }
  buckets_.assign(static_cast<size_t>(nx_) * ny_, {});

  for (size_t i = 0; i < segments.size(); ++i) {
    double sx0 = std::numeric_limits<double>::infinity();
    double sy0 = std::numeric_limits<double>::infinity();
    double sx1 = -std::numeric_limits<double>::infinity();
    double sy1 = -std::numeric_limits<double>::infinity();
    for (const auto& v : segments[i].line.vertices()) {
      sx0 = std::min(sx0, v.x);
      sy0 = std::min(sy0, v.y);
      sx1 = std::max(sx1, v.x);
      sy1 = std::max(sy1, v.y);
    }
    const int cx0 = std::max(
        0, static_cast<int>(std::floor((sx0 - cell_size_ - min_x_) / cell_size_)));
    const int cy0 = std::max(
        0, static_cast<int>(std::floor((sy0 - cell_size_ - min_y_) / cell_size_)));
    const int cx1 = std::min(
        nx_ - 1,
        static_cast<int>(std::floor((sx1 + cell_size_ - min_x_) / cell_size_)));
    const int cy1 = std::min(
        ny_ - 1,
        static_cast<int>(std::floor((sy1 + cell_size_ - min_y_) / cell_size_)));
    for (int cy = cy0; cy <= cy1; ++cy) {
      for (int cx = cx0; cx <= cx1; ++cx) {
        buckets_[static_cast<size_t>(cy) * nx_ + cx].push_back(
            static_cast<int32_t>(i));
      }
    }
  }
}

size_t SpatialIndex::cell_of(const PlanarPoint& p, int& cx, int& cy) const {
  cx = static_cast<int>(std::floor((p.x - min_x_) / cell_size_));
  cy = static_cast<int>(std::floor((p.y - min_y_) / cell_size_));
  if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) {
    return static_cast<size_t>(-1);
  }
  return static_cast<size_t>(cy) * nx_ + cx;
}

void SpatialIndex::query_candidates(const PlanarPoint& p,
                                    std::vector<int32_t>& out) const {
  out.clear();
  int cx = 0, cy = 0;
  const size_t cell = cell_of(p, cx, cy);
  if (cell == static_cast<size_t>(-1)) {
    return;  // outside the inflated extent: nothing can be within cell_size
  }
  out = buckets_[cell];
}

std::vector<int32_t> SpatialIndex::query_candidates(const PlanarPoint& p) const {
  std::vector<int32_t> out;
  query_candidates(p, out);
  return out;
}

size_t SpatialIndex::bucket_count(int32_t segment_index) const {
  size_t n = 0;
  for (const auto& bucket : buckets_) {
    n += static_cast<size_t>(
        std::count(bucket.begin(), bucket.end(), segment_index));
  }
  return n;
}

SpatialIndex build_index(const std::vector<IndexedSegment>& segments,
                         double cell_size_m) {
  return SpatialIndex(segments, cell_size_m);
}

std::vector<int32_t> match_point_indices(const SpatialIndex& index,
                                         const std::vector<IndexedSegment>& segments,
                                         const PlanarPoint& p, double radius_m) {
  if (!(radius_m > 0.0)) {
    throw ValidationError("match radius must be > 0");
  }
  if (radius_m > index.cell_size()) {
    throw ValidationError("query radius exceeds index cell size");
  }
  std::vector<int32_t> out;
  std::vector<int32_t> candidates;
  index.query_candidates(p, candidates);
  for (int32_t i : candidates) {
    if (point_to_polyline_distance(p, segments[static_cast<size_t>(i)].line) <=
        radius_m) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::string> match_point_all(const SpatialIndex& index,
                                         const std::vector<IndexedSegment>& segments,
                                         const PlanarPoint& p, double radius_m) {
  std::vector<std::string> ids;
  for (int32_t i : match_point_indices(index, segments, p, radius_m)) {
    ids.push_back(segments[static_cast<size_t>(i)].id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

int32_t SpatialIndex::nearest(const std::vector<IndexedSegment>& segments,
                              const PlanarPoint& p) const {
  int cx = static_cast<int>(std::floor((p.x - min_x_) / cell_size_));
  int cy = static_cast<int>(std::floor((p.y - min_y_) / cell_size_));
  cx = std::clamp(cx, 0, nx_ - 1);
  cy = std::clamp(cy, 0, ny_ - 1);

  int32_t best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<bool> seen(segment_count_, false);
  const int max_ring = std::max(nx_, ny_);

  auto visit_cell = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= nx_ || y >= ny_) return;
    for (int32_t i : buckets_[static_cast<size_t>(y) * nx_ + x]) {
      if (seen[static_cast<size_t>(i)]) continue;
      seen[static_cast<size_t>(i)] = true;
      const double d =
          point_to_polyline_distance(p, segments[static_cast<size_t>(i)].line);
      if (d < best_dist ||
          (d == best_dist && best >= 0 &&
           segments[static_cast<size_t>(i)].id <
               segments[static_cast<size_t>(best)].id)) {
        best_dist = d;
        best = i;
      }
    }
  };

  for (int ring = 0; ring <= max_ring; ++ring) {
    // A segment at true distance d is registered in some cell within
    // d/cell_size + 1 rings, so every unseen segment now has
    // d >= (ring - 1) * cell_size. Strict comparison keeps exact ties
    // eligible for the id tie-break.
    if (best >= 0 && best_dist < (static_cast<double>(ring) - 1.0) * cell_size_) {
      break;
    }
    if (ring == 0) {
      visit_cell(cx, cy);
      continue;
    }
    for (int x = cx - ring; x <= cx + ring; ++x) {
      visit_cell(x, cy - ring);
      visit_cell(x, cy + ring);
    }
    for (int y = cy - ring + 1; y <= cy + ring - 1; ++y) {
      visit_cell(cx - ring, y);
      visit_cell(cx + ring, y);
    }
  }
  return best;
}

int32_t nearest_segment_index(const SpatialIndex& index,
                              const std::vector<IndexedSegment>& segments,
                              const PlanarPoint& p) {
  if (segments.empty()) {
    throw ValidationError("nearest_segment requires at least one segment");
  }
  return index.nearest(segments, p);
}

std::string nearest_segment(const SpatialIndex& index,
                            const std::vector<IndexedSegment>& segments,
                            const PlanarPoint& p) {
  const int32_t i = nearest_segment_index(index, segments, p);
  return segments[static_cast<size_t>(i)].id;
}

}  // namespace streetscore::geo
