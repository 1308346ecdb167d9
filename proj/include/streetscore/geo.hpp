#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace streetscore::geo {

// Mean Earth radius (IUGG R1) used by the local equirectangular projection.
inline constexpr double kEarthRadiusMeters = 6'371'008.8;
inline constexpr double kDefaultBufferRadiusMeters = 22.5;

struct GeoPoint {
  double lon = 0.0;  // degrees, [-180, 180]
  double lat = 0.0;  // degrees, [-90, 90]
  bool operator==(const GeoPoint&) const = default;
};

struct PlanarPoint {
  double x = 0.0;  // meters east of projection origin
  double y = 0.0;  // meters north of projection origin
  bool operator==(const PlanarPoint&) const = default;
};

// Throws ValidationError on non-finite or out-of-range coordinates.
void validate_coordinates(const GeoPoint& p);

// Local equirectangular projection about `origin`. Valid for |lat| < 85.
PlanarPoint project(const GeoPoint& p, const GeoPoint& origin);

// Exact inverse of project() for the same origin.
GeoPoint unproject(const PlanarPoint& p, const GeoPoint& origin);

// Planar polyline with at least two vertices, no repeated consecutive
// vertices, and positive total length.
class Polyline {
 public:
  explicit Polyline(std::vector<PlanarPoint> vertices);

  const std::vector<PlanarPoint>& vertices() const { return vertices_; }
  double length() const { return length_; }

  bool operator==(const Polyline&) const = default;

 private:
  std::vector<PlanarPoint> vertices_;
  double length_ = 0.0;
};

double point_to_segment_distance(const PlanarPoint& p, const PlanarPoint& a,
                                 const PlanarPoint& b);

// Point at arclength s along the polyline, clamped to [0, length].
PlanarPoint point_at_arclength(const Polyline& line, double s);

// Unit tangent of the piece containing arclength s.
PlanarPoint tangent_at_arclength(const Polyline& line, double s);

// Minimum Euclidean distance from p to any point on the polyline.
double point_to_polyline_distance(const PlanarPoint& p, const Polyline& line);

// Closed-boundary test: distance <= radius counts as inside.
bool buffer_contains(const Polyline& line, const PlanarPoint& p,
                     double radius_m = kDefaultBufferRadiusMeters);

struct IndexedSegment {
  std::string id;
  Polyline line;
};

// Uniform-grid spatial index over segment polylines. Each segment is
// registered in every cell overlapped by its bounding box inflated by one
// cell size, so a single-cell lookup yields a candidate superset for any
// query radius <= cell_size.
class SpatialIndex {
 public:
  SpatialIndex(const std::vector<IndexedSegment>& segments,
               double cell_size_m);

  double cell_size() const { return cell_size_; }
  size_t segment_count() const { return segment_count_; }

  // Candidate segment indices for points within cell_size of p.
  // Superset of the true matches; may contain false positives.
  void query_candidates(const PlanarPoint& p,
                        std::vector<int32_t>& out) const;
  std::vector<int32_t> query_candidates(const PlanarPoint& p) const;

  // Number of cells a given segment is registered in (test introspection).
  size_t bucket_count(int32_t segment_index) const;

  int32_t nearest(const std::vector<IndexedSegment>& segments,
                  const PlanarPoint& p) const;

 private:
  friend int32_t nearest_segment_index(const SpatialIndex&,
                                       const std::vector<IndexedSegment>&,
                                       const PlanarPoint&);

  size_t cell_of(const PlanarPoint& p, int& cx, int& cy) const;

  double cell_size_ = 0.0;
  double min_x_ = 0.0, min_y_ = 0.0;
  int nx_ = 0, ny_ = 0;
  size_t segment_count_ = 0;
  std::vector<std::vector<int32_t>> buckets_;
};

SpatialIndex build_index(const std::vector<IndexedSegment>& segments,
                         double cell_size_m);

// Indices of all segments whose buffer of `radius_m` contains p.
// Exact: candidates from the grid are verified against the true distance.
std::vector<int32_t> match_point_indices(const SpatialIndex& index,
                                         const std::vector<IndexedSegment>& segments,
                                         const PlanarPoint& p, double radius_m);

// Same as match_point_indices but returns segment ids, sorted.
std::vector<std::string> match_point_all(const SpatialIndex& index,
                                         const std::vector<IndexedSegment>& segments,
                                         const PlanarPoint& p, double radius_m);

// Index of the segment minimizing point_to_polyline_distance; ties broken
// by the lexicographically smallest id.
int32_t nearest_segment_index(const SpatialIndex& index,
                              const std::vector<IndexedSegment>& segments,
                              const PlanarPoint& p);

std::string nearest_segment(const SpatialIndex& index,
                            const std::vector<IndexedSegment>& segments,
                            const PlanarPoint& p);

}  // namespace streetscore::geo
