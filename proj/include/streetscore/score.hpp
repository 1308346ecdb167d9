#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streetscore/geo.hpp"
#include "streetscore/model.hpp"

namespace streetscore::score {

inline constexpr double kDefaultWalkSpeedMetersPerMinute = 80.0;
inline constexpr double kDefaultSnapToleranceMeters = 1.0;
inline constexpr double kMaxOriginSnapMeters = 100.0;

// Equal-weight mean of the eight category ratings. Throws ValidationError
// when any rating is missing or out of [0, 5].
double overall_walkability(const model::CategoryRatings& ratings);

struct NetworkEdge {
  int32_t u;            // node index at the first polyline vertex
  int32_t v;            // node index at the last polyline vertex
  double length;        // full polyline length, meters
  std::string segment_id;
  geo::Polyline line;   // oriented u -> v
};

// Undirected graph over snapped segment endpoints. Node ids are assigned by
// sorted coordinates, so construction does not depend on input order.
class StreetNetwork {
 public:
  StreetNetwork(std::vector<geo::PlanarPoint> nodes,
                std::vector<NetworkEdge> edges);

  const std::vector<geo::PlanarPoint>& nodes() const { return nodes_; }
  const std::vector<NetworkEdge>& edges() const { return edges_; }
  const std::vector<std::vector<int32_t>>& adjacency() const {
    return adjacency_;
  }

 private:
  std::vector<geo::PlanarPoint> nodes_;
  std::vector<NetworkEdge> edges_;
  std::vector<std::vector<int32_t>> adjacency_;  // node -> incident edge ids
};

// Segment endpoints within snap_tolerance merge into one node; each segment
// becomes one edge weighted by its polyline length. Segments must be
// projected (geometry present).
StreetNetwork build_network(const std::vector<model::StreetSegment>& segments,
                            double snap_tolerance_m = kDefaultSnapToleranceMeters);

// Shortest-path distance from a source node to every node (Dijkstra over
// edge lengths); unreachable nodes get +inf.
std::vector<double> node_distances(const StreetNetwork& net, int32_t source);

// Convex hull of every network point reachable on foot within
// minutes * speed meters of the origin, including partial edges up to the
// residual budget. The origin snaps to the nearest edge (within 100 m).
// Returns the hull vertices in counter-clockwise order (degenerate inputs
// give 1 or 2 vertices).
std::vector<geo::PlanarPoint> walkhood(
    const StreetNetwork& net, const geo::PlanarPoint& origin, double minutes,
    double speed_m_per_min = kDefaultWalkSpeedMetersPerMinute);

// GeoJSON Polygon feature for a hull, unprojected back to lon/lat.
std::string walkhood_to_geojson(const std::vector<geo::PlanarPoint>& hull,
                                const geo::GeoPoint& projection_origin);

// Andrew monotone chain; exposed for reuse in tests.
std::vector<geo::PlanarPoint> convex_hull(std::vector<geo::PlanarPoint> points);

}  // namespace streetscore::score
