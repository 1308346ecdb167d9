#include "streetscore/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "streetscore/errors.hpp"

namespace streetscore::score {

namespace {

// Arclength position of the point on `line` closest to p, along with the
// distance to it.
struct SnapResult {
  double distance = std::numeric_limits<double>::infinity();
  double arclength = 0.0;
  geo::PlanarPoint point;
};

SnapResult snap_to_polyline(const geo::PlanarPoint& p,
                            const geo::Polyline& line) {
  SnapResult best;
  const auto& v = line.vertices();
  double arc_base = 0.0;
  for (size_t i = 1; i < v.size(); ++i) {
    const auto& a = v[i - 1];
    const auto& b = v[i];
    const double abx = b.x - a.x;
    const double aby = b.y - a.y;
    const double len = std::hypot(abx, aby);
    double t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / (len * len);
    t = std::clamp(t, 0.0, 1.0);
    const geo::PlanarPoint q{a.x + t * abx, a.y + t * aby};
    const double d = std::hypot(p.x - q.x, p.y - q.y);
    if (d < best.distance) {
      best.distance = d;
      best.arclength = arc_base + t * len;
      best.point = q;
    }
    arc_base += len;
  }
  return best;
}

double cross(const geo::PlanarPoint& o, const geo::PlanarPoint& a,
             const geo::PlanarPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Collect the polyline points covered by arclength interval [lo, hi].
void collect_interval(const geo::Polyline& line, double lo, double hi,
                      std::vector<geo::PlanarPoint>& out) {
  if (hi < lo) return;
  out.push_back(geo::point_at_arclength(line, lo));
  out.push_back(geo::point_at_arclength(line, hi));
  const auto& v = line.vertices();
  double arc = 0.0;
  for (size_t i = 1; i + 1 < v.size(); ++i) {
    arc += std::hypot(v[i].x - v[i - 1].x, v[i].y - v[i - 1].y);
    if (arc >= lo && arc <= hi) out.push_back(v[i]);
  }
}

}  // namespace

double overall_walkability(const model::CategoryRatings& ratings) {
  for (size_t i = 0; i < ratings.values.size(); ++i) {
    const double v = ratings.values[i];
    if (!std::isfinite(v) || v < 0.0 || v > 5.0) {
      throw ValidationError("category rating '" +
                            std::string(model::CategoryRatings::names()[i]) +
                            "' missing or outside [0, 5]");
    }
  }
  // Summed in sorted order so the score does not depend on how the eight
  // ratings happen to be arranged.
  std::array<double, 8> sorted = ratings.values;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  return sum / static_cast<double>(sorted.size());
}

StreetNetwork::StreetNetwork(std::vector<geo::PlanarPoint> nodes,
                             std::vector<NetworkEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  adjacency_.assign(nodes_.size(), {});
  for (size_t e = 0; e < edges_.size(); ++e) {
    adjacency_[static_cast<size_t>(edges_[e].u)].push_back(
        static_cast<int32_t>(e));
    if (edges_[e].v != edges_[e].u) {
      adjacency_[static_cast<size_t>(edges_[e].v)].push_back(
          static_cast<int32_t>(e));
    }
  }
}

StreetNetwork build_network(const std::vector<model::StreetSegment>& segments,
                            double snap_tolerance_m) {
  if (snap_tolerance_m < 0.0) {
    throw ValidationError("snap tolerance must be >= 0");
  }
  struct Endpoint {
    geo::PlanarPoint p;
    size_t segment;
    bool is_last;
  };
  // Sort segments by id so node numbering and edge order are canonical.
  std::vector<const model::StreetSegment*> sorted;
  for (const auto& s : segments) {
    if (!s.geometry) {
      throw ValidationError("segment '" + s.id +
                            "' has no planar geometry; project it first");
    }
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  std::vector<Endpoint> endpoints;
  for (size_t i = 0; i < sorted.size(); ++i) {
    endpoints.push_back({sorted[i]->geometry->vertices().front(), i, false});
    endpoints.push_back({sorted[i]->geometry->vertices().back(), i, true});
  }
  // Greedy clustering in sorted coordinate order: a point within tolerance
  // of an existing node joins it, otherwise it founds a new node.
  std::vector<size_t> order(endpoints.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& pa = endpoints[a].p;
    const auto& pb = endpoints[b].p;
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    return a < b;
  });

  std::vector<geo::PlanarPoint> nodes;
  std::vector<int32_t> endpoint_node(endpoints.size(), -1);
  for (size_t oi : order) {
    const auto& p = endpoints[oi].p;
    int32_t found = -1;
    double found_dist = std::numeric_limits<double>::infinity();
    for (size_t ni = 0; ni < nodes.size(); ++ni) {
      const double d = std::hypot(nodes[ni].x - p.x, nodes[ni].y - p.y);
      if (d <= snap_tolerance_m && d < found_dist) {
        found = static_cast<int32_t>(ni);
        found_dist = d;
      }
    }
    if (found < 0) {
      found = static_cast<int32_t>(nodes.size());
      nodes.push_back(p);
    }
    endpoint_node[oi] = found;
  }

  std::vector<NetworkEdge> edges;
  for (size_t i = 0; i < sorted.size(); ++i) {
    edges.push_back({endpoint_node[2 * i], endpoint_node[2 * i + 1],
                     sorted[i]->geometry->length(), sorted[i]->id,
                     *sorted[i]->geometry});
  }
  return StreetNetwork(std::move(nodes), std::move(edges));
}

std::vector<double> node_distances(const StreetNetwork& net, int32_t source) {
  if (source < 0 || static_cast<size_t>(source) >= net.nodes().size()) {
    throw ValidationError("node_distances: source node out of range");
  }
  std::vector<double> dist(net.nodes().size(),
                           std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<size_t>(source)] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<size_t>(u)]) continue;
    for (int32_t e : net.adjacency()[static_cast<size_t>(u)]) {
      const auto& edge = net.edges()[static_cast<size_t>(e)];
      const int32_t w = edge.u == u ? edge.v : edge.u;
      const double nd = d + edge.length;
      if (nd < dist[static_cast<size_t>(w)]) {
        dist[static_cast<size_t>(w)] = nd;
        heap.push({nd, w});
      }
    }
  }
  return dist;
}

std::vector<geo::PlanarPoint> convex_hull(std::vector<geo::PlanarPoint> points) {
  std::sort(points.begin(), points.end(),
            [](const geo::PlanarPoint& a, const geo::PlanarPoint& b) {
              return a.x != b.x ? a.x < b.x : a.y < b.y;
            });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() <= 2) return points;

  std::vector<geo::PlanarPoint> hull(2 * points.size());
  size_t k = 0;
  for (const auto& p : points) {  // lower hull
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  const size_t lower = k + 1;
  for (auto it = points.rbegin() + 1; it != points.rend(); ++it) {  // upper
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    // Collinear input: keep the two extreme points.
    return {points.front(), points.back()};
  }
  return hull;
}

std::vector<geo::PlanarPoint> walkhood(const StreetNetwork& net,
                                       const geo::PlanarPoint& origin,
                                       double minutes, double speed_m_per_min) {
  if (!(minutes > 0.0)) throw ValidationError("walkhood: minutes must be > 0");
  if (!(speed_m_per_min > 0.0)) {
    throw ValidationError("walkhood: speed must be > 0");
  }
  if (net.edges().empty()) {
    throw ValidationError("walkhood: network has no edges");
  }

  // Snap the origin to the nearest edge (ties: lowest edge index).
  SnapResult snap;
  size_t snap_edge = 0;
  for (size_t e = 0; e < net.edges().size(); ++e) {
    const SnapResult s = snap_to_polyline(origin, net.edges()[e].line);
    if (s.distance < snap.distance) {
      snap = s;
      snap_edge = e;
    }
  }
  if (snap.distance > kMaxOriginSnapMeters) {
    throw ValidationError(
        "walkhood: origin is " + std::to_string(snap.distance) +
        " m from the nearest street edge (limit 100 m)");
  }

  const double budget = minutes * speed_m_per_min;
  const auto& edges = net.edges();
  const auto& origin_edge = edges[snap_edge];

  // Dijkstra seeded from both endpoints of the snapped edge.
  std::vector<double> dist(net.nodes().size(),
                           std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  auto seed = [&](int32_t node, double d) {
    if (d < dist[static_cast<size_t>(node)]) {
      dist[static_cast<size_t>(node)] = d;
      heap.push({d, node});
    }
  };
  seed(origin_edge.u, snap.arclength);
  seed(origin_edge.v, origin_edge.length - snap.arclength);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<size_t>(u)]) continue;
    for (int32_t e : net.adjacency()[static_cast<size_t>(u)]) {
      const auto& edge = edges[static_cast<size_t>(e)];
      const int32_t w = edge.u == u ? edge.v : edge.u;
      const double nd = d + edge.length;
      if (nd < dist[static_cast<size_t>(w)]) {
        dist[static_cast<size_t>(w)] = nd;
        heap.push({nd, w});
      }
    }
  }

  std::vector<geo::PlanarPoint> reachable;
  reachable.push_back(snap.point);
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    const double du = dist[static_cast<size_t>(edge.u)];
    const double dv = dist[static_cast<size_t>(edge.v)];
    if (du <= budget) {
      collect_interval(edge.line, 0.0, std::min(edge.length, budget - du),
                       reachable);
    }
    if (dv <= budget) {
      collect_interval(edge.line,
                       std::max(0.0, edge.length - (budget - dv)),
                       edge.length, reachable);
    }
    if (e == snap_edge) {
      // Direct coverage around the snap point, independent of endpoint
      // distances.
      collect_interval(edge.line, std::max(0.0, snap.arclength - budget),
                       std::min(edge.length, snap.arclength + budget),
                       reachable);
    }
  }
  return convex_hull(std::move(reachable));
}

std::string walkhood_to_geojson(const std::vector<geo::PlanarPoint>& hull,
                                const geo::GeoPoint& projection_origin) {
  nlohmann::ordered_json feature;
  feature["type"] = "Feature";
  feature["properties"] = nlohmann::ordered_json::object();
  nlohmann::ordered_json ring = nlohmann::ordered_json::array();
  for (const auto& p : hull) {
    const geo::GeoPoint g = geo::unproject(p, projection_origin);
    ring.push_back({g.lon, g.lat});
  }
  if (!hull.empty()) {
    const geo::GeoPoint g = geo::unproject(hull.front(), projection_origin);
    ring.push_back({g.lon, g.lat});  // close the ring
  }
  nlohmann::ordered_json coords = nlohmann::ordered_json::array();
  coords.push_back(std::move(ring));
  feature["geometry"] = {{"type", "Polygon"}, {"coordinates", std::move(coords)}};
  return feature.dump(2) + "\n";
}

}  // namespace streetscore::score
