#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "streetscore/errors.hpp"
#include "streetscore/score.hpp"
#include "streetscore/synth.hpp"

using namespace streetscore;
using geo::PlanarPoint;

namespace {

model::CategoryRatings ratings_of(std::initializer_list<double> values) {
  model::CategoryRatings r;
  size_t i = 0;
  for (double v : values) r.values[i++] = v;
  return r;
}

model::StreetSegment planar_segment(const std::string& id,
                                    std::vector<PlanarPoint> pts) {
  model::StreetSegment s;
  s.id = id;
  s.raw_coords = {{-0.12, 51.5}, {-0.121, 51.5}};  // placeholder lon/lat
  s.geometry = geo::Polyline(std::move(pts));
  return s;
}

double dist(const PlanarPoint& a, const PlanarPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Containment in a convex CCW hull (degenerate hulls handled), tolerance in
// meters.
bool hull_contains(const std::vector<PlanarPoint>& hull, const PlanarPoint& p,
                   double tol) {
  if (hull.empty()) return false;
  if (hull.size() == 1) return dist(hull[0], p) <= tol;
  if (hull.size() == 2) {
    return geo::point_to_segment_distance(p, hull[0], hull[1]) <= tol;
  }
  for (size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross < -tol * dist(a, b)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("overall_walkability is the equal-weight mean") {
  CHECK(score::overall_walkability(
            ratings_of({3, 3, 3, 3, 3, 3, 3, 3})) == doctest::Approx(3.0));
  CHECK(score::overall_walkability(
            ratings_of({1, 2, 3, 4, 5, 1, 2, 2})) == doctest::Approx(2.5));
}

TEST_CASE("overall_walkability validates its ratings") {
  model::CategoryRatings missing;  // all NaN by default
  CHECK_THROWS_AS(score::overall_walkability(missing), ValidationError);
  auto one_absent = ratings_of({1, 2, 3, 4, 5, 1, 2, 2});
  one_absent.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(score::overall_walkability(one_absent), ValidationError);
  CHECK_THROWS_AS(score::overall_walkability(
                      ratings_of({6, 2, 3, 4, 5, 1, 2, 2})),
                  ValidationError);
}

TEST_CASE("overall_walkability: permutation-invariant and bounded") {
  synth::Rng rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    model::CategoryRatings r;
    for (auto& v : r.values) v = rng.uniform(0.0, 5.0);
    const double base = score::overall_walkability(r);

    model::CategoryRatings shuffled = r;
    for (size_t i = shuffled.values.size(); i > 1; --i) {
      std::swap(shuffled.values[i - 1],
                shuffled.values[static_cast<size_t>(
                    rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }
    CHECK(score::overall_walkability(shuffled) == base);  // exact

    const double lo = *std::min_element(r.values.begin(), r.values.end());
    const double hi = *std::max_element(r.values.begin(), r.values.end());
    CHECK(base >= lo);
    CHECK(base <= hi);
  }
}

TEST_CASE("build_network snaps endpoints within tolerance") {
  const std::vector<model::StreetSegment> shared = {
      planar_segment("a", {{0, 0}, {100, 0}}),
      planar_segment("b", {{100, 0}, {200, 0}})};
  const auto net1 = score::build_network(shared, 1.0);
  CHECK(net1.nodes().size() == 3);
  CHECK(net1.edges().size() == 2);

  const std::vector<model::StreetSegment> close = {
      planar_segment("a", {{0, 0}, {100, 0}}),
      planar_segment("b", {{100.5, 0}, {200, 0}})};
  CHECK(score::build_network(close, 1.0).nodes().size() == 3);

  const std::vector<model::StreetSegment> apart = {
      planar_segment("a", {{0, 0}, {100, 0}}),
      planar_segment("b", {{105, 0}, {200, 0}})};
  CHECK(score::build_network(apart, 1.0).nodes().size() == 4);
}

TEST_CASE("build_network is deterministic under input permutation") {
  std::vector<model::StreetSegment> segments;
  synth::Rng rng(20);
  for (int i = 0; i < 12; ++i) {
    const double x = rng.uniform(0.0, 400.0);
    const double y = rng.uniform(0.0, 400.0);
    segments.push_back(planar_segment(
        "s" + std::to_string(i),
        {{x, y}, {x + rng.uniform(20.0, 80.0), y + rng.uniform(-40.0, 40.0)}}));
  }
  const auto net1 = score::build_network(segments, 1.0);
  std::reverse(segments.begin(), segments.end());
  const auto net2 = score::build_network(segments, 1.0);
  REQUIRE(net1.nodes().size() == net2.nodes().size());
  for (size_t i = 0; i < net1.nodes().size(); ++i) {
    CHECK(net1.nodes()[i] == net2.nodes()[i]);
  }
  REQUIRE(net1.edges().size() == net2.edges().size());
  for (size_t i = 0; i < net1.edges().size(); ++i) {
    CHECK(net1.edges()[i].segment_id == net2.edges()[i].segment_id);
    CHECK(net1.edges()[i].u == net2.edges()[i].u);
    CHECK(net1.edges()[i].v == net2.edges()[i].v);
  }
}

TEST_CASE("node_distances satisfies the triangle inequality") {
  synth::Rng rng(21);
  std::vector<model::StreetSegment> segments;
  // Chain plus chords: connected by construction.
  std::vector<PlanarPoint> pts;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0)});
  }
  for (int i = 0; i + 1 < 10; ++i) {
    segments.push_back(planar_segment("c" + std::to_string(i),
                                      {pts[static_cast<size_t>(i)],
                                       pts[static_cast<size_t>(i + 1)]}));
  }
  segments.push_back(planar_segment("x1", {pts[0], pts[5]}));
  segments.push_back(planar_segment("x2", {pts[2], pts[8]}));
  const auto net = score::build_network(segments, 0.5);

  std::vector<std::vector<double>> d;
  for (size_t s = 0; s < net.nodes().size(); ++s) {
    d.push_back(score::node_distances(net, static_cast<int32_t>(s)));
  }
  for (size_t a = 0; a < d.size(); ++a) {
    for (size_t b = 0; b < d.size(); ++b) {
      for (size_t c = 0; c < d.size(); ++c) {
        CHECK(d[a][c] <= d[a][b] + d[b][c] + 1e-9);
      }
    }
  }
}

TEST_CASE("walkhood: single edge reaches exactly speed * minutes") {
  const std::vector<model::StreetSegment> segments = {
      planar_segment("a", {{0, 0}, {1000, 0}})};
  const auto net = score::build_network(segments, 1.0);
  const auto hull = score::walkhood(net, {0, 0}, 5.0, 80.0);
  REQUIRE(hull.size() == 2);
  double reach = 0.0;
  for (const auto& p : hull) reach = std::max(reach, p.x);
  CHECK(std::abs(reach - 400.0) < 1e-9);
  for (const auto& p : hull) CHECK(p.y == 0.0);
}

TEST_CASE("walkhood: tiny budget degenerates to the snap point") {
  const std::vector<model::StreetSegment> segments = {
      planar_segment("a", {{0, 0}, {1000, 0}})};
  const auto net = score::build_network(segments, 1.0);
  const auto hull = score::walkhood(net, {500, 10}, 1e-9, 80.0);
  REQUIRE(!hull.empty());
  for (const auto& p : hull) {
    CHECK(dist(p, {500, 0}) < 1e-6);
  }
}

TEST_CASE("walkhood: cross network yields a diamond at the budget radius") {
  const std::vector<model::StreetSegment> segments = {
      planar_segment("e", {{0, 0}, {1000, 0}}),
      planar_segment("w", {{0, 0}, {-1000, 0}}),
      planar_segment("n", {{0, 0}, {0, 1000}}),
      planar_segment("s", {{0, 0}, {0, -1000}})};
  const auto net = score::build_network(segments, 0.5);
  const auto hull = score::walkhood(net, {0, 0}, 5.0, 80.0);
  REQUIRE(hull.size() == 4);
  for (const auto& p : hull) {
    CHECK(std::abs(dist(p, {0, 0}) - 400.0) < 1e-9);
    CHECK((p.x == 0.0 || p.y == 0.0));
  }
}

TEST_CASE("walkhood rejects invalid arguments and distant origins") {
  const std::vector<model::StreetSegment> segments = {
      planar_segment("a", {{0, 0}, {1000, 0}})};
  const auto net = score::build_network(segments, 1.0);
  CHECK_THROWS_AS(score::walkhood(net, {0, 0}, 0.0, 80.0), ValidationError);
  CHECK_THROWS_AS(score::walkhood(net, {0, 0}, 5.0, 0.0), ValidationError);
  CHECK_THROWS_AS(score::walkhood(net, {500, 150}, 5.0, 80.0),
                  ValidationError);
}

TEST_CASE("walkhood reachable set is monotone in the time budget") {
  synth::Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PlanarPoint> pts;
    const int n = rng.uniform_int(6, 12);
    for (int i = 0; i < n; ++i) {
      pts.push_back({rng.uniform(0.0, 600.0), rng.uniform(0.0, 600.0)});
    }
    std::vector<model::StreetSegment> segments;
    for (int i = 0; i + 1 < n; ++i) {
      if (dist(pts[static_cast<size_t>(i)], pts[static_cast<size_t>(i + 1)]) <
          1.0) {
        continue;
      }
      segments.push_back(planar_segment("c" + std::to_string(i),
                                        {pts[static_cast<size_t>(i)],
                                         pts[static_cast<size_t>(i + 1)]}));
    }
    if (segments.empty()) continue;
    const auto net = score::build_network(segments, 0.5);
    const PlanarPoint origin = pts[0];
    const double m1 = rng.uniform(0.5, 3.0);
    const double m2 = m1 + rng.uniform(0.5, 4.0);
    const auto hull1 = score::walkhood(net, origin, m1, 80.0);
    const auto hull2 = score::walkhood(net, origin, m2, 80.0);
    for (const auto& p : hull1) {
      CHECK(hull_contains(hull2, p, 1e-9));
    }
  }
}

TEST_CASE("walkhood polygon exports as closed GeoJSON") {
  const std::vector<model::StreetSegment> segments = {
      planar_segment("e", {{0, 0}, {1000, 0}}),
      planar_segment("n", {{0, 0}, {0, 1000}}),
      planar_segment("w", {{0, 0}, {-1000, 0}}),
      planar_segment("s", {{0, 0}, {0, -1000}})};
  const auto net = score::build_network(segments, 0.5);
  const auto hull = score::walkhood(net, {0, 0}, 5.0, 80.0);
  const std::string geojson =
      score::walkhood_to_geojson(hull, {-0.12, 51.5});
  CHECK(geojson.find("\"Polygon\"") != std::string::npos);
  const auto doc = nlohmann::json::parse(geojson);
  const auto& ring = doc.at("geometry").at("coordinates").at(0);
  REQUIRE(ring.size() == hull.size() + 1);
  CHECK(ring.front() == ring.back());
}
