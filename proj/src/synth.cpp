#include "streetscore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>

#include "streetscore/errors.hpp"

namespace streetscore::synth {

namespace {

constexpr geo::GeoPoint kSynthOrigin{-0.12, 51.5};
constexpr double kGridPitchMeters = 160.0;
constexpr double kMinGridPitchMeters = 140.0;
constexpr double kPhotoMaxOffsetMeters = 22.4;

std::string seg_id(int i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s%05d", i);
  return buf;
}

std::string photo_id(int64_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "p%08lld", static_cast<long long>(i));
  return buf;
}

std::string venue_id(int64_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "v%06lld", static_cast<long long>(i));
  return buf;
}

std::string owner_id(int64_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "u%07lld", static_cast<long long>(i));
  return buf;
}

// Population z-scores; throws if the values are constant.
std::vector<double> standardize(const std::vector<double>& values,
                                const char* what) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0.0) {
    throw DegenerateDataError(std::string("synth: ") + what +
                              " came out constant; increase n_segments");
  }
  std::vector<double> z(values.size());
  for (size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - mean) / sd;
  return z;
}

// Raw user-tag spellings that normalize onto the default walk keywords.
const std::vector<std::string>& walk_tag_spellings() {
  static const std::vector<std::string> spellings = {
      "sidewalk",  "Sidewalk",     "footway", "street light", "Street Light",
      "pedestrian", "bench",       "tree",    "Tree",         "greenery",
      "art",       "architecture", "historical", "bike",      "hill",
      "social",    "clean street", "resting", "private"};
  return spellings;
}

const std::vector<std::string>& filler_tags() {
  static const std::vector<std::string> fillers = {
      "sky",    "london", "building", "window", "cloud",
      "thames", "bridge", "museum",   "bus",    "summer"};
  return fillers;
}

const std::vector<std::string>& daytime_machine_labels() {
  static const std::vector<std::string> labels = {"outdoor", "daylight",
                                                  "building", "sky", "indoor"};
  return labels;
}

}  // namespace

uint64_t Rng::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

int Rng::poisson(double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > limit);
  return k - 1;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next_u64() %
                               static_cast<uint64_t>(hi - lo + 1));
}

SynthCity generate(const SynthSpec& spec) {
  if (spec.n_segments < 10) {
    throw ValidationError("synth: n_segments must be >= 10");
  }
  for (double rho : {spec.rho_night, spec.rho_gender, spec.rho_tags}) {
    if (!(std::abs(rho) < 1.0)) {
      throw ValidationError("synth: planted correlations must be in (-1, 1)");
    }
  }
  if (!(spec.photos_median >= 2.0)) {
    throw ValidationError("synth: photos_median must be >= 2");
  }

  const int cols =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.n_segments))));
  const double pitch =
      spec.extent_m > 0.0 ? spec.extent_m / cols : kGridPitchMeters;
  if (pitch < kMinGridPitchMeters) {
    throw ValidationError(
        "synth: extent too small; segments would share photo buffers");
  }

  Rng rng(spec.seed);
  SynthCity city;
  city.origin = kSynthOrigin;
  const int n = spec.n_segments;

  // Street geometry: one segment per grid cell, jittered, short enough that
  // photo buffers of neighboring segments cannot overlap.
  std::vector<geo::Polyline> planar_lines;
  for (int i = 0; i < n; ++i) {
    const int row = i / cols;
    const int col = i % cols;
    const double cx = (col + 0.5) * pitch + rng.uniform(-10.0, 10.0);
    const double cy = (row + 0.5) * pitch + rng.uniform(-10.0, 10.0);
    const double angle = rng.uniform(0.0, 3.14159265358979323846);
    const double half = rng.uniform(35.0, 45.0);
    const double dx = std::cos(angle), dy = std::sin(angle);
    const double bend = rng.uniform(-5.0, 5.0);
    std::vector<geo::PlanarPoint> pts = {
        {cx - half * dx, cy - half * dy},
        {cx - bend * dy, cy + bend * dx},
        {cx + half * dx, cy + half * dy}};
    planar_lines.emplace_back(pts);

    model::StreetSegment seg;
    seg.id = seg_id(i);
    for (const auto& p : pts) {
      seg.raw_coords.push_back(geo::unproject(p, kSynthOrigin));
    }
    seg.geometry = planar_lines.back();
    city.streets.push_back(std::move(seg));
  }

  // Latent scores. Ratings are drawn around a walkability latent and the
  // walkability property is their exact mean, so composite scoring stays
  // coherent with the fixture.
  std::vector<double> safety(n), walkability(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.normal();
    safety[i] = std::clamp(2.75 + 0.56 * u, 0.5, 5.0);
    const double v = 0.22 * u + std::sqrt(1.0 - 0.22 * 0.22) * rng.normal();
    model::CategoryRatings ratings;
    double sum = 0.0;
    for (auto& r : ratings.values) {
      r = std::clamp(2.5 + 0.45 * v + 0.35 * rng.normal(), 1.0, 5.0);
      sum += r;
    }
    walkability[i] = sum / 8.0;
    city.streets[static_cast<size_t>(i)].safety = safety[i];
    city.streets[static_cast<size_t>(i)].walkability = walkability[i];
    city.streets[static_cast<size_t>(i)].ratings = ratings;
  }
  const std::vector<double> z_safety = standardize(safety, "safety");
  const std::vector<double> z_walk = standardize(walkability, "walkability");

  // Per-photo structure drawn before the planted signals so the realized
  // data volumes can feed the attenuation corrections.
  struct PhotoPlan {
    int segment;
    int64_t owner;
    bool decisive;  // will carry a high-confidence machine tag
    int n_tags;
  };
  std::vector<PhotoPlan> plans;
  struct OwnerPlan {
    int segment;
    bool has_gender;
    bool has_age;
  };
  std::vector<OwnerPlan> owner_plans;
  std::vector<int64_t> photos_per_segment(static_cast<size_t>(n), 0);
  const double mu_log = std::log(spec.photos_median);
  for (int i = 0; i < n; ++i) {
    const int64_t k = std::max<int64_t>(
        2, std::llround(std::exp(mu_log + spec.photos_sigma * rng.normal())));
    photos_per_segment[static_cast<size_t>(i)] = k;
    std::vector<int64_t> segment_owners;
    for (int64_t j = 0; j < k; ++j) {
      int64_t owner;
      if (!segment_owners.empty() && rng.bernoulli(0.3)) {
        owner = segment_owners[static_cast<size_t>(rng.uniform_int(
            0, static_cast<int>(segment_owners.size()) - 1))];
      } else {
        owner = static_cast<int64_t>(owner_plans.size());
        owner_plans.push_back({i, rng.bernoulli(0.55), rng.bernoulli(0.55)});
        segment_owners.push_back(owner);
      }
      plans.push_back({i, owner, rng.bernoulli(0.9), rng.poisson(4.0)});
    }
  }

  // Realized volumes per segment.
  std::vector<int64_t> classified(static_cast<size_t>(n), 0);
  std::vector<int64_t> tag_totals(static_cast<size_t>(n), 0);
  std::vector<int64_t> gendered_users(static_cast<size_t>(n), 0);
  for (const auto& p : plans) {
    if (p.decisive) classified[static_cast<size_t>(p.segment)] += 1;
    tag_totals[static_cast<size_t>(p.segment)] += p.n_tags;
  }
  for (const auto& o : owner_plans) {
    if (o.has_gender) gendered_users[static_cast<size_t>(o.segment)] += 1;
  }

  // Attenuation corrections: sampling a fraction from m trials shrinks the
  // across-segment correlation by sd / sqrt(sd^2 + E[f(1-f)/m]), so the
  // latent correlation is planted proportionally higher.
  auto extra_var = [&](int64_t volume) {
    if (spec.extra_noise <= 0.0) return 0.0;
    const double e = spec.extra_noise *
                     std::pow(static_cast<double>(std::max<int64_t>(volume, 1)),
                              -spec.noise_volume_slope);
    return e * e;
  };
  auto mean_over_positive = [&](const std::vector<int64_t>& volumes,
                                double numerator) {
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t v : volumes) {
      if (v > 0) {
        sum += numerator / static_cast<double>(v) + extra_var(v);
        ++count;
      }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  };

  constexpr double kNightSd = 0.15;    // sd of the latent night fraction
  constexpr double kGenderSd = 0.15;   // sd of the latent male fraction
  constexpr double kWalkBase = 0.08, kCarBase = 0.06, kTagAmp = 0.35;

  const double night_noise = mean_over_positive(classified, 0.2275);
  const double alpha_night =
      kNightSd / std::sqrt(kNightSd * kNightSd + night_noise);
  const double rho_night_latent =
      std::clamp(spec.rho_night / alpha_night, -0.995, 0.995);

  const double gender_noise = mean_over_positive(gendered_users, 0.225);
  const double alpha_gender =
      kGenderSd / std::sqrt(kGenderSd * kGenderSd + gender_noise);
  const double rho_gender_latent =
      std::clamp(spec.rho_gender / alpha_gender, -0.995, 0.995);

  const double sd_w = kWalkBase * kTagAmp;
  const double sd_c = kCarBase * kTagAmp;
  const double v_w = mean_over_positive(tag_totals, kWalkBase * (1 - kWalkBase));
  const double v_c = mean_over_positive(tag_totals, kCarBase * (1 - kCarBase));
  const double cross = mean_over_positive(tag_totals, kWalkBase * kCarBase);
  const double sig_w = std::sqrt(sd_w * sd_w + v_w);
  const double sig_c = std::sqrt(sd_c * sd_c + v_c);
  const double alpha_w = sd_w / sig_w;
  const double alpha_c = sd_c / sig_c;
  const double score_var =
      2.0 + 2.0 * (sd_w * sd_c + cross) / (sig_w * sig_c);
  const double rho_tags_latent = std::clamp(
      spec.rho_tags * std::sqrt(score_var) / (alpha_w + alpha_c), -0.995,
      0.995);

  // Planted per-segment probabilities, correlated with the realized scores.
  std::vector<double> night_frac(static_cast<size_t>(n));
  std::vector<double> male_prob(static_cast<size_t>(n));
  std::vector<double> walk_frac(static_cast<size_t>(n));
  std::vector<double> car_frac(static_cast<size_t>(n));
  std::vector<double> age_center(static_cast<size_t>(n));
  auto planted = [&](double rho, double z, Rng& r) {
    return rho * z + std::sqrt(1.0 - rho * rho) * r.normal();
  };
  for (int i = 0; i < n; ++i) {
    const size_t s = static_cast<size_t>(i);
    const double tn = planted(rho_night_latent, z_safety[s], rng);
    night_frac[s] = std::clamp(0.5 + kNightSd * tn, 0.02, 0.98);
    const double tg = planted(rho_gender_latent, z_safety[s], rng);
    male_prob[s] = std::clamp(0.55 + kGenderSd * tg, 0.05, 0.95);
    const double tt = planted(rho_tags_latent, z_walk[s], rng);
    walk_frac[s] = std::clamp(kWalkBase * (1.0 + kTagAmp * tt), 0.002, 0.6);
    car_frac[s] = std::clamp(kCarBase * (1.0 - kTagAmp * tt), 0.002, 0.6);
    // Mild age signal echoing the published age correlation; not a contract.
    age_center[s] = 40.0 + 6.0 * (0.32 * z_safety[s] +
                                  std::sqrt(1.0 - 0.32 * 0.32) * rng.normal());
  }

  // Owner demographics.
  struct OwnerAttrs {
    std::optional<model::Gender> gender;
    std::optional<int> age;
  };
  std::vector<OwnerAttrs> owner_attrs(owner_plans.size());
  for (size_t o = 0; o < owner_plans.size(); ++o) {
    const auto& plan = owner_plans[o];
    const size_t s = static_cast<size_t>(plan.segment);
    if (plan.has_gender) {
      owner_attrs[o].gender = rng.bernoulli(male_prob[s])
                                  ? model::Gender::male
                                  : model::Gender::female;
    }
    if (plan.has_age) {
      const int age = static_cast<int>(std::llround(
          std::clamp(age_center[s] + 5.0 * rng.normal(), 26.0, 63.0)));
      owner_attrs[o].age = age;
    }
  }

  // Photos.
  city.photos.reserve(plans.size());
  for (size_t idx = 0; idx < plans.size(); ++idx) {
    const auto& plan = plans[idx];
    const size_t s = static_cast<size_t>(plan.segment);
    const auto& line = planar_lines[s];

    model::PhotoRecord photo;
    photo.id = photo_id(static_cast<int64_t>(idx));
    photo.owner_id = owner_id(plan.owner);
    photo.gender = owner_attrs[static_cast<size_t>(plan.owner)].gender;
    photo.age = owner_attrs[static_cast<size_t>(plan.owner)].age;

    const double arc = rng.uniform(0.0, line.length());
    const geo::PlanarPoint base = geo::point_at_arclength(line, arc);
    const geo::PlanarPoint tangent = geo::tangent_at_arclength(line, arc);
    const double offset =
        rng.uniform(-kPhotoMaxOffsetMeters, kPhotoMaxOffsetMeters);
    const geo::PlanarPoint pos{base.x - offset * tangent.y,
                               base.y + offset * tangent.x};
    photo.location = geo::unproject(pos, kSynthOrigin);

    if (plan.decisive) {
      const double conf = rng.uniform(0.955, 0.995);
      if (rng.bernoulli(night_frac[s])) {
        photo.machine_tags.push_back({"night", conf});
      } else {
        photo.machine_tags.push_back(
            {daytime_machine_labels()[static_cast<size_t>(rng.uniform_int(
                 0, static_cast<int>(daytime_machine_labels().size()) - 1))],
             conf});
      }
    } else if (rng.bernoulli(0.5)) {
      // Sub-threshold tag: the photo stays unclassified.
      photo.machine_tags.push_back({"night", rng.uniform(0.3, 0.9)});
    }

    for (int t = 0; t < plan.n_tags; ++t) {
      const double r = rng.uniform();
      if (r < walk_frac[s]) {
        photo.user_tags.push_back(
            walk_tag_spellings()[static_cast<size_t>(rng.uniform_int(
                0, static_cast<int>(walk_tag_spellings().size()) - 1))]);
      } else if (r < walk_frac[s] + car_frac[s]) {
        photo.user_tags.push_back(rng.bernoulli(0.5) ? "car" : "cars");
      } else {
        photo.user_tags.push_back(
            filler_tags()[static_cast<size_t>(rng.uniform_int(
                0, static_cast<int>(filler_tags().size()) - 1))]);
      }
    }

    photo.views =
        static_cast<int64_t>(std::floor(std::exp(2.0 + 1.2 * rng.normal())));
    if (rng.bernoulli(0.6)) photo.favorites = rng.poisson(1.2);
    if (rng.bernoulli(0.4)) photo.comments = rng.poisson(0.6);
    city.photos.push_back(std::move(photo));
  }

  // Venues: counts per segment, categories tilted by the latent scores so
  // the regressions have signal to find.
  const double base_weights[model::kVenueCategoryCount] = {
      0.08, 0.05, 0.25, 0.08, 0.10, 0.15, 0.15, 0.10, 0.04};
  const double safety_tilt[model::kVenueCategoryCount] = {
      0.0, 0.0, 0.0, -0.3, 0.6, -0.4, 0.0, 0.0, 0.2};
  const double walk_tilt[model::kVenueCategoryCount] = {
      0.3, 0.0, 0.1, 0.0, 0.0, 0.6, 0.2, -0.3, 0.0};
  int64_t venue_counter = 0;
  for (int i = 0; i < n; ++i) {
    const size_t s = static_cast<size_t>(i);
    const int count = rng.poisson(spec.venues_per_segment_mean);
    if (count == 0) continue;
    double weights[model::kVenueCategoryCount];
    double total = 0.0;
    for (int c = 0; c < model::kVenueCategoryCount; ++c) {
      weights[c] = base_weights[c] * std::exp(safety_tilt[c] * z_safety[s] +
                                              walk_tilt[c] * z_walk[s]);
      total += weights[c];
    }
    for (int v = 0; v < count; ++v) {
      double pick = rng.uniform() * total;
      int category = 0;
      for (int c = 0; c < model::kVenueCategoryCount; ++c) {
        pick -= weights[c];
        if (pick <= 0.0) {
          category = c;
          break;
        }
      }
      model::VenueRecord venue;
      venue.id = venue_id(venue_counter++);
      venue.category = static_cast<model::VenueCategory>(category);
      const auto& line = planar_lines[s];
      const double arc = rng.uniform(0.0, line.length());
      const geo::PlanarPoint base = geo::point_at_arclength(line, arc);
      const geo::PlanarPoint tangent = geo::tangent_at_arclength(line, arc);
      const double offset = rng.uniform(-15.0, 15.0);
      venue.location = geo::unproject({base.x - offset * tangent.y,
                                       base.y + offset * tangent.x},
                                      kSynthOrigin);
      city.venues.push_back(std::move(venue));
    }
  }
  return city;
}

void synth_city(const SynthSpec& spec, const std::string& out_dir) {
  const SynthCity city = generate(spec);
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  {
    std::ofstream out(path("streets.geojson"), std::ios::binary);
    if (!out) throw IoError("cannot write " + path("streets.geojson"));
    out << model::streets_to_geojson(city.streets);
  }
  {
    std::ofstream out(path("photos.jsonl"), std::ios::binary);
    if (!out) throw IoError("cannot write " + path("photos.jsonl"));
    for (const auto& p : city.photos) out << model::to_jsonl(p) << '\n';
  }
  {
    std::ofstream out(path("venues.jsonl"), std::ios::binary);
    if (!out) throw IoError("cannot write " + path("venues.jsonl"));
    for (const auto& v : city.venues) out << model::to_jsonl(v) << '\n';
  }
}

AgreementResult annotation_agreement(
    const std::vector<std::vector<std::string>>& keyword_lists) {
  if (keyword_lists.size() < 2) {
    throw ValidationError("agreement needs at least 2 keyword lists");
  }
  std::vector<std::set<std::string>> normalized;
  for (const auto& list : keyword_lists) {
    std::set<std::string> items;
    for (const auto& kw : list) {
      const std::string norm = model::normalize_tag(kw);
      if (!norm.empty()) items.insert(norm);
    }
    if (items.empty()) {
      throw ValidationError("agreement: keyword list is empty");
    }
    normalized.push_back(std::move(items));
  }

  std::set<std::string> merged = normalized.front();
  std::set<std::string> intersected = normalized.front();
  for (size_t i = 1; i < normalized.size(); ++i) {
    merged.insert(normalized[i].begin(), normalized[i].end());
    std::set<std::string> keep;
    for (const auto& item : intersected) {
      if (normalized[i].count(item)) keep.insert(item);
    }
    intersected = std::move(keep);
  }

  AgreementResult result;
  result.merged.assign(merged.begin(), merged.end());
  result.intersected.assign(intersected.begin(), intersected.end());
  result.agreement = static_cast<double>(intersected.size()) /
                     static_cast<double>(merged.size());
  return result;
}

}  // namespace streetscore::synth
