#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streetscore/model.hpp"

namespace streetscore::synth {

// Deterministic RNG with hand-rolled distributions so generated fixtures
// are byte-stable across standard-library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal (polar method)
  int poisson(double lambda);             // Knuth, small lambda
  bool bernoulli(double p);
  int uniform_int(int lo, int hi);        // inclusive bounds

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct SynthSpec {
  int n_segments = 3000;
  double extent_m = 0.0;  // 0: derived from the segment grid
  // Photos per segment ~ lognormal(median, sigma), floored at 2.
  double photos_median = 100.0;
  double photos_sigma = 0.8;
  // Target correlations between the pipeline metrics and the scores.
  double rho_night = 0.6;
  double rho_gender = 0.58;
  double rho_tags = 0.89;
  // Extra latent noise decaying as volume^-slope (0 disables it).
  double noise_volume_slope = 0.5;
  double extra_noise = 0.0;
  double venues_per_segment_mean = 2.5;
  uint64_t seed = 1;
};

struct SynthCity {
  std::vector<model::StreetSegment> streets;
  std::vector<model::PhotoRecord> photos;
  std::vector<model::VenueRecord> venues;
  geo::GeoPoint origin;  // lon/lat the planar layout was unprojected around
};

// Streets on a jittered grid with latent safety/walkability scores; photos
// and venues drawn so that the paired-fraction metrics recover the planted
// correlations (attenuation from finite per-segment sampling is corrected
// analytically).
SynthCity generate(const SynthSpec& spec);

// generate() + serialization to streets.geojson / photos.jsonl /
// venues.jsonl under out_dir.
void synth_city(const SynthSpec& spec, const std::string& out_dir);

// Agreement between annotator keyword lists: items are normalized, merged
// and intersected; the ratio is |intersection| / |union|.
struct AgreementResult {
  std::vector<std::string> merged;       // sorted
  std::vector<std::string> intersected;  // sorted
  double agreement = 0.0;
};

AgreementResult annotation_agreement(
    const std::vector<std::vector<std::string>>& keyword_lists);

}  // namespace streetscore::synth
