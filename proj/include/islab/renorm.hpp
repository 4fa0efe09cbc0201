#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "islab/dynamics.hpp"
#include "islab/percolation.hpp"

namespace islab {

struct BlockGeometry {
  int N = 1;
  int K = 1;
  int d = 1;
  double alpha1 = 1;
  double alpha2 = 1;
  double alpha_prime = 1;  // min(6 alpha1, alpha2) unless set lower
  double T1 = 0;           // N / (2 alpha1)
  double T = 0;            // 3N / alpha'
  double T2 = 0;
  int k = 8;
  int j = 0;  // floor(3 / alpha') + 1
  int M = 0;  // max(k, j)

  static BlockGeometry make(int N, int K, int d, double alpha1, double alpha2,
                            std::optional<double> alpha_prime = std::nullopt);

  // Spatial part of R, taken closed: [-8N, 8N]^d.
  Box R() const { return Box::cube(d, -8 * N, 8 * N); }
  Box I() const { return Box::cube(d, -2 * N, 2 * N); }
  // Box the block timeline is generated on: R plus a 2N margin.
  Box simulation_box() const { return Box::cube(d, -10 * N, 10 * N); }
  std::size_t sites_outside_I() const;  // |R \ I|
  double nominal_outside_count() const;   // (12N)^d
};

// xi on its own box with every site outside A set to 0.
Configuration restrict_config(const Configuration& xi, const Box& A);

// Copy of xi on `box`: overlapping sites keep their state, the rest are 0.
Configuration embed(const Configuration& xi, const Box& box);

Box shifted(const Box& b, const Coord& v);

struct HOptions {
  double lambda_p = 0;   // contact rate of the survival trials
  double gamma = 0.1;    // threshold 1 - gamma/2
  std::size_t trials = 64;
  double horizon = 20;   // survival proxy horizon
  std::int64_t half_width = 40;  // inner box [-W, W]^d
  std::int64_t stride = 0;       // translate stride; 0 means K
  double z = 3.0;
  std::uint64_t seed = 0;
};

enum class HVerdict { InH, NotInH, Undecided };
const char* to_string(HVerdict v);

struct HMembership {
  Coord center;                    // centre of the [-N,N]^d window
  bool no_sterile_in_I = false;
  std::optional<Coord> translate;  // centre of the selected K-box
  Estimate survival;
  double threshold = 0;
  HVerdict verdict = HVerdict::NotInH;
  bool point = false;  // no -1 in I and selected estimate > threshold
};

// Membership in H with a fixed survival estimator: the inner trials of a
// translate run the contact process from its K-window moved to the origin,
// with seeds that depend only on the trial index. The estimate is then a
// function of the window contents alone, monotone in them, and cached.
class HEvaluator {
 public:
  HEvaluator(const BlockGeometry& geom, HOptions opts);

  const BlockGeometry& geometry() const { return geom_; }
  const HOptions& options() const { return opts_; }
  double threshold() const { return 1.0 - opts_.gamma / 2.0; }

  HMembership membership(const Configuration& xi, const Coord& center) const;
  // Survival estimate of contact from the fertile sites of a (2K+1)^d window
  // (row-major, values 0/1).
  Estimate survival(const std::vector<std::int8_t>& window) const;
  Estimate survival_at(const std::vector<std::int8_t>& window, double horizon) const;
  std::vector<Coord> translate_offsets() const;
  std::size_t cache_size() const;

 private:
  BlockGeometry geom_;
  HOptions opts_;
  LatticePtr inner_;
  mutable std::mutex mu_;
  mutable std::map<std::string, Estimate> cache_;
};

HMembership h_membership(const Configuration& xi, const BlockGeometry& geom, const HOptions& opts);

struct BlockSample {
  std::uint64_t seed = 0;
  bool e1 = false, e2 = false, e3 = false, e4 = false;
  bool good = false;
  bool good_evaluated = false;
  std::size_t sterile_marks_in_R = 0;
  std::size_t restriction_violations = 0;  // xi^R > xi somewhere in R
  std::size_t inclusion_violations = 0;    // on E: fertile zeta^{|C} outside A(xi^R)
  bool contact_in_both = false;            // zeta^{|C}_T in both shifted H
  bool implication_breach = false;         // E, contact_in_both, not G
  bool all() const { return e1 && e2 && e3 && e4; }
};

struct BlockEventReport {
  BlockGeometry geometry;
  double lambda = 0, p = 0;
  std::size_t trials = 0;
  std::uint64_t seed0 = 0;
  Estimate e1, e2, e3, e4, e_all, e1e2, e3e4, good;
  bool good_evaluated = false;
  double e1_closed_form = 0;      // exp(-2 lambda (1-p) (16N+1)^d T)
  double e1_closed_form_2d = 0;   // same with the per-site rate 2d lambda (1-p)
  double e1e2_closed_form = 0;
  std::size_t outside_I_sites = 0;
  double nominal_outside_count = 0;
  std::size_t restriction_violations = 0;
  std::size_t inclusion_violations = 0;
  std::size_t implication_breaches = 0;
  Coord translate;
  std::vector<BlockSample> samples;
};

struct BlockOptions {
  bool evaluate_good = false;
  bool audit_restriction = true;
  unsigned workers = 1;
};

// Per seed: one timeline on the simulation box over [0, T]; E1 and E2 are
// read off the marks, E3 and E4 from contact runs started from xi^{|C} and
// from the full box. Requires xi in H (point decision).
BlockEventReport block_events(const Configuration& xi, const HEvaluator& h, double lambda, double p,
                              std::size_t trials, std::uint64_t seed0, const BlockOptions& opts = {});

BlockSample evaluate_block(const Configuration& xi, const HEvaluator& h, const HMembership& hm, double lambda,
                           double p, std::uint64_t seed, bool evaluate_good, bool audit_restriction);

// Frequency of G^xi: the restricted Spont process on R lands in both
// shifted copies of H at time T.
Estimate good_event(const Configuration& xi, const HEvaluator& h, double lambda, double p, std::size_t trials,
                    std::uint64_t seed0, unsigned workers = 1);

// Number of mark applications after which xi^R exceeds xi at a site of R
// (order -1 < 0 < 1), replaying the full timeline for xi and its restriction
// to R for xi^R.
std::size_t restriction_audit(const EventTimeline& full, const Box& R, const Configuration& xi0, double t1);

struct WetOptions {
  double p_site = 0;      // target density of the coupled percolation field
  double good_estimate = 0;  // estimate of P(G) used for thinning
  std::int64_t half_width = 0;  // 0: smallest box holding every block
};

struct WetReport {
  std::uint64_t seed = 0;
  std::int64_t n_max = 0;
  std::vector<std::vector<std::int64_t>> in_h;  // levels 0..n_max+1
  std::vector<std::vector<std::int64_t>> wet;   // X_n, levels 0..n_max
  std::vector<std::vector<std::int64_t>> good;  // G' per level
  Cluster cluster;             // thinned field
  Cluster cluster_unthinned;   // open = G'
  std::size_t good_not_wet = 0;
  std::size_t containment_violations = 0;  // A_n not inside X_n
  std::size_t h_violations = 0;            // A_n not inside {h}
  std::size_t unthinned_violations = 0;
  std::size_t restriction_violations = 0;
};

// One Spont trajectory from xi over (n_max + 1) T on a box wide enough for
// every block (m, n) with |m| <= n_max + 1. Site (m, n) is wet when the
// implication of the comparison construction holds; the coupled percolation
// field opens (m, n) when G'(m, n) holds and a thinning uniform falls below
// p_site / good_estimate, where G' is G at sites in H and true elsewhere.
WetReport wet_sites(const Configuration& xi, const HEvaluator& h, double lambda, double p, std::int64_t n_max,
                    std::uint64_t seed, const WetOptions& opts);

struct SpeedCalibration {
  double alpha1 = 0;
  std::optional<double> alpha2;
  std::size_t trials = 0;
  std::size_t surviving = 0;
  double epsilon = 0;
  double horizon = 0;
};

// alpha1: 99.9th percentile (nearest rank) of the l-infinity reach of
// H_t^{0} divided by t. alpha2: largest s such that the fraction of surviving
// trials with a disagreement between the contact process from {0} and from
// the full box inside [-st, st]^d stays below epsilon.
SpeedCalibration calibrate_speeds(double lambda_p, int d, std::int64_t half_width, double horizon, std::size_t trials,
                                  std::uint64_t seed0, double epsilon = 0.01, unsigned workers = 1);

struct DualityResult {
  Estimate lhs;  // survival to t from zeta
  Estimate rhs;  // full-box start meets A(zeta) at t
  double z = 0;
};

DualityResult duality_check(const Configuration& zeta, double lambda, double t, BoundaryRule rule, std::size_t trials,
                            std::uint64_t seed0, unsigned workers = 1);

}  // namespace islab
