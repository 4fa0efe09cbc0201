#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "islab/dynamics.hpp"
#include "islab/order.hpp"
#include "islab/replay.hpp"

namespace islab {

enum class PairKind : std::uint8_t {
  IsContact,   // IS(lambda, p) below contact(lambda p)
  SpontIs,     // Spont(lambda, p) below IS(lambda, p)
  SpontSpont,  // Spont(lambda, p1) below Spont(lambda, p2) on split streams
};

const char* to_string(PairKind kind);
PairKind parse_pair(const std::string& name);

struct PairParams {
  PairKind pair = PairKind::IsContact;
  double lambda = 0;
  double p1 = 0;  // p for the single-parameter pairs
  double p2 = 0;  // SpontSpont only
};

// Role maps of the lower and upper process.
std::pair<ProcessSpec, ProcessSpec> pair_specs(PairKind kind);
MarkRates pair_rates(const PairParams& params);
MarkGenerator make_pair_generator(const LatticePtr& lattice, const PairParams& params, double horizon,
                                  std::uint64_t seed);

struct CoupledPair {
  PairParams params;
  Trajectory lower;
  Trajectory upper;
  // Monitored under -1 < 0 < 1 at every state change.
  std::size_t violation_count = 0;
  std::vector<Violation> violations;
  // |A(lower)| <= |A(upper)| checked at each snapshot.
  bool counts_ordered = true;
};

// Initial configurations must satisfy lower <= upper under -1 < 0 < 1.
CoupledPair couple_is_contact(const Configuration& eta0, const Configuration& zeta0, const EventTimeline& timeline,
                              const std::vector<double>& snapshots = {});
CoupledPair couple_spont_is(const Configuration& xi0, const Configuration& eta0, const EventTimeline& timeline,
                            const std::vector<double>& snapshots = {});
CoupledPair couple_spont_spont(const Configuration& xi1, const Configuration& xi2, const SplitTimeline& split,
                               const std::vector<double>& snapshots = {});

// Same replay fed by the lazy source; stops once both processes are extinct.
CoupledPair couple_lazy(const PairParams& params, const Configuration& lower0, const Configuration& upper0,
                        const MarkGenerator& gen, const std::vector<double>& snapshots = {});

struct PairSuiteResult {
  PairParams params;
  std::size_t trials = 0;
  std::size_t seeds_with_violations = 0;
  std::size_t violations = 0;
  std::size_t count_breaches = 0;
  std::size_t lower_alive = 0;
  std::size_t upper_alive = 0;
};

// One coupled run per seed from the same single fertile site at the box
// centre.
PairSuiteResult run_pair_suite(const PairParams& params, const Box& box, BoundaryRule rule, double horizon,
                               std::size_t trials, std::uint64_t seed0, unsigned workers = 1);

struct SandwichResult {
  double lambda = 0;
  double p = 0;
  std::size_t trials = 0;
  std::uint64_t seed0 = 0;
  // fertile site alive at the horizon, per process: Spont, IS, contact(lambda p)
  std::array<std::size_t, 3> alive{};
  std::size_t spont_is_violations = 0;
  std::size_t is_contact_violations = 0;
  std::size_t seeds_with_violations = 0;
  std::size_t count_breaches = 0;  // seeds where survival is not ordered
  std::vector<std::array<char, 3>> per_seed;  // filled on request
};

// Spont(lambda, p), IS(lambda, p) and contact(lambda p) driven by one mark
// stream per seed from a single fertile site at the box centre, with both
// adjacent pairs monitored under -1 < 0 < 1. Stops a seed once all three
// are extinct.
SandwichResult run_sandwich(double lambda, double p, const Box& box, BoundaryRule rule, double horizon,
                            std::size_t trials, std::uint64_t seed0, unsigned workers = 1, bool keep_seeds = false);

// Joint state (lower, upper) at one site.
using PairState = std::pair<std::int8_t, std::int8_t>;

// Transition rates out of `from` at a site with `n_lower`, `n_upper`
// fertile neighbours in each process, as tabulated for the basic couplings.
std::map<PairState, double> coupled_rates(const PairParams& params, PairState from, int n_lower, int n_upper,
                                          int dim);

struct FirstChange {
  double time = 0;
  std::uint32_t site = 0;
  PairState from{0, 0};
  PairState to{0, 0};
};

// First mark that changes the joint configuration; none if nothing changes
// before the horizon.
std::optional<FirstChange> first_change(const PairParams& params, const Configuration& lower0,
                                        const Configuration& upper0, const std::vector<Mark>& marks);

struct OrderWitness {
  std::string order;
  std::uint64_t seed = 0;
  Configuration first;
  Configuration second;
  Mark mark{};
  std::uint32_t site = 0;
  PairState states{0, 0};
};

// Two IS(lambda, p) copies under the basic coupling, started from the
// two-site configurations that break `order`; scans seeds 0..budget-1.
std::optional<OrderWitness> find_order_violation_is(const StateOrder& order, double lambda, double p,
                                                    std::size_t search_budget);

void require_ordered(const Configuration& lower, const Configuration& upper, const Relation& rel);

}  // namespace islab
