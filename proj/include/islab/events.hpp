#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "islab/lattice.hpp"
#include "islab/rng.hpp"

namespace islab {

// Enum order is the tie-break order. The two auxiliary families only exist
// in split timelines.
enum class StreamKind : std::uint8_t {
  BirthFertile = 0,
  BirthSterile = 1,
  DeathFertile = 2,
  DeathSterile = 3,
  AuxFertile = 4,
  AuxSterile = 5,
};
inline constexpr int kStreamKinds = 6;

const char* to_string(StreamKind kind);

inline constexpr bool is_edge_kind(StreamKind k) {
  return k != StreamKind::DeathFertile && k != StreamKind::DeathSterile;
}

// Sterile arrows act as clocks of their target site for Spont, so they are
// generated for every in-edge of a box site, including edges whose source
// lies outside the box. Fertile arrows only exist when both ends are inside.
inline constexpr bool is_sterile_arrow(StreamKind k) {
  return k == StreamKind::BirthSterile || k == StreamKind::AuxSterile;
}

struct Mark {
  double time;
  std::uint64_t entity;  // stable key of the edge or site
  std::uint32_t src;     // box offset, kOutside, or the site itself for deaths
  std::uint32_t dst;
  StreamKind kind;
  std::uint8_t dir;  // in-edge direction for edge kinds
};

inline bool mark_before(const Mark& a, const Mark& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.entity < b.entity;
}

// Per-edge rate for edge kinds, per-site rate for death kinds.
struct MarkRates {
  std::array<double, kStreamKinds> rate{};
  double operator[](StreamKind k) const { return rate[static_cast<int>(k)]; }
  double& operator[](StreamKind k) { return rate[static_cast<int>(k)]; }
};

MarkRates standard_rates(double lambda, double p);
MarkRates split_rates(double lambda, double p1, double p2);

// All marks are produced per (entity, kind, unit-time bin): the count is a
// Poisson inversion of one uniform, the times are further uniforms. Any
// (entity, kind, bin) can be evaluated on its own, which keeps marks fixed
// when the box grows and lets the lazy source generate on demand.
class MarkGenerator {
 public:
  MarkGenerator(LatticePtr lattice, const MarkRates& rates, std::uint64_t seed, double horizon);

  const Lattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  const MarkRates& rates() const { return rates_; }
  std::uint64_t seed() const { return seed_; }
  double horizon() const { return horizon_; }
  std::uint32_t bins() const { return bins_; }

  // Marks of in-edge (dst, k) in `bin` with time strictly after `after`.
  template <class Sink>
  void edge_bin(StreamKind kind, std::uint32_t dst, int k, std::uint32_t bin, double after, Sink&& sink) const {
    const std::uint32_t src = lattice_->in_src(dst, k);
    if (src == kOutside && !is_sterile_arrow(kind)) return;
    emit(kind, lattice_->in_edge_key(dst, k), src, dst, static_cast<std::uint8_t>(k), bin, after, sink);
  }

  template <class Sink>
  void site_bin(StreamKind kind, std::uint32_t site, std::uint32_t bin, double after, Sink&& sink) const {
    emit(kind, lattice_->site_key(site), site, site, 0, bin, after, sink);
  }

  static std::uint64_t stream_key(std::uint64_t entity, StreamKind kind) {
    return hash_combine(entity, 0xA5A5ull + static_cast<std::uint64_t>(kind));
  }

 private:
  template <class Sink>
  void emit(StreamKind kind, std::uint64_t entity, std::uint32_t src, std::uint32_t dst, std::uint8_t dir,
            std::uint32_t bin, double after, Sink& sink) const {
    const int ki = static_cast<int>(kind);
    const double mean = rates_.rate[ki];
    if (mean <= 0.0) return;
    CounterStream rs(seed_, stream_key(entity, kind), bin);
    const double u = rs.next();
    if (u <= exp_neg_[ki]) return;
    const std::uint32_t n = poisson_inverse(mean, u, exp_neg_[ki]);
    for (std::uint32_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(bin) + rs.next();
      if (t > after && t <= horizon_) sink(Mark{t, entity, src, dst, kind, dir});
    }
  }

  LatticePtr lattice_;
  MarkRates rates_;
  std::array<double, kStreamKinds> exp_neg_{};
  std::uint64_t seed_;
  double horizon_;
  std::uint32_t bins_;
};

// Materialized, time-sorted marks over a space-time box.
struct EventTimeline {
  LatticePtr lattice;
  double horizon = 0;
  std::uint64_t seed = 0;
  double lambda = 0;
  double p = 0;
  MarkRates rates;
  std::vector<Mark> marks;

  const Box& box() const { return lattice->box(); }
  BoundaryRule rule() const { return lattice->rule(); }
  std::size_t count(StreamKind k) const;
};

// Base families plus the two auxiliary ones; both Spont processes read the
// same underlying timeline through different role maps.
struct SplitTimeline {
  EventTimeline timeline;
  double p1 = 0;
  double p2 = 0;
};

void validate_rates(double lambda, double p, double horizon);

EventTimeline generate_timeline(const Box& box, BoundaryRule rule, double lambda, double p, double horizon,
                                std::uint64_t seed);
EventTimeline generate_timeline(const LatticePtr& lattice, double lambda, double p, double horizon, std::uint64_t seed);

SplitTimeline generate_split_timeline(const Box& box, BoundaryRule rule, double lambda, double p1, double p2,
                                      double horizon, std::uint64_t seed);
SplitTimeline generate_split_timeline(const LatticePtr& lattice, double lambda, double p1, double p2, double horizon,
                                      std::uint64_t seed);

// Every mark of a generator, sorted and made strictly increasing.
std::vector<Mark> materialize(const MarkGenerator& gen);

// Keeps deaths on sites of `sub`, fertile arrows with both ends in `sub` and
// sterile arrows whose target is in `sub`, in the window [t0, t1], rebased.
EventTimeline restrict(const EventTimeline& t, const Box& sub, double t0, double t1);

// `time,kind,entity` lines; entity is `x1;x2` for sites and `x>y` for edges.
void dump_timeline(const EventTimeline& t, std::ostream& os);

// Replaces ties with the next representable time so the sequence is strictly
// increasing.
inline double strictly_after(double t, double last) {
  return t > last ? t : std::nextafter(last, std::numeric_limits<double>::infinity());
}

// What wakes an entity's streams up during a lazy replay.
enum class Drive : std::uint8_t {
  Off,
  FertileSite,  // site (or arrow source) in state 1 in some process
  SterileSite,  // site in state -1 in some process
  Always,       // every in-edge of every site, every bin
};

struct LazyPlan {
  std::array<Drive, kStreamKinds> drive{};
};

// Yields, in global order, every mark that can change some process state.
// Marks of an entity whose driving condition is false are skipped; the
// replay reports activations so that a site waking up mid-bin gets the rest
// of its bin. The sequence matches materialize() restricted to relevant
// marks, mark for mark.
class LazyMarkSource {
 public:
  LazyMarkSource(const MarkGenerator& gen, const LazyPlan& plan, const std::vector<std::uint8_t>* fertile_any,
                 const std::vector<std::uint8_t>* sterile_any);

  bool next(Mark& m);
  void activate(std::uint32_t site, Drive category, double time);
  std::size_t generated() const { return generated_; }

 private:
  void open_bin(std::uint32_t bin);
  void generate(std::uint32_t site, Drive category, std::uint32_t bin, double after);
  void push(const Mark& m);

  const MarkGenerator& gen_;
  LazyPlan plan_;
  const std::vector<std::uint8_t>* fertile_any_;
  const std::vector<std::uint8_t>* sterile_any_;
  std::vector<std::uint32_t> fertile_bin_;
  std::vector<std::uint32_t> sterile_bin_;
  std::vector<Mark> heap_;
  std::uint32_t bin_ = 0;
  bool started_ = false;
  double last_ = -1.0;
  std::size_t generated_ = 0;
};

}  // namespace islab
