#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "islab/configuration.hpp"
#include "islab/events.hpp"

namespace islab {

enum class ProcessKind : std::uint8_t { Contact, IS, Spont };

const char* to_string(ProcessKind kind);
ProcessKind parse_process(const std::string& name);

// How a process reads one stream kind.
enum class Role : std::uint8_t { Ignore, FertileArrow, SterileArrow, FertileDeath, SterileDeath };

struct ProcessSpec {
  ProcessKind kind;
  std::array<Role, kStreamKinds> roles{};
  Role role(StreamKind k) const { return roles[static_cast<int>(k)]; }
};

ProcessSpec standard_spec(ProcessKind kind);

// Role maps of the split construction: the lower process adds the auxiliary
// sterile family to its sterile clock, the upper one adds the auxiliary
// fertile family to its fertile arrows.
ProcessSpec split_lower_spec();
ProcessSpec split_upper_spec();

inline std::int8_t apply_role(ProcessKind kind, Role role, std::int8_t src, std::int8_t dst) {
  switch (role) {
    case Role::FertileArrow: return (dst == 0 && src == 1) ? std::int8_t{1} : dst;
    case Role::SterileArrow:
      if (dst != 0) return dst;
      if (kind == ProcessKind::Spont) return -1;
      if (kind == ProcessKind::IS && src == 1) return -1;
      return dst;
    case Role::FertileDeath: return dst == 1 ? std::int8_t{0} : dst;
    case Role::SterileDeath: return dst == -1 ? std::int8_t{0} : dst;
    case Role::Ignore: break;
  }
  return dst;
}

std::int8_t step_semantics(ProcessKind kind, std::int8_t state_src, std::int8_t state_dst, StreamKind mark_kind);

struct TimelineRef {
  std::uint64_t seed = 0;
  double lambda = 0;
  double p = 0;
  double horizon = 0;
};

struct FertileExtent {
  double time;
  // per axis (min, max) coordinate of fertile sites; empty when none
  std::vector<std::pair<std::int64_t, std::int64_t>> bounds;
};

struct Trajectory {
  Configuration initial;
  ProcessKind kind = ProcessKind::Contact;
  TimelineRef timeline;
  std::vector<std::pair<double, Configuration>> snapshots;
  std::optional<double> extinction_time;
  std::size_t fertile_count = 0;
  std::size_t sterile_count = 0;
  std::vector<FertileExtent> extents;
  // Time of the last processed mark, or the horizon when the whole timeline
  // was replayed. Counts above refer to this time.
  double final_time = 0;
  bool stopped_early = false;
  std::size_t applied_marks = 0;
  // First time each site was in state 1 (infinity if never); filled when
  // requested.
  std::vector<double> first_fertile;
};

struct EvolveOptions {
  // Stop once no fertile site is left and every snapshot is recorded.
  bool stop_when_extinct = true;
  bool track_first_fertile = false;
};

Trajectory evolve(const Configuration& initial, ProcessKind kind, const EventTimeline& timeline,
                  const std::vector<double>& snapshot_times, const EvolveOptions& opts = {});

// Same marks as generate_timeline with the generator's key, produced on
// demand.
Trajectory evolve(const Configuration& initial, ProcessKind kind, const MarkGenerator& gen,
                  const std::vector<double>& snapshot_times, const EvolveOptions& opts = {});

MarkGenerator make_generator(const LatticePtr& lattice, double lambda, double p, double horizon, std::uint64_t seed);

std::vector<Coord> reachable_set(const Configuration& initial, ProcessKind kind, const EventTimeline& timeline,
                                 double t);

// Contact only: sites y with an active path from (A(initial), 0) to (y, t),
// found by tracing each target backwards through the marks.
std::vector<Coord> reachable_set_by_paths(const Configuration& initial, const EventTimeline& timeline, double t);

struct Estimate {
  double estimate = 0;
  double stderr_ = 0;
  std::size_t successes = 0;
  std::size_t trials = 0;
};

Estimate binomial_estimate(std::size_t successes, std::size_t trials);

// Fraction of seeds seed0..seed0+n-1 with a fertile site alive at T.
Estimate survival_proxy(ProcessKind kind, double lambda, double p, const Box& box, BoundaryRule rule, double horizon,
                        std::size_t n_trials, std::uint64_t seed0, const Configuration& initial, unsigned workers = 1);

void validate_initial(const Configuration& initial, ProcessKind kind);

}  // namespace islab
