#include "islab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "islab/parallel.hpp"
#include "islab/replay.hpp"

namespace islab {

const char* to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::Contact: return "contact";
    case ProcessKind::IS: return "is";
    case ProcessKind::Spont: return "spont";
  }
  return "?";
}

ProcessKind parse_process(const std::string& name) {
  if (name == "contact") return ProcessKind::Contact;
  if (name == "is") return ProcessKind::IS;
  if (name == "spont") return ProcessKind::Spont;
  throw ParameterError("unknown process kind '" + name + "' (expected contact, is or spont)");
}

ProcessSpec standard_spec(ProcessKind kind) {
  ProcessSpec s{kind, {}};
  s.roles.fill(Role::Ignore);
  s.roles[static_cast<int>(StreamKind::BirthFertile)] = Role::FertileArrow;
  s.roles[static_cast<int>(StreamKind::DeathFertile)] = Role::FertileDeath;
  if (kind != ProcessKind::Contact) {
    s.roles[static_cast<int>(StreamKind::BirthSterile)] = Role::SterileArrow;
    s.roles[static_cast<int>(StreamKind::DeathSterile)] = Role::SterileDeath;
  }
  return s;
}

ProcessSpec split_lower_spec() {
  ProcessSpec s = standard_spec(ProcessKind::Spont);
  s.roles[static_cast<int>(StreamKind::AuxSterile)] = Role::SterileArrow;
  return s;
}

ProcessSpec split_upper_spec() {
  ProcessSpec s = standard_spec(ProcessKind::Spont);
  s.roles[static_cast<int>(StreamKind::AuxFertile)] = Role::FertileArrow;
  return s;
}

std::int8_t step_semantics(ProcessKind kind, std::int8_t state_src, std::int8_t state_dst, StreamKind mark_kind) {
  return apply_role(kind, standard_spec(kind).role(mark_kind), state_src, state_dst);
}

void validate_initial(const Configuration& initial, ProcessKind kind) {
  if (kind == ProcessKind::Contact && initial.has_sterile())
    throw ParameterError("contact process configurations cannot contain -1");
}

MarkGenerator make_generator(const LatticePtr& lattice, double lambda, double p, double horizon, std::uint64_t seed) {
  validate_rates(lambda, p, horizon);
  return MarkGenerator(lattice, standard_rates(lambda, p), seed, horizon);
}

Trajectory trajectory_of(const Configuration& initial, ProcessKind kind, const TimelineRef& ref,
                         const MultiReplay& replay, int index, const std::vector<double>& snaps) {
  const ProcessRun& pr = replay.process(index);
  const Box& box = initial.box();
  Trajectory tr;
  tr.initial = initial;
  tr.kind = kind;
  tr.timeline = ref;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    Configuration c(box, pr.snapshots[i]);
    FertileExtent ext{snaps[i], {}};
    for (std::size_t s = 0; s < c.states().size(); ++s) {
      if (c.states()[s] != 1) continue;
      const Coord x = box.coord(s);
      if (ext.bounds.empty()) {
        for (auto v : x) ext.bounds.emplace_back(v, v);
      } else {
        for (std::size_t a = 0; a < x.size(); ++a) {
          ext.bounds[a].first = std::min(ext.bounds[a].first, x[a]);
          ext.bounds[a].second = std::max(ext.bounds[a].second, x[a]);
        }
      }
    }
    tr.extents.push_back(std::move(ext));
    tr.snapshots.emplace_back(snaps[i], std::move(c));
  }
  if (std::isfinite(pr.extinction)) tr.extinction_time = pr.extinction;
  tr.fertile_count = pr.fertile;
  tr.sterile_count = pr.sterile;
  tr.final_time = replay.final_time();
  tr.stopped_early = replay.stopped_early();
  tr.applied_marks = pr.applied;
  tr.first_fertile = pr.first_fertile;
  return tr;
}

namespace {

std::vector<double> sorted_times(std::vector<double> t) {
  std::sort(t.begin(), t.end());
  return t;
}

template <class Source>
Trajectory evolve_impl(const Configuration& initial, ProcessKind kind, const Lattice& lattice, const TimelineRef& ref,
                       const Source& source, const std::vector<double>& snapshot_times, const EvolveOptions& opts) {
  if (!(initial.box() == lattice.box())) throw ParameterError("initial configuration box differs from the timeline box");
  validate_initial(initial, kind);
  ReplayConfig cfg;
  cfg.horizon = ref.horizon;
  cfg.snapshots = sorted_times(snapshot_times);
  cfg.stop_when_extinct = opts.stop_when_extinct;
  cfg.track_first_fertile = opts.track_first_fertile;
  MultiReplay replay(lattice, {standard_spec(kind)}, {&initial.states()}, cfg);
  replay.run(source);
  return trajectory_of(initial, kind, ref, replay, 0, cfg.snapshots);
}

}  // namespace

Trajectory evolve(const Configuration& initial, ProcessKind kind, const EventTimeline& timeline,
                  const std::vector<double>& snapshot_times, const EvolveOptions& opts) {
  TimelineRef ref{timeline.seed, timeline.lambda, timeline.p, timeline.horizon};
  return evolve_impl(initial, kind, *timeline.lattice, ref, timeline.marks, snapshot_times, opts);
}

Trajectory evolve(const Configuration& initial, ProcessKind kind, const MarkGenerator& gen,
                  const std::vector<double>& snapshot_times, const EvolveOptions& opts) {
  const MarkRates& r = gen.rates();
  const double lambda = r[StreamKind::BirthFertile] + r[StreamKind::BirthSterile];
  TimelineRef ref{gen.seed(), lambda, lambda > 0 ? r[StreamKind::BirthFertile] / lambda : 0.0, gen.horizon()};
  return evolve_impl(initial, kind, gen.lattice(), ref, gen, snapshot_times, opts);
}

std::vector<Coord> reachable_set(const Configuration& initial, ProcessKind kind, const EventTimeline& timeline,
                                 double t) {
  const Trajectory tr = evolve(initial, kind, timeline, {t});
  return tr.snapshots.front().second.fertile_sites();
}

std::vector<Coord> reachable_set_by_paths(const Configuration& initial, const EventTimeline& timeline, double t) {
  validate_initial(initial, ProcessKind::Contact);
  if (!(initial.box() == timeline.box())) throw ParameterError("initial configuration box differs from the timeline box");
  if (t < 0.0 || t > timeline.horizon) throw ParameterError("query time outside [0, horizon]");
  const Box& box = timeline.box();
  const auto end = std::upper_bound(timeline.marks.begin(), timeline.marks.end(), t,
                                    [](double v, const Mark& m) { return v < m.time; });
  std::vector<Coord> out;
  std::vector<char> live(box.volume());
  for (std::uint32_t y = 0; y < box.volume(); ++y) {
    // Sites from which an active path reaches (y, t), scanning time backwards.
    std::fill(live.begin(), live.end(), 0);
    live[y] = 1;
    std::size_t n_live = 1;
    for (auto it = end; it != timeline.marks.begin() && n_live > 0;) {
      --it;
      const Mark& m = *it;
      if (m.kind == StreamKind::DeathFertile) {
        if (live[m.dst]) {
          live[m.dst] = 0;
          --n_live;
        }
      } else if (m.kind == StreamKind::BirthFertile) {
        if (live[m.dst] && !live[m.src]) {
          live[m.src] = 1;
          ++n_live;
        }
      }
    }
    bool hit = false;
    for (std::uint32_t x = 0; x < box.volume() && !hit; ++x) hit = live[x] && initial.states()[x] == 1;
    if (hit) out.push_back(box.coord(y));
  }
  return out;
}

Estimate binomial_estimate(std::size_t successes, std::size_t trials) {
  Estimate e;
  e.successes = successes;
  e.trials = trials;
  if (trials == 0) return e;
  e.estimate = static_cast<double>(successes) / static_cast<double>(trials);
  e.stderr_ = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(trials));
  return e;
}

Estimate survival_proxy(ProcessKind kind, double lambda, double p, const Box& box, BoundaryRule rule, double horizon,
                        std::size_t n_trials, std::uint64_t seed0, const Configuration& initial, unsigned workers) {
  if (n_trials == 0) throw ParameterError("survival proxy needs at least one trial");
  validate_rates(lambda, p, horizon);
  validate_initial(initial, kind);
  if (!(initial.box() == box)) throw ParameterError("initial configuration box differs from the simulation box");
  const LatticePtr lattice = make_lattice(box, rule);
  auto alive = parallel_map(n_trials, workers, [&](std::size_t i) -> char {
    const MarkGenerator gen = make_generator(lattice, lambda, p, horizon, seed0 + i);
    return evolve(initial, kind, gen, {}).fertile_count > 0;
  });
  return binomial_estimate(static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1)), n_trials);
}

}  // namespace islab
