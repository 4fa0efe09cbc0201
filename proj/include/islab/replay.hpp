#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "islab/dynamics.hpp"
#include "islab/order.hpp"

namespace islab {

struct Violation {
  double time;
  std::uint32_t site;
  std::int8_t lower;
  std::int8_t upper;
};

struct OrderMonitor {
  int lower;
  int upper;
  Relation relation;
  std::size_t count = 0;
  std::vector<Violation> stored;
};

struct ReplayConfig {
  double horizon = 0;
  std::vector<double> snapshots;  // sorted, within [0, horizon]
  bool stop_when_extinct = true;
  bool track_first_fertile = false;
  std::size_t max_stored_violations = 32;
};

struct ProcessRun {
  ProcessSpec spec;
  std::vector<std::int8_t> state;
  std::size_t fertile = 0;
  std::size_t sterile = 0;
  double extinction = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::int8_t>> snapshots;
  std::vector<double> first_fertile;
  std::size_t applied = 0;
};

// Drives up to a handful of processes through one mark sequence, in order,
// checking order monitors at every state change.
class MultiReplay {
 public:
  MultiReplay(const Lattice& lattice, const std::vector<ProcessSpec>& specs,
              const std::vector<const std::vector<std::int8_t>*>& initial, ReplayConfig cfg);

  OrderMonitor& add_monitor(int lower, int upper, const Relation& relation);

  void run(const std::vector<Mark>& marks);
  void run(const MarkGenerator& gen);

  const ProcessRun& process(int i) const { return procs_[i]; }
  const std::vector<OrderMonitor>& monitors() const { return monitors_; }
  double final_time() const { return final_time_; }
  bool stopped_early() const { return stopped_early_; }
  std::size_t marks_seen() const { return seen_; }

 private:
  bool all_extinct() const;
  void record_snapshots_before(double t);
  void check_initial_monitors();
  template <class Activate>
  bool apply(const Mark& m, Activate&& activate);

  const Lattice& lattice_;
  ReplayConfig cfg_;
  std::vector<ProcessRun> procs_;
  std::vector<OrderMonitor> monitors_;
  std::vector<std::uint8_t> fertile_any_;
  std::vector<std::uint8_t> sterile_any_;
  std::size_t snap_idx_ = 0;
  double final_time_ = 0;
  bool stopped_early_ = false;
  std::size_t seen_ = 0;
};

LazyPlan lazy_plan(const std::vector<ProcessSpec>& specs);

// Trajectory summary of process `index` after a replay; `snaps` are the
// sorted snapshot times the replay was configured with.
Trajectory trajectory_of(const Configuration& initial, ProcessKind kind, const TimelineRef& ref,
                         const MultiReplay& replay, int index, const std::vector<double>& snaps);

template <class Activate>
bool MultiReplay::apply(const Mark& m, Activate&& activate) {
  bool changed = false;
  const std::uint32_t s = m.dst;
  for (auto& pr : procs_) {
    const Role role = pr.spec.role(m.kind);
    if (role == Role::Ignore) continue;
    const std::int8_t old = pr.state[s];
    const std::int8_t src = m.src == kOutside ? std::int8_t{0} : pr.state[m.src];
    const std::int8_t now = apply_role(pr.spec.kind, role, src, old);
    if (now == old) continue;
    pr.state[s] = now;
    ++pr.applied;
    changed = true;
    if (old == 1) {
      --pr.fertile;
      --fertile_any_[s];
      if (pr.fertile == 0) pr.extinction = m.time;
    } else if (old == -1) {
      --pr.sterile;
      --sterile_any_[s];
    }
    if (now == 1) {
      ++pr.fertile;
      if (fertile_any_[s]++ == 0) activate(s, Drive::FertileSite, m.time);
      if (cfg_.track_first_fertile && pr.first_fertile[s] > m.time) pr.first_fertile[s] = m.time;
    } else if (now == -1) {
      ++pr.sterile;
      if (sterile_any_[s]++ == 0) activate(s, Drive::SterileSite, m.time);
    }
  }
  if (changed) {
    for (auto& mon : monitors_) {
      const std::int8_t lo = procs_[mon.lower].state[s];
      const std::int8_t up = procs_[mon.upper].state[s];
      if (!mon.relation[lo + 1][up + 1]) {
        ++mon.count;
        if (mon.stored.size() < cfg_.max_stored_violations) mon.stored.push_back({m.time, s, lo, up});
      }
    }
  }
  return changed;
}

}  // namespace islab
