#include "islab/replay.hpp"

namespace islab {

LazyPlan lazy_plan(const std::vector<ProcessSpec>& specs) {
  LazyPlan plan;
  for (int ki = 0; ki < kStreamKinds; ++ki) {
    Drive d = Drive::Off;
    for (const auto& spec : specs) {
      switch (spec.roles[ki]) {
        case Role::FertileArrow:
        case Role::FertileDeath:
          if (d == Drive::Off) d = Drive::FertileSite;
          break;
        case Role::SterileArrow:
          if (spec.kind == ProcessKind::Spont) {
            d = Drive::Always;
          } else if (spec.kind == ProcessKind::IS && d == Drive::Off) {
            d = Drive::FertileSite;
          }
          break;
        case Role::SterileDeath:
          if (spec.kind != ProcessKind::Contact && d == Drive::Off) d = Drive::SterileSite;
          break;
        case Role::Ignore: break;
      }
    }
    plan.drive[ki] = d;
  }
  return plan;
}

MultiReplay::MultiReplay(const Lattice& lattice, const std::vector<ProcessSpec>& specs,
                         const std::vector<const std::vector<std::int8_t>*>& initial, ReplayConfig cfg)
    : lattice_(lattice), cfg_(std::move(cfg)), fertile_any_(lattice.size(), 0), sterile_any_(lattice.size(), 0) {
  if (specs.size() != initial.size() || specs.empty()) throw ParameterError("replay needs one initial state per process");
  if (specs.size() > 255) throw ParameterError("too many coupled processes");
  if (!std::is_sorted(cfg_.snapshots.begin(), cfg_.snapshots.end())) throw ParameterError("snapshot times must be sorted");
  for (double t : cfg_.snapshots) {
    if (t < 0.0 || t > cfg_.horizon) throw ParameterError("snapshot time outside [0, horizon]");
  }
  procs_.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ProcessRun& pr = procs_[i];
    pr.spec = specs[i];
    pr.state = *initial[i];
    if (pr.state.size() != lattice.size()) throw ParameterError("initial state does not match the timeline box");
    for (std::size_t s = 0; s < pr.state.size(); ++s) {
      if (pr.state[s] == 1) {
        ++pr.fertile;
        ++fertile_any_[s];
      } else if (pr.state[s] == -1) {
        ++pr.sterile;
        ++sterile_any_[s];
      }
    }
    if (pr.fertile == 0) pr.extinction = 0.0;
    if (cfg_.track_first_fertile) {
      pr.first_fertile.assign(pr.state.size(), std::numeric_limits<double>::infinity());
      for (std::size_t s = 0; s < pr.state.size(); ++s)
        if (pr.state[s] == 1) pr.first_fertile[s] = 0.0;
    }
  }
}

OrderMonitor& MultiReplay::add_monitor(int lower, int upper, const Relation& relation) {
  monitors_.push_back(OrderMonitor{lower, upper, relation, 0, {}});
  return monitors_.back();
}

bool MultiReplay::all_extinct() const {
  for (const auto& pr : procs_)
    if (pr.fertile > 0) return false;
  return true;
}

void MultiReplay::record_snapshots_before(double t) {
  while (snap_idx_ < cfg_.snapshots.size() && cfg_.snapshots[snap_idx_] < t) {
    for (auto& pr : procs_) pr.snapshots.push_back(pr.state);
    ++snap_idx_;
  }
}

void MultiReplay::check_initial_monitors() {
  for (auto& mon : monitors_) {
    for (std::uint32_t s = 0; s < lattice_.size(); ++s) {
      const std::int8_t lo = procs_[mon.lower].state[s];
      const std::int8_t up = procs_[mon.upper].state[s];
      if (!mon.relation[lo + 1][up + 1]) {
        ++mon.count;
        if (mon.stored.size() < cfg_.max_stored_violations) mon.stored.push_back({0.0, s, lo, up});
      }
    }
  }
}

void MultiReplay::run(const std::vector<Mark>& marks) {
  check_initial_monitors();
  auto no_activation = [](std::uint32_t, Drive, double) {};
  for (const Mark& m : marks) {
    if (m.time > cfg_.horizon) break;
    if (cfg_.stop_when_extinct && snap_idx_ == cfg_.snapshots.size() && all_extinct()) {
      stopped_early_ = true;
      return;
    }
    record_snapshots_before(m.time);
    ++seen_;
    final_time_ = m.time;
    apply(m, no_activation);
  }
  record_snapshots_before(std::numeric_limits<double>::infinity());
  final_time_ = cfg_.horizon;
}

void MultiReplay::run(const MarkGenerator& gen) {
  check_initial_monitors();
  std::vector<ProcessSpec> specs;
  for (const auto& pr : procs_) specs.push_back(pr.spec);
  LazyMarkSource source(gen, lazy_plan(specs), &fertile_any_, &sterile_any_);
  auto activate = [&source](std::uint32_t s, Drive d, double t) { source.activate(s, d, t); };
  Mark m{};
  while (true) {
    if (cfg_.stop_when_extinct && snap_idx_ == cfg_.snapshots.size() && all_extinct()) {
      stopped_early_ = true;
      return;
    }
    if (!source.next(m) || m.time > cfg_.horizon) break;
    record_snapshots_before(m.time);
    ++seen_;
    final_time_ = m.time;
    apply(m, activate);
  }
  record_snapshots_before(std::numeric_limits<double>::infinity());
  final_time_ = cfg_.horizon;
}

}  // namespace islab
