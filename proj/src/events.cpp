#include "islab/events.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace islab {

const char* to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::BirthFertile: return "birth_fertile";
    case StreamKind::BirthSterile: return "birth_sterile";
    case StreamKind::DeathFertile: return "death_fertile";
    case StreamKind::DeathSterile: return "death_sterile";
    case StreamKind::AuxFertile: return "aux_fertile";
    case StreamKind::AuxSterile: return "aux_sterile";
  }
  return "?";
}

void validate_rates(double lambda, double p, double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon T must be positive and finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0,1]");
}

MarkRates standard_rates(double lambda, double p) {
  MarkRates r;
  r[StreamKind::BirthFertile] = lambda * p;
  r[StreamKind::BirthSterile] = lambda * (1.0 - p);
  r[StreamKind::DeathFertile] = 1.0;
  r[StreamKind::DeathSterile] = 1.0;
  return r;
}

MarkRates split_rates(double lambda, double p1, double p2) {
  MarkRates r = standard_rates(lambda, p1);
  r[StreamKind::BirthSterile] = lambda * (1.0 - p2);
  r[StreamKind::AuxFertile] = lambda * (p2 - p1);
  r[StreamKind::AuxSterile] = lambda * (p2 - p1);
  return r;
}

MarkGenerator::MarkGenerator(LatticePtr lattice, const MarkRates& rates, std::uint64_t seed, double horizon)
    : lattice_(std::move(lattice)), rates_(rates), seed_(seed), horizon_(horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon T must be positive and finite");
  for (int k = 0; k < kStreamKinds; ++k) {
    if (rates_.rate[k] < 0.0 || !std::isfinite(rates_.rate[k])) throw ParameterError("mark rates must be nonnegative");
    if (rates_.rate[k] > 500.0) throw ParameterError("mark rate too large for unit-bin generation");
    exp_neg_[k] = std::exp(-rates_.rate[k]);
  }
  bins_ = static_cast<std::uint32_t>(std::ceil(horizon_));
}

std::size_t EventTimeline::count(StreamKind k) const {
  return static_cast<std::size_t>(
      std::count_if(marks.begin(), marks.end(), [k](const Mark& m) { return m.kind == k; }));
}

std::vector<Mark> materialize(const MarkGenerator& gen) {
  std::vector<Mark> marks;
  const Lattice& lat = gen.lattice();
  auto sink = [&marks](const Mark& m) { marks.push_back(m); };
  for (std::uint32_t bin = 0; bin < gen.bins(); ++bin) {
    for (std::uint32_t y = 0; y < lat.size(); ++y) {
      for (int ki = 0; ki < kStreamKinds; ++ki) {
        const auto kind = static_cast<StreamKind>(ki);
        if (gen.rates().rate[ki] <= 0.0) continue;
        if (is_edge_kind(kind)) {
          for (int k = 0; k < lat.degree(); ++k) gen.edge_bin(kind, y, k, bin, -1.0, sink);
        } else {
          gen.site_bin(kind, y, bin, -1.0, sink);
        }
      }
    }
  }
  std::sort(marks.begin(), marks.end(), mark_before);
  double last = -1.0;
  for (auto& m : marks) {
    m.time = strictly_after(m.time, last);
    last = m.time;
  }
  return marks;
}

EventTimeline generate_timeline(const LatticePtr& lattice, double lambda, double p, double horizon,
                                std::uint64_t seed) {
  validate_rates(lambda, p, horizon);
  EventTimeline t;
  t.lattice = lattice;
  t.horizon = horizon;
  t.seed = seed;
  t.lambda = lambda;
  t.p = p;
  t.rates = standard_rates(lambda, p);
  t.marks = materialize(MarkGenerator(lattice, t.rates, seed, horizon));
  return t;
}

EventTimeline generate_timeline(const Box& box, BoundaryRule rule, double lambda, double p, double horizon,
                                std::uint64_t seed) {
  return generate_timeline(make_lattice(box, rule), lambda, p, horizon, seed);
}

SplitTimeline generate_split_timeline(const LatticePtr& lattice, double lambda, double p1, double p2, double horizon,
                                      std::uint64_t seed) {
  validate_rates(lambda, p1, horizon);
  validate_rates(lambda, p2, horizon);
  if (p1 > p2) throw ParameterError("split timeline needs p1 <= p2");
  SplitTimeline s;
  s.p1 = p1;
  s.p2 = p2;
  EventTimeline& t = s.timeline;
  t.lattice = lattice;
  t.horizon = horizon;
  t.seed = seed;
  t.lambda = lambda;
  t.p = p1;
  t.rates = split_rates(lambda, p1, p2);
  t.marks = materialize(MarkGenerator(lattice, t.rates, seed, horizon));
  return s;
}

SplitTimeline generate_split_timeline(const Box& box, BoundaryRule rule, double lambda, double p1, double p2,
                                      double horizon, std::uint64_t seed) {
  return generate_split_timeline(make_lattice(box, rule), lambda, p1, p2, horizon, seed);
}

EventTimeline restrict(const EventTimeline& t, const Box& sub, double t0, double t1) {
  const Box& box = t.box();
  if (!box.contains(sub)) throw ContainmentError("restriction box " + to_string(sub) + " not inside " + to_string(box));
  if (!(t0 >= 0.0 && t0 < t1 && t1 <= t.horizon)) throw ParameterError("restriction window must satisfy 0<=t0<t1<=T");
  EventTimeline r;
  r.lattice = sub == box ? t.lattice : make_lattice(sub, BoundaryRule::AbsorbingEmpty);
  r.horizon = t1 - t0;
  r.seed = t.seed;
  r.lambda = t.lambda;
  r.p = t.p;
  r.rates = t.rates;

  std::vector<std::uint32_t> remap(box.volume(), kOutside);
  for (std::size_t off = 0; off < box.volume(); ++off) {
    const Coord x = box.coord(off);
    if (sub.contains(x)) remap[off] = static_cast<std::uint32_t>(sub.offset(x));
  }
  auto first = std::lower_bound(t.marks.begin(), t.marks.end(), t0,
                                [](const Mark& m, double v) { return m.time < v; });
  for (auto it = first; it != t.marks.end() && it->time <= t1; ++it) {
    const Mark& m = *it;
    const std::uint32_t dst = remap[m.dst];
    if (dst == kOutside) continue;
    std::uint32_t src = m.src == kOutside ? kOutside : remap[m.src];
    if (is_edge_kind(m.kind) && !is_sterile_arrow(m.kind) && src == kOutside) continue;
    Mark out = m;
    out.time = m.time - t0;
    out.src = is_edge_kind(m.kind) ? src : dst;
    out.dst = dst;
    r.marks.push_back(out);
  }
  double last = -1.0;
  for (auto& m : r.marks) {
    m.time = strictly_after(m.time, last);
    last = m.time;
  }
  return r;
}

namespace {
void write_coord(std::ostream& os, const Coord& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) os << ';';
    os << x[i];
  }
}
}  // namespace

void dump_timeline(const EventTimeline& t, std::ostream& os) {
  const Box& box = t.box();
  os << std::setprecision(17);
  for (const Mark& m : t.marks) {
    os << m.time << ',' << to_string(m.kind) << ',';
    if (is_edge_kind(m.kind)) {
      if (m.src == kOutside) {
        // Restricted timelines lose the source site; recover it from the direction.
        Coord src = box.coord(m.dst);
        src[m.dir / 2] -= (m.dir % 2 == 0) ? 1 : -1;
        write_coord(os, src);
      } else {
        write_coord(os, box.coord(m.src));
      }
      os << '>';
    }
    write_coord(os, box.coord(m.dst));
    os << '\n';
  }
}

LazyMarkSource::LazyMarkSource(const MarkGenerator& gen, const LazyPlan& plan,
                               const std::vector<std::uint8_t>* fertile_any,
                               const std::vector<std::uint8_t>* sterile_any)
    : gen_(gen),
      plan_(plan),
      fertile_any_(fertile_any),
      sterile_any_(sterile_any),
      fertile_bin_(gen.lattice().size(), 0xffffffffu),
      sterile_bin_(gen.lattice().size(), 0xffffffffu) {}

void LazyMarkSource::push(const Mark& m) {
  heap_.push_back(m);
  std::push_heap(heap_.begin(), heap_.end(), [](const Mark& a, const Mark& b) { return mark_before(b, a); });
  ++generated_;
}

void LazyMarkSource::generate(std::uint32_t site, Drive category, std::uint32_t bin, double after) {
  const Lattice& lat = gen_.lattice();
  auto sink = [this](const Mark& m) { push(m); };
  for (int ki = 0; ki < kStreamKinds; ++ki) {
    if (plan_.drive[ki] != category) continue;
    const auto kind = static_cast<StreamKind>(ki);
    if (!is_edge_kind(kind)) {
      gen_.site_bin(kind, site, bin, after, sink);
    } else if (category == Drive::FertileSite) {
      // arrows leaving the site
      for (int k = 0; k < lat.degree(); ++k) {
        const std::uint32_t dst = lat.out_dst(site, k);
        if (dst != kOutside) gen_.edge_bin(kind, dst, k, bin, after, sink);
      }
    }
  }
}

void LazyMarkSource::open_bin(std::uint32_t bin) {
  bin_ = bin;
  const Lattice& lat = gen_.lattice();
  const double start = static_cast<double>(bin) - 1.0;
  bool any_always = false;
  for (auto d : plan_.drive) any_always |= d == Drive::Always;
  auto sink = [this](const Mark& m) { push(m); };
  for (std::uint32_t s = 0; s < lat.size(); ++s) {
    if ((*fertile_any_)[s]) {
      fertile_bin_[s] = bin;
      generate(s, Drive::FertileSite, bin, start);
    }
    if ((*sterile_any_)[s]) {
      sterile_bin_[s] = bin;
      generate(s, Drive::SterileSite, bin, start);
    }
    if (!any_always) continue;
    for (int ki = 0; ki < kStreamKinds; ++ki) {
      if (plan_.drive[ki] != Drive::Always) continue;
      const auto kind = static_cast<StreamKind>(ki);
      for (int k = 0; k < lat.degree(); ++k) gen_.edge_bin(kind, s, k, bin, start, sink);
    }
  }
}

bool LazyMarkSource::next(Mark& m) {
  while (heap_.empty()) {
    const std::uint32_t nb = started_ ? bin_ + 1 : 0;
    if (nb >= gen_.bins()) return false;
    started_ = true;
    open_bin(nb);
  }
  std::pop_heap(heap_.begin(), heap_.end(), [](const Mark& a, const Mark& b) { return mark_before(b, a); });
  m = heap_.back();
  heap_.pop_back();
  m.time = strictly_after(m.time, last_);
  last_ = m.time;
  return true;
}

void LazyMarkSource::activate(std::uint32_t site, Drive category, double time) {
  if (!started_) return;  // the first bin reads the activity arrays when it opens
  auto& stamp = category == Drive::FertileSite ? fertile_bin_[site] : sterile_bin_[site];
  if (stamp == bin_) return;
  stamp = bin_;
  generate(site, category, bin_, time);
}

}  // namespace islab
