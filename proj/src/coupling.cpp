#include "islab/coupling.hpp"

#include <algorithm>

#include "islab/parallel.hpp"

namespace islab {

const char* to_string(PairKind kind) {
  switch (kind) {
    case PairKind::IsContact: return "is-contact";
    case PairKind::SpontIs: return "spont-is";
    case PairKind::SpontSpont: return "spont-spont";
  }
  return "?";
}

PairKind parse_pair(const std::string& name) {
  if (name == "is-contact") return PairKind::IsContact;
  if (name == "spont-is") return PairKind::SpontIs;
  if (name == "spont-spont") return PairKind::SpontSpont;
  throw ParameterError("unknown pair '" + name + "' (expected is-contact, spont-is or spont-spont)");
}

std::pair<ProcessSpec, ProcessSpec> pair_specs(PairKind kind) {
  switch (kind) {
    case PairKind::IsContact: return {standard_spec(ProcessKind::IS), standard_spec(ProcessKind::Contact)};
    case PairKind::SpontIs: return {standard_spec(ProcessKind::Spont), standard_spec(ProcessKind::IS)};
    case PairKind::SpontSpont: return {split_lower_spec(), split_upper_spec()};
  }
  throw ParameterError("unknown pair kind");
}

namespace {


void validate_params(const PairParams& params, double horizon) {
  validate_rates(params.lambda, params.p1, horizon);
  if (params.pair == PairKind::SpontSpont) {
    validate_rates(params.lambda, params.p2, horizon);
    if (params.p1 > params.p2) throw ParameterError("spont-spont coupling needs p1 <= p2");
  }
}

Coord centre(const Box& box) {
  Coord c(box.dim());
  for (int a = 0; a < box.dim(); ++a) c[a] = box.lo()[a] + (box.hi()[a] - box.lo()[a]) / 2;
  return c;
}

template <class Source>
CoupledPair run_coupled(const PairParams& params, const Configuration& lower0, const Configuration& upper0,
                        const Lattice& lattice, const TimelineRef& ref, const Source& source,
                        std::vector<double> snapshots, bool stop_when_extinct) {
  if (!(lower0.box() == lattice.box()) || !(upper0.box() == lattice.box()))
    throw ParameterError("initial configuration box differs from the timeline box");
  const auto specs = pair_specs(params.pair);
  validate_initial(lower0, specs.first.kind);
  validate_initial(upper0, specs.second.kind);
  const Relation rel = StateOrder::neg_first().relation();
  require_ordered(lower0, upper0, rel);
  std::sort(snapshots.begin(), snapshots.end());
  ReplayConfig cfg;
  cfg.horizon = ref.horizon;
  cfg.snapshots = snapshots;
  cfg.stop_when_extinct = stop_when_extinct;
  MultiReplay replay(lattice, {specs.first, specs.second}, {&lower0.states(), &upper0.states()}, cfg);
  replay.add_monitor(0, 1, rel);
  replay.run(source);
  CoupledPair out;
  out.params = params;
  out.lower = trajectory_of(lower0, specs.first.kind, ref, replay, 0, snapshots);
  out.upper = trajectory_of(upper0, specs.second.kind, ref, replay, 1, snapshots);
  out.violation_count = replay.monitors()[0].count;
  out.violations = replay.monitors()[0].stored;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (out.lower.snapshots[i].second.fertile_count() > out.upper.snapshots[i].second.fertile_count())
      out.counts_ordered = false;
  }
  if (out.lower.fertile_count > out.upper.fertile_count) out.counts_ordered = false;
  return out;
}

TimelineRef ref_of(const EventTimeline& t) { return {t.seed, t.lambda, t.p, t.horizon}; }

}  // namespace

MarkRates pair_rates(const PairParams& params) {
  if (params.pair == PairKind::SpontSpont) return split_rates(params.lambda, params.p1, params.p2);
  return standard_rates(params.lambda, params.p1);
}

MarkGenerator make_pair_generator(const LatticePtr& lattice, const PairParams& params, double horizon,
                                  std::uint64_t seed) {
  validate_params(params, horizon);
  return MarkGenerator(lattice, pair_rates(params), seed, horizon);
}

void require_ordered(const Configuration& lower, const Configuration& upper, const Relation& rel) {
  if (!(lower.box() == upper.box())) throw ParameterError("coupled configurations live on different boxes");
  for (std::size_t s = 0; s < lower.states().size(); ++s) {
    const int a = lower.states()[s], b = upper.states()[s];
    if (!rel[a + 1][b + 1])
      throw ParameterError("initial configurations are not ordered at " + std::to_string(s) + " (" +
                           std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

CoupledPair couple_is_contact(const Configuration& eta0, const Configuration& zeta0, const EventTimeline& timeline,
                              const std::vector<double>& snapshots) {
  const PairParams params{PairKind::IsContact, timeline.lambda, timeline.p, timeline.p};
  return run_coupled(params, eta0, zeta0, *timeline.lattice, ref_of(timeline), timeline.marks, snapshots, false);
}

CoupledPair couple_spont_is(const Configuration& xi0, const Configuration& eta0, const EventTimeline& timeline,
                            const std::vector<double>& snapshots) {
  const PairParams params{PairKind::SpontIs, timeline.lambda, timeline.p, timeline.p};
  return run_coupled(params, xi0, eta0, *timeline.lattice, ref_of(timeline), timeline.marks, snapshots, false);
}

CoupledPair couple_spont_spont(const Configuration& xi1, const Configuration& xi2, const SplitTimeline& split,
                               const std::vector<double>& snapshots) {
  const PairParams params{PairKind::SpontSpont, split.timeline.lambda, split.p1, split.p2};
  return run_coupled(params, xi1, xi2, *split.timeline.lattice, ref_of(split.timeline), split.timeline.marks,
                     snapshots, false);
}

CoupledPair couple_lazy(const PairParams& params, const Configuration& lower0, const Configuration& upper0,
                        const MarkGenerator& gen, const std::vector<double>& snapshots) {
  validate_params(params, gen.horizon());
  const TimelineRef ref{gen.seed(), params.lambda, params.p1, gen.horizon()};
  return run_coupled(params, lower0, upper0, gen.lattice(), ref, gen, snapshots, true);
}

PairSuiteResult run_pair_suite(const PairParams& params, const Box& box, BoundaryRule rule, double horizon,
                               std::size_t trials, std::uint64_t seed0, unsigned workers) {
  validate_params(params, horizon);
  const LatticePtr lattice = make_lattice(box, rule);
  const Configuration init = Configuration::with_sites(box, {centre(box)});
  struct Row {
    std::size_t violations;
    bool count_breach;
    bool lower_alive;
    bool upper_alive;
  };
  const auto rows = parallel_map(trials, workers, [&](std::size_t i) {
    const MarkGenerator gen = make_pair_generator(lattice, params, horizon, seed0 + i);
    const CoupledPair c = couple_lazy(params, init, init, gen);
    return Row{c.violation_count, !c.counts_ordered, c.lower.fertile_count > 0, c.upper.fertile_count > 0};
  });
  PairSuiteResult r;
  r.params = params;
  r.trials = trials;
  for (const Row& row : rows) {
    r.violations += row.violations;
    r.seeds_with_violations += row.violations > 0;
    r.count_breaches += row.count_breach;
    r.lower_alive += row.lower_alive;
    r.upper_alive += row.upper_alive;
  }
  return r;
}

SandwichResult run_sandwich(double lambda, double p, const Box& box, BoundaryRule rule, double horizon,
                            std::size_t trials, std::uint64_t seed0, unsigned workers, bool keep_seeds) {
  validate_rates(lambda, p, horizon);
  if (trials == 0) throw ParameterError("sandwich run needs at least one trial");
  const LatticePtr lattice = make_lattice(box, rule);
  const Configuration init = Configuration::with_sites(box, {centre(box)});
  const std::vector<ProcessSpec> specs = {standard_spec(ProcessKind::Spont), standard_spec(ProcessKind::IS),
                                          standard_spec(ProcessKind::Contact)};
  const Relation rel = StateOrder::neg_first().relation();
  struct Row {
    std::array<char, 3> alive;
    std::size_t v01, v12;
  };
  const auto rows = parallel_map(trials, workers, [&](std::size_t i) {
    const MarkGenerator gen = make_generator(lattice, lambda, p, horizon, seed0 + i);
    ReplayConfig cfg;
    cfg.horizon = horizon;
    MultiReplay replay(*lattice, specs, {&init.states(), &init.states(), &init.states()}, cfg);
    replay.add_monitor(0, 1, rel);
    replay.add_monitor(1, 2, rel);
    replay.run(gen);
    Row r{};
    for (int k = 0; k < 3; ++k) r.alive[k] = replay.process(k).fertile > 0;
    r.v01 = replay.monitors()[0].count;
    r.v12 = replay.monitors()[1].count;
    return r;
  });
  SandwichResult out;
  out.lambda = lambda;
  out.p = p;
  out.trials = trials;
  out.seed0 = seed0;
  for (const Row& r : rows) {
    for (int k = 0; k < 3; ++k) out.alive[k] += r.alive[k];
    out.spont_is_violations += r.v01;
    out.is_contact_violations += r.v12;
    out.seeds_with_violations += (r.v01 + r.v12) > 0;
    out.count_breaches += r.alive[0] > r.alive[1] || r.alive[1] > r.alive[2];
    if (keep_seeds) out.per_seed.push_back(r.alive);
  }
  return out;
}

std::map<PairState, double> coupled_rates(const PairParams& params, PairState from, int n_lower, int n_upper,
                                          int dim) {
  const double l = params.lambda, p = params.p1;
  const double deg = 2.0 * dim;
  std::map<PairState, double> r;
  auto add = [&r](std::int8_t a, std::int8_t b, double rate) {
    if (rate > 0.0) r[{a, b}] += rate;
  };
  const auto [a, b] = from;
  switch (params.pair) {
    case PairKind::IsContact:
      // eta below, zeta above
      if (a == 1 && b == 1) add(0, 0, 1);
      if (a == 0 && b == 1) {
        add(0, 0, 1);
        add(1, 1, l * p * n_lower);
        add(-1, 1, l * (1 - p) * n_lower);
      }
      if (a == 0 && b == 0) {
        add(1, 1, l * p * n_lower);
        add(0, 1, l * p * (n_upper - n_lower));
        add(-1, 0, l * (1 - p) * n_lower);
      }
      if (a == -1 && b == 1) {
        add(0, 1, 1);
        add(-1, 0, 1);
      }
      if (a == -1 && b == 0) {
        add(-1, 1, l * p * n_upper);
        add(0, 0, 1);
      }
      break;
    case PairKind::SpontIs:
      // xi below, eta above
      if (a == 0 && b == 0) {
        add(1, 1, l * p * n_lower);
        add(0, 1, l * p * (n_upper - n_lower));
        add(-1, -1, l * (1 - p) * n_upper);
        add(-1, 0, l * (1 - p) * (deg - n_upper));
      }
      if (a == 0 && b == 1) {
        add(0, 0, 1);
        add(-1, 1, deg * l * (1 - p));
        add(1, 1, l * p * n_lower);
      }
      if (a == -1 && b == 1) {
        add(-1, 0, 1);
        add(0, 1, 1);
      }
      if (a == -1 && b == -1) add(0, 0, 1);
      if (a == -1 && b == 0) {
        add(0, 0, 1);
        add(-1, 1, l * p * n_upper);
        add(-1, -1, l * (1 - p) * n_upper);
      }
      if (a == 1 && b == 1) add(0, 0, 1);
      break;
    case PairKind::SpontSpont: {
      const double p1 = params.p1, p2 = params.p2;
      if (a == 0 && b == 0) {
        add(1, 1, l * p1 * n_lower);
        add(0, 1, l * p2 * n_upper - l * p1 * n_lower);
        add(-1, -1, deg * l * (1 - p2));
        add(-1, 0, deg * l * (p2 - p1));
      }
      if (a == 0 && b == 1) {
        add(0, 0, 1);
        add(-1, 1, deg * l * (1 - p1));
        add(1, 1, l * p1 * n_lower);
      }
      if (a == -1 && b == 1) {
        add(-1, 0, 1);
        add(0, 1, 1);
      }
      if (a == -1 && b == -1) add(0, 0, 1);
      if (a == -1 && b == 0) {
        add(0, 0, 1);
        add(-1, 1, l * p2 * n_upper);
        // the upper process only sees its own sterile family here
        add(-1, -1, deg * l * (1 - p2));
      }
      if (a == 1 && b == 1) add(0, 0, 1);
      break;
    }
  }
  return r;
}

std::optional<FirstChange> first_change(const PairParams& params, const Configuration& lower0,
                                        const Configuration& upper0, const std::vector<Mark>& marks) {
  const auto specs = pair_specs(params.pair);
  const auto& lo = lower0.states();
  const auto& up = upper0.states();
  for (const Mark& m : marks) {
    const std::uint32_t s = m.dst;
    auto step = [&](const ProcessSpec& spec, const std::vector<std::int8_t>& st) {
      const Role role = spec.role(m.kind);
      if (role == Role::Ignore) return st[s];
      const std::int8_t src = m.src == kOutside ? std::int8_t{0} : st[m.src];
      return apply_role(spec.kind, role, src, st[s]);
    };
    const std::int8_t a = step(specs.first, lo), b = step(specs.second, up);
    if (a != lo[s] || b != up[s]) return FirstChange{m.time, s, {lo[s], up[s]}, {a, b}};
  }
  return std::nullopt;
}

std::optional<OrderWitness> find_order_violation_is(const StateOrder& order, double lambda, double p,
                                                    std::size_t search_budget) {
  const Box box = Box::cube(1, 0, 1);
  const LatticePtr lattice = make_lattice(box, BoundaryRule::AbsorbingEmpty);
  // x = 0, y = 1
  Configuration first(box), second(box);
  if (order.kind() == OrderKind::ZeroFirst) {
    first.set({0}, 1);
    second.set({0}, 1);
    second.set({1}, -1);
  } else {
    second.set({0}, 1);
  }
  require_ordered(first, second, order.relation());
  const ProcessSpec spec = standard_spec(ProcessKind::IS);
  for (std::uint64_t seed = 0; seed < search_budget; ++seed) {
    const EventTimeline t = generate_timeline(lattice, lambda, p, 1.0, seed);
    ReplayConfig cfg;
    cfg.horizon = t.horizon;
    cfg.stop_when_extinct = false;
    cfg.max_stored_violations = 1;
    MultiReplay replay(*lattice, {spec, spec}, {&first.states(), &second.states()}, cfg);
    replay.add_monitor(0, 1, order.relation());
    replay.run(t.marks);
    const OrderMonitor& mon = replay.monitors()[0];
    if (mon.count == 0) continue;
    const Violation& v = mon.stored.front();
    const auto it = std::find_if(t.marks.begin(), t.marks.end(),
                                 [&](const Mark& m) { return m.time == v.time && m.dst == v.site; });
    OrderWitness w;
    w.order = order.name();
    w.seed = seed;
    w.first = first;
    w.second = second;
    w.mark = *it;
    w.site = v.site;
    w.states = {v.lower, v.upper};
    return w;
  }
  return std::nullopt;
}

}  // namespace islab
