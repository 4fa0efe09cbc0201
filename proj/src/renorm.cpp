#include "islab/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "islab/parallel.hpp"
#include "islab/replay.hpp"

namespace islab {

namespace {

std::int64_t linf(const Coord& x) {
  std::int64_t r = 0;
  for (auto v : x) r = std::max<std::int64_t>(r, v < 0 ? -v : v);
  return r;
}

Coord axis_point(int d, std::int64_t x1) {
  Coord c(d, 0);
  c[0] = x1;
  return c;
}

std::vector<double> split_times(double T, int pieces) {
  std::vector<double> out;
  for (int i = 1; i <= pieces; ++i) out.push_back(T * i / pieces);
  out.back() = T;
  return out;
}

}  // namespace

BlockGeometry BlockGeometry::make(int N, int K, int d, double alpha1, double alpha2,
                                  std::optional<double> alpha_prime) {
  if (N < 1) throw ParameterError("block scale N must be at least 1");
  if (K < 1 || K > N) throw ParameterError("K must lie in [1, N]");
  if (d < 1) throw ParameterError("dimension must be at least 1");
  if (!(alpha1 > 0) || !(alpha2 > 0) || !std::isfinite(alpha1) || !std::isfinite(alpha2))
    throw ParameterError("speeds alpha1 and alpha2 must be positive");
  BlockGeometry g;
  g.N = N;
  g.K = K;
  g.d = d;
  g.alpha1 = alpha1;
  g.alpha2 = alpha2;
  const double cap = std::min(6 * alpha1, alpha2);
  g.alpha_prime = cap;
  if (alpha_prime) {
    if (!(*alpha_prime > 0) || *alpha_prime > cap)
      throw ParameterError("alpha' must lie in (0, min(6 alpha1, alpha2)]");
    g.alpha_prime = *alpha_prime;
  }
  g.T1 = N / (2 * alpha1);
  g.T = 3.0 * N / g.alpha_prime;
  if (!(g.T1 < g.T)) throw ParameterError("T1 must be smaller than T; alpha' is too close to 6 alpha1");
  g.T2 = g.T - g.T1;
  g.j = static_cast<int>(std::floor(3.0 / g.alpha_prime)) + 1;
  g.M = std::max(g.k, g.j);
  return g;
}

std::size_t BlockGeometry::sites_outside_I() const { return R().volume() - I().volume(); }

double BlockGeometry::nominal_outside_count() const { return std::pow(12.0 * N, d); }

Box shifted(const Box& b, const Coord& v) {
  Coord lo = b.lo(), hi = b.hi();
  for (int i = 0; i < b.dim(); ++i) {
    lo[i] += v[i];
    hi[i] += v[i];
  }
  return Box(lo, hi);
}

Configuration restrict_config(const Configuration& xi, const Box& A) {
  if (A.dim() != xi.box().dim()) throw ParameterError("restriction set has the wrong dimension");
  if (!xi.box().contains(A)) throw ContainmentError("restriction set " + to_string(A) + " leaves the box");
  Configuration out(xi.box());
  for (std::size_t i = 0; i < A.volume(); ++i) {
    const Coord x = A.coord(i);
    out.set(x, xi.at(x));
  }
  return out;
}

Configuration embed(const Configuration& xi, const Box& box) {
  if (box.dim() != xi.box().dim()) throw ParameterError("embedding box has the wrong dimension");
  Configuration out(box);
  for (std::size_t i = 0; i < box.volume(); ++i) {
    const Coord x = box.coord(i);
    if (xi.box().contains(x)) out.states()[i] = xi.at(x);
  }
  return out;
}

const char* to_string(HVerdict v) {
  switch (v) {
    case HVerdict::InH: return "in_H";
    case HVerdict::NotInH: return "not_in_H";
    case HVerdict::Undecided: return "undecided";
  }
  return "?";
}

HEvaluator::HEvaluator(const BlockGeometry& geom, HOptions opts) : geom_(geom), opts_(opts) {
  if (!(opts_.lambda_p >= 0) || !std::isfinite(opts_.lambda_p)) throw ParameterError("lambda*p must be nonnegative");
  if (!(opts_.gamma > 0) || !std::isfinite(opts_.gamma)) throw ParameterError("gamma must be positive");
  if (opts_.trials == 0) throw ParameterError("H membership needs at least one inner trial");
  if (!(opts_.horizon > 0)) throw ParameterError("survival horizon must be positive");
  if (opts_.half_width < geom_.K) throw ParameterError("inner box must contain the K-window");
  if (opts_.stride < 0) throw ParameterError("stride must be nonnegative");
  inner_ = make_lattice(Box::cube(geom_.d, -opts_.half_width, opts_.half_width), BoundaryRule::AbsorbingEmpty);
}

std::vector<Coord> HEvaluator::translate_offsets() const {
  const std::int64_t L = geom_.N - geom_.K;
  const std::int64_t s = opts_.stride > 0 ? opts_.stride : geom_.K;
  std::vector<std::int64_t> axis;
  for (std::int64_t v = -L; v <= L; v += s) axis.push_back(v);
  if (axis.back() != L) axis.push_back(L);
  std::vector<Coord> out{Coord{}};
  for (int a = 0; a < geom_.d; ++a) {
    std::vector<Coord> next;
    for (const auto& c : out)
      for (auto v : axis) {
        Coord e = c;
        e.push_back(v);
        next.push_back(std::move(e));
      }
    out.swap(next);
  }
  return out;
}

Estimate HEvaluator::survival_at(const std::vector<std::int8_t>& window, double horizon) const {
  const Box kbox = Box::cube(geom_.d, -geom_.K, geom_.K);
  if (window.size() != kbox.volume()) throw ParameterError("window size does not match (2K+1)^d");
  Configuration init(inner_->box());
  bool any = false;
  for (std::size_t i = 0; i < window.size(); ++i)
    if (window[i] == 1) {
      init.set(kbox.coord(i), 1);
      any = true;
    }
  if (!any) return binomial_estimate(0, opts_.trials);
  std::size_t alive = 0;
  for (std::size_t i = 0; i < opts_.trials; ++i) {
    const MarkGenerator gen = make_generator(inner_, opts_.lambda_p, 1.0, horizon, domain_key(KeyDomain::Derived, opts_.seed, i));
    alive += evolve(init, ProcessKind::Contact, gen, {}).fertile_count > 0;
  }
  return binomial_estimate(alive, opts_.trials);
}

Estimate HEvaluator::survival(const std::vector<std::int8_t>& window) const {
  const std::string key(window.begin(), window.end());
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const Estimate e = survival_at(window, opts_.horizon);
  std::lock_guard lock(mu_);
  cache_.emplace(key, e);
  return e;
}

std::size_t HEvaluator::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

HMembership HEvaluator::membership(const Configuration& xi, const Coord& center) const {
  if (xi.box().dim() != geom_.d || static_cast<int>(center.size()) != geom_.d)
    throw ParameterError("configuration dimension differs from the block geometry");
  const Box I = shifted(geom_.I(), center);
  const Box window_box = shifted(Box::cube(geom_.d, -geom_.N, geom_.N), center);
  if (!xi.box().contains(window_box))
    throw ContainmentError("window " + to_string(window_box) + " leaves the configuration box");
  HMembership h;
  h.center = center;
  h.threshold = threshold();
  h.no_sterile_in_I = true;
  // Sites of I outside the box count as empty.
  for (std::size_t i = 0; i < I.volume() && h.no_sterile_in_I; ++i) {
    const Coord x = I.coord(i);
    if (xi.box().contains(x) && xi.at(x) == -1) h.no_sterile_in_I = false;
  }
  if (!h.no_sterile_in_I) return h;

  const Box kbox = Box::cube(geom_.d, -geom_.K, geom_.K);
  double best_upper = -1;
  std::vector<std::int8_t> window(kbox.volume());
  for (const Coord& off : translate_offsets()) {
    Coord c = center;
    for (int a = 0; a < geom_.d; ++a) c[a] += off[a];
    for (std::size_t i = 0; i < kbox.volume(); ++i) {
      Coord y = kbox.coord(i);
      for (int a = 0; a < geom_.d; ++a) y[a] += c[a];
      window[i] = xi.at(y) == 1 ? 1 : 0;
    }
    const Estimate e = survival(window);
    best_upper = std::max(best_upper, e.estimate + opts_.z * e.stderr_);
    if (!h.translate || e.estimate > h.survival.estimate) {
      h.translate = c;
      h.survival = e;
    }
  }
  h.point = h.survival.estimate > h.threshold;
  if (h.survival.estimate - opts_.z * h.survival.stderr_ > h.threshold)
    h.verdict = HVerdict::InH;
  else if (best_upper < h.threshold)
    h.verdict = HVerdict::NotInH;
  else
    h.verdict = HVerdict::Undecided;
  return h;
}

HMembership h_membership(const Configuration& xi, const BlockGeometry& geom, const HOptions& opts) {
  return HEvaluator(geom, opts).membership(xi, Coord(geom.d, 0));
}

std::size_t restriction_audit(const EventTimeline& full, const Box& R, const Configuration& xi0, double t1) {
  const Lattice& lat = *full.lattice;
  if (!(xi0.box() == lat.box())) throw ParameterError("initial configuration must live on the timeline box");
  if (!lat.box().contains(R)) throw ContainmentError("restriction box leaves the timeline box");
  const ProcessSpec spec = standard_spec(ProcessKind::Spont);
  const StateOrder order = StateOrder::neg_first();
  std::vector<std::uint8_t> inR(lat.size(), 0);
  for (std::size_t i = 0; i < R.volume(); ++i) inR[lat.box().offset(R.coord(i))] = 1;
  std::vector<std::int8_t> big = xi0.states();
  std::vector<std::int8_t> small(lat.size(), 0);
  for (std::size_t i = 0; i < lat.size(); ++i)
    if (inR[i]) small[i] = big[i];
  std::size_t violations = 0;
  for (const Mark& m : full.marks) {
    if (m.time > t1) break;
    const Role role = spec.role(m.kind);
    if (role == Role::Ignore) continue;
    const std::uint32_t s = m.dst;
    const bool outside = m.src == kOutside;
    big[s] = apply_role(ProcessKind::Spont, role, outside ? std::int8_t{0} : big[m.src], big[s]);
    if (!inR[s]) continue;
    bool kept = true;
    if (role == Role::FertileArrow) kept = !outside && inR[m.src];
    if (kept) {
      const std::int8_t src = (outside || !inR[m.src]) ? std::int8_t{0} : small[m.src];
      small[s] = apply_role(ProcessKind::Spont, role, src, small[s]);
    }
    if (!order.leq(small[s], big[s])) ++violations;
  }
  return violations;
}

namespace {

struct BlockContext {
  const HEvaluator& h;
  const BlockGeometry& g;
  double lambda, p;
  LatticePtr lat;          // simulation box
  LatticePtr latR;
  Configuration xi;        // on the simulation box
  Configuration xiR;       // on R
  Configuration xiC;       // xi^{|C} on the simulation box
  Configuration full;      // all fertile on the simulation box
  std::vector<std::uint8_t> inR, outsideI_sterile, e4_region, far;
  std::vector<double> snaps;
  Coord minus, plus;

  BlockContext(const Configuration& xi0, const HEvaluator& he, const HMembership& hm, double lam, double pp)
      : h(he), g(he.geometry()), lambda(lam), p(pp) {
    const Box B = g.simulation_box();
    const Box R = g.R();
    const Box I = g.I();
    lat = make_lattice(B, BoundaryRule::AbsorbingEmpty);
    latR = make_lattice(R, BoundaryRule::AbsorbingEmpty);
    xi = embed(xi0, B);
    xiR = embed(xi0, R);
    full = Configuration::filled(B, 1);
    xiC = Configuration(B);
    const Box C = shifted(Box::cube(g.d, -g.K, g.K), *hm.translate);
    for (std::size_t i = 0; i < C.volume(); ++i) xiC.set(C.coord(i), xi.at(C.coord(i)));
    const auto seedsC = xiC.fertile_sites();
    inR.assign(B.volume(), 0);
    outsideI_sterile.assign(B.volume(), 0);
    e4_region.assign(B.volume(), 0);
    far.assign(B.volume(), 0);
    for (std::size_t i = 0; i < B.volume(); ++i) {
      const Coord x = B.coord(i);
      inR[i] = R.contains(x);
      outsideI_sterile[i] = inR[i] && !I.contains(x) && xi.states()[i] == -1;
      far[i] = linf(x) >= 2 * g.N;
      for (const Coord& a : seedsC) {
        Coord dlt = x;
        for (int k = 0; k < g.d; ++k) dlt[k] -= a[k];
        if (linf(dlt) <= 3 * g.N) {
          e4_region[i] = 1;
          break;
        }
      }
    }
    snaps = split_times(g.T, 8);
    minus = axis_point(g.d, -2 * g.N);
    plus = axis_point(g.d, 2 * g.N);
  }

  bool in_both(const Configuration& c) const {
    return h.membership(c, minus).point && h.membership(c, plus).point;
  }
};

}  // namespace

static BlockSample evaluate_with(const BlockContext& ctx, std::uint64_t seed, bool evaluate_good,
                                 bool audit_restriction) {
  const BlockGeometry& g = ctx.g;
  BlockSample s;
  s.seed = seed;
  const EventTimeline tl = generate_timeline(ctx.lat, ctx.lambda, ctx.p, g.T, seed);
  std::vector<std::uint8_t> cleared(ctx.lat->size(), 0);
  for (const Mark& m : tl.marks) {
    if (m.kind == StreamKind::BirthSterile && ctx.inR[m.dst]) ++s.sterile_marks_in_R;
    if (m.kind == StreamKind::DeathSterile && m.time <= g.T1) cleared[m.dst] = 1;
  }
  s.e1 = s.sterile_marks_in_R == 0;
  s.e2 = true;
  for (std::size_t i = 0; i < cleared.size(); ++i)
    if (ctx.outsideI_sterile[i] && !cleared[i]) s.e2 = false;

  EvolveOptions track;
  track.stop_when_extinct = false;
  track.track_first_fertile = true;
  const Trajectory zc = evolve(ctx.xiC, ProcessKind::Contact, tl, ctx.snaps, track);
  const Trajectory zf = evolve(ctx.full, ProcessKind::Contact, tl, {g.T});
  s.e3 = true;
  for (std::size_t i = 0; i < zc.first_fertile.size(); ++i)
    if (ctx.far[i] && zc.first_fertile[i] <= g.T1) s.e3 = false;
  const auto& zcT = zc.snapshots.back().second.states();
  const auto& zfT = zf.snapshots.back().second.states();
  s.e4 = true;
  for (std::size_t i = 0; i < zcT.size(); ++i)
    if (ctx.e4_region[i] && zcT[i] != zfT[i]) s.e4 = false;

  if (audit_restriction) s.restriction_violations = restriction_audit(tl, g.R(), ctx.xi, g.T);

  if (evaluate_good || s.all()) {
    const EventTimeline sub = restrict(tl, g.R(), 0, g.T);
    EvolveOptions keep;
    keep.stop_when_extinct = false;
    const Trajectory xr = evolve(ctx.xiR, ProcessKind::Spont, sub, ctx.snaps, keep);
    s.good = ctx.in_both(xr.snapshots.back().second);
    s.good_evaluated = true;
    if (s.all()) {
      const Box R = g.R();
      for (std::size_t k = 0; k < ctx.snaps.size(); ++k) {
        const Configuration& a = zc.snapshots[k].second;
        const Configuration& b = xr.snapshots[k].second;
        for (std::size_t i = 0; i < R.volume(); ++i) {
          const Coord x = R.coord(i);
          if (a.at(x) == 1 && b.states()[i] != 1) ++s.inclusion_violations;
        }
      }
      s.contact_in_both = ctx.in_both(zc.snapshots.back().second);
      s.implication_breach = s.contact_in_both && !s.good;
    }
  }
  return s;
}

BlockSample evaluate_block(const Configuration& xi, const HEvaluator& h, const HMembership& hm, double lambda,
                           double p, std::uint64_t seed, bool evaluate_good, bool audit_restriction) {
  if (!hm.point || !hm.translate) throw ParameterError("initial configuration is not in H");
  const BlockContext ctx(xi, h, hm, lambda, p);
  return evaluate_with(ctx, seed, evaluate_good, audit_restriction);
}

BlockEventReport block_events(const Configuration& xi, const HEvaluator& h, double lambda, double p,
                              std::size_t trials, std::uint64_t seed0, const BlockOptions& opts) {
  validate_rates(lambda, p, h.geometry().T);
  if (trials == 0) throw ParameterError("block events need at least one trial");
  const BlockGeometry& g = h.geometry();
  const HMembership hm = h.membership(xi, Coord(g.d, 0));
  if (!hm.point) throw ParameterError("initial configuration is not in H");
  const BlockContext ctx(xi, h, hm, lambda, p);

  BlockEventReport r;
  r.geometry = g;
  r.lambda = lambda;
  r.p = p;
  r.trials = trials;
  r.seed0 = seed0;
  r.translate = *hm.translate;
  r.good_evaluated = opts.evaluate_good;
  r.samples = parallel_map(trials, opts.workers, [&](std::size_t i) {
    return evaluate_with(ctx, seed0 + i, opts.evaluate_good, opts.audit_restriction);
  });
  std::size_t c1 = 0, c2 = 0, c3 = 0, c4 = 0, call = 0, c12 = 0, c34 = 0, cg = 0;
  for (const auto& s : r.samples) {
    c1 += s.e1;
    c2 += s.e2;
    c3 += s.e3;
    c4 += s.e4;
    call += s.all();
    c12 += s.e1 && s.e2;
    c34 += s.e3 && s.e4;
    cg += s.good;
    r.restriction_violations += s.restriction_violations;
    r.inclusion_violations += s.inclusion_violations;
    r.implication_breaches += s.implication_breach;
  }
  r.e1 = binomial_estimate(c1, trials);
  r.e2 = binomial_estimate(c2, trials);
  r.e3 = binomial_estimate(c3, trials);
  r.e4 = binomial_estimate(c4, trials);
  r.e_all = binomial_estimate(call, trials);
  r.e1e2 = binomial_estimate(c12, trials);
  r.e3e4 = binomial_estimate(c34, trials);
  if (opts.evaluate_good) r.good = binomial_estimate(cg, trials);
  const double volR = static_cast<double>(g.R().volume());
  r.e1_closed_form = std::exp(-2 * lambda * (1 - p) * volR * g.T);
  r.e1_closed_form_2d = std::exp(-2 * g.d * lambda * (1 - p) * volR * g.T);
  r.outside_I_sites = g.sites_outside_I();
  r.nominal_outside_count = g.nominal_outside_count();
  std::size_t sterile_outside = 0;
  for (auto v : ctx.outsideI_sterile) sterile_outside += v;
  r.e1e2_closed_form = r.e1_closed_form_2d * std::pow(1 - std::exp(-g.T1), static_cast<double>(sterile_outside));
  return r;
}

Estimate good_event(const Configuration& xi, const HEvaluator& h, double lambda, double p, std::size_t trials,
                    std::uint64_t seed0, unsigned workers) {
  const BlockGeometry& g = h.geometry();
  validate_rates(lambda, p, g.T);
  if (trials == 0) throw ParameterError("good event needs at least one trial");
  const HMembership hm = h.membership(xi, Coord(g.d, 0));
  if (!hm.point) throw ParameterError("initial configuration is not in H");
  const LatticePtr latR = make_lattice(g.R(), BoundaryRule::AbsorbingEmpty);
  const Configuration xiR = embed(xi, g.R());
  const Coord minus = axis_point(g.d, -2 * g.N), plus = axis_point(g.d, 2 * g.N);
  auto good = parallel_map(trials, workers, [&](std::size_t i) -> char {
    // Marks are keyed by entity, so generating on R directly gives exactly
    // the restriction of the simulation-box timeline.
    const MarkGenerator gen = make_generator(latR, lambda, p, g.T, seed0 + i);
    EvolveOptions keep;
    keep.stop_when_extinct = false;
    const Trajectory tr = evolve(xiR, ProcessKind::Spont, gen, {g.T}, keep);
    const Configuration& end = tr.snapshots.back().second;
    return h.membership(end, minus).point && h.membership(end, plus).point;
  });
  return binomial_estimate(static_cast<std::size_t>(std::count(good.begin(), good.end(), 1)), trials);
}

WetReport wet_sites(const Configuration& xi, const HEvaluator& h, double lambda, double p, std::int64_t n_max,
                    std::uint64_t seed, const WetOptions& opts) {
  const BlockGeometry& g = h.geometry();
  if (n_max < 0) throw ParameterError("n_max must be nonnegative");
  if (!(opts.p_site >= 0 && opts.p_site <= 1)) throw ParameterError("p_site must lie in [0,1]");
  if (!(opts.good_estimate >= 0 && opts.good_estimate <= 1)) throw ParameterError("good estimate must lie in [0,1]");
  const std::int64_t N = g.N;
  const std::int64_t need = 2 * N * n_max + 10 * N;
  const std::int64_t hw = opts.half_width > 0 ? opts.half_width : need;
  if (hw < need) throw ContainmentError("box too small for the requested levels");
  Coord lo(g.d, -10 * N), hi(g.d, 10 * N);
  lo[0] = -hw;
  hi[0] = hw;
  const Box W(lo, hi);
  const double horizon = (n_max + 1) * g.T;
  validate_rates(lambda, p, horizon);
  const EventTimeline tl = generate_timeline(W, BoundaryRule::AbsorbingEmpty, lambda, p, horizon, seed);
  std::vector<double> times;
  for (std::int64_t n = 0; n <= n_max + 1; ++n) times.push_back(n * g.T);
  EvolveOptions keep;
  keep.stop_when_extinct = false;
  const Trajectory tr = evolve(embed(xi, W), ProcessKind::Spont, tl, times, keep);
  auto snap = [&](std::int64_t n) -> const Configuration& { return tr.snapshots[n].second; };

  WetReport r;
  r.seed = seed;
  r.n_max = n_max;
  const std::int64_t width = n_max + 1;
  std::vector<std::vector<char>> inh(n_max + 2, std::vector<char>(2 * width + 1, 0));
  auto H = [&](std::int64_t m, std::int64_t n) { return inh[n][m + width] != 0; };
  for (std::int64_t n = 0; n <= n_max + 1; ++n) {
    r.in_h.emplace_back();
    for (std::int64_t m = -width; m <= width; ++m) {
      if ((m + n) % 2 != 0) continue;
      if (h.membership(snap(n), axis_point(g.d, 2 * m * N)).point) {
        inh[n][m + width] = 1;
        r.in_h.back().push_back(m);
      }
    }
  }

  const EvenLattice lat(n_max, n_max);
  std::vector<char> good(lat.size(), 1), wet(lat.size(), 0);
  const StateOrder order = StateOrder::neg_first();
  for (std::int64_t n = 0; n <= n_max; ++n) {
    r.wet.emplace_back();
    r.good.emplace_back();
    for (std::int64_t m : lat.level(n)) {
      const std::size_t idx = lat.index(m, n);
      wet[idx] = !H(m, n) || (H(m - 1, n + 1) && H(m + 1, n + 1));
      if (wet[idx]) r.wet.back().push_back(m);
      if (H(m, n)) {
        const Box Rmn = shifted(g.R(), axis_point(g.d, 2 * m * N));
        const EventTimeline sub = restrict(tl, Rmn, n * g.T, (n + 1) * g.T);
        const Trajectory xr = evolve(embed(snap(n), Rmn), ProcessKind::Spont, sub, {sub.horizon}, keep);
        const Configuration& end = xr.snapshots.back().second;
        for (std::size_t i = 0; i < Rmn.volume(); ++i) {
          const Coord x = Rmn.coord(i);
          if (!order.leq(end.states()[i], snap(n + 1).at(x))) ++r.restriction_violations;
        }
        good[idx] = h.membership(end, axis_point(g.d, 2 * (m - 1) * N)).point &&
                    h.membership(end, axis_point(g.d, 2 * (m + 1) * N)).point;
        if (good[idx] && !wet[idx]) ++r.good_not_wet;
      }
      if (good[idx]) r.good.back().push_back(m);
    }
  }

  const double cut = opts.good_estimate > 0 ? std::min(1.0, opts.p_site / opts.good_estimate) : 0.0;
  auto thin = [&](std::int64_t m, std::int64_t n) {
    CounterStream rs(seed, domain_key(KeyDomain::Thinning, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n)), 0);
    return rs.next() < cut;
  };
  std::vector<std::int64_t> seeds;
  for (std::int64_t m : r.in_h[0])
    if (lat.contains(m, 0)) seeds.push_back(m);
  // Openness sits on the target site, so level-0 seeds must be open too:
  // only then is every member of A_n wet.
  auto G = [&](std::int64_t m, std::int64_t n) { return good[lat.index(m, n)] != 0; };
  r.cluster = grow_cluster(lat, [&](std::int64_t m, std::int64_t n) { return G(m, n) && thin(m, n); }, seeds,
                           SeedRule::RequireOpen);
  r.cluster_unthinned = grow_cluster(lat, G, seeds, SeedRule::RequireOpen);
  auto audit = [&](const Cluster& c, std::size_t& wet_breach, std::size_t* h_breach) {
    for (std::size_t n = 0; n < c.levels.size(); ++n)
      for (std::int64_t m : c.levels[n]) {
        if (!wet[lat.index(m, static_cast<std::int64_t>(n))]) ++wet_breach;
        if (h_breach && !H(m, static_cast<std::int64_t>(n))) ++*h_breach;
      }
  };
  audit(r.cluster, r.containment_violations, &r.h_violations);
  audit(r.cluster_unthinned, r.unthinned_violations, nullptr);
  return r;
}

SpeedCalibration calibrate_speeds(double lambda_p, int d, std::int64_t half_width, double horizon, std::size_t trials,
                                  std::uint64_t seed0, double epsilon, unsigned workers) {
  validate_rates(lambda_p, 1.0, horizon);
  if (d < 1) throw ParameterError("dimension must be at least 1");
  if (half_width < 1) throw ParameterError("calibration box too small");
  if (trials == 0) throw ParameterError("calibration needs at least one trial");
  if (!(epsilon > 0 && epsilon < 1)) throw ParameterError("epsilon must lie in (0,1)");
  const Box box = Box::cube(d, -half_width, half_width);
  const LatticePtr lat = make_lattice(box, BoundaryRule::AbsorbingEmpty);
  const Configuration single = Configuration::with_sites(box, {Coord(d, 0)});
  const Configuration full = Configuration::filled(box, 1);
  constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::max();
  struct Run {
    double speed;
    bool alive;
    std::int64_t disagreement;
  };
  auto runs = parallel_map(trials, workers, [&](std::size_t i) {
    const MarkGenerator gen = make_generator(lat, lambda_p, 1.0, horizon, seed0 + i);
    ReplayConfig cfg;
    cfg.horizon = horizon;
    cfg.snapshots = {horizon};
    cfg.stop_when_extinct = false;
    cfg.track_first_fertile = true;
    const ProcessSpec spec = standard_spec(ProcessKind::Contact);
    MultiReplay replay(*lat, {spec, spec}, {&single.states(), &full.states()}, cfg);
    replay.run(gen);
    const ProcessRun& a = replay.process(0);
    const ProcessRun& b = replay.process(1);
    Run r{0, a.fertile > 0, kNone};
    std::int64_t reach = 0;
    for (std::size_t s = 0; s < a.first_fertile.size(); ++s) {
      if (a.first_fertile[s] <= horizon) reach = std::max(reach, linf(box.coord(s)));
      if (a.state[s] != b.state[s]) r.disagreement = std::min(r.disagreement, linf(box.coord(s)));
    }
    r.speed = reach / horizon;
    return r;
  });
  SpeedCalibration c;
  c.trials = trials;
  c.epsilon = epsilon;
  c.horizon = horizon;
  std::vector<double> speeds;
  std::vector<std::int64_t> dist;
  for (const auto& r : runs) {
    speeds.push_back(r.speed);
    if (r.alive) dist.push_back(r.disagreement);
  }
  std::sort(speeds.begin(), speeds.end());
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.999 * speeds.size()));
  c.alpha1 = speeds[std::max<std::size_t>(rank, 1) - 1];
  c.surviving = dist.size();
  if (!dist.empty()) {
    std::sort(dist.begin(), dist.end());
    // Largest count of disagreeing trials still below epsilon.
    const auto allowed = static_cast<std::size_t>(std::ceil(epsilon * dist.size())) - 1;
    const double cap = static_cast<double>(half_width) / horizon;
    if (allowed >= dist.size() || dist[allowed] == kNone)
      c.alpha2 = cap;
    else
      c.alpha2 = std::clamp((dist[allowed] - 1) / horizon, 0.0, cap);
  }
  return c;
}

DualityResult duality_check(const Configuration& zeta, double lambda, double t, BoundaryRule rule, std::size_t trials,
                            std::uint64_t seed0, unsigned workers) {
  validate_initial(zeta, ProcessKind::Contact);
  if (trials == 0) throw ParameterError("duality check needs at least one trial");
  if (!(t >= 0) || !std::isfinite(t)) throw ParameterError("time must be finite and nonnegative");
  DualityResult r;
  const bool nonempty = zeta.fertile_count() > 0;
  if (t == 0) {
    r.lhs = r.rhs = binomial_estimate(nonempty ? trials : 0, trials);
    return r;
  }
  validate_rates(lambda, 1.0, t);
  const LatticePtr lat = make_lattice(zeta.box(), rule);
  const Configuration full = Configuration::filled(zeta.box(), 1);
  std::vector<std::uint32_t> targets;
  for (std::size_t i = 0; i < zeta.states().size(); ++i)
    if (zeta.states()[i] == 1) targets.push_back(static_cast<std::uint32_t>(i));
  auto hits = parallel_map(2 * trials, workers, [&](std::size_t i) -> char {
    const MarkGenerator gen = make_generator(lat, lambda, 1.0, t, seed0 + i);
    if (i < trials) return evolve(zeta, ProcessKind::Contact, gen, {}).fertile_count > 0;
    const Trajectory tr = evolve(full, ProcessKind::Contact, gen, {t});
    const auto& s = tr.snapshots.back().second.states();
    return std::any_of(targets.begin(), targets.end(), [&](std::uint32_t x) { return s[x] == 1; });
  });
  const auto l = static_cast<std::size_t>(std::count(hits.begin(), hits.begin() + trials, 1));
  const auto rr = static_cast<std::size_t>(std::count(hits.begin() + trials, hits.end(), 1));
  r.lhs = binomial_estimate(l, trials);
  r.rhs = binomial_estimate(rr, trials);
  const double pool = (l + rr) / (2.0 * trials);
  const double se = std::sqrt(pool * (1 - pool) * 2.0 / trials);
  r.z = se > 0 ? (r.lhs.estimate - r.rhs.estimate) / se : 0.0;
  return r;
}

}  // namespace islab
