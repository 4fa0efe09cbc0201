#include "islab/percolation.hpp"

#include <algorithm>
#include <cmath>

#include "islab/parallel.hpp"
#include "islab/rng.hpp"

namespace islab {

EvenLattice::EvenLattice(std::int64_t height, std::int64_t width) : height_(height), width_(width) {
  if (height < 0) throw ParameterError("lattice height must be nonnegative");
  if (width < 0) throw ParameterError("lattice width must be nonnegative");
  if (width > (1 << 24) || height > (1 << 24)) throw ParameterError("even lattice too large");
  offsets_.push_back(0);
  for (std::int64_t n = 0; n <= height; ++n) {
    const std::int64_t lo = lowest(n);
    const std::size_t count = lo > width ? 0 : static_cast<std::size_t>((width - lo) / 2 + 1);
    offsets_.push_back(offsets_.back() + count);
  }
}

std::int64_t EvenLattice::lowest(std::int64_t n) const {
  std::int64_t lo = -width_;
  if ((lo + n) % 2 != 0) ++lo;
  return lo;
}

bool EvenLattice::contains(std::int64_t m, std::int64_t n) const {
  return n >= 0 && n <= height_ && m >= -width_ && m <= width_ && ((m + n) % 2 == 0);
}

std::size_t EvenLattice::index(std::int64_t m, std::int64_t n) const {
  if (!contains(m, n))
    throw ContainmentError("site (" + std::to_string(m) + "," + std::to_string(n) + ") not in the even lattice");
  return offsets_[n] + static_cast<std::size_t>((m - lowest(n)) / 2);
}

std::vector<std::int64_t> EvenLattice::level(std::int64_t n) const {
  std::vector<std::int64_t> out;
  if (n < 0 || n > height_) return out;
  for (std::int64_t m = lowest(n); m <= width_; m += 2) out.push_back(m);
  return out;
}

PercolationField::PercolationField(EvenLattice lattice, SamplerInfo info)
    : lattice_(std::move(lattice)), info_(std::move(info)), open_(lattice_.size(), 0) {}

void PercolationField::set(std::int64_t m, std::int64_t n, bool value) { open_[lattice_.index(m, n)] = value; }

std::size_t PercolationField::open_count() const {
  return static_cast<std::size_t>(std::count(open_.begin(), open_.end(), 1));
}

double site_uniform(std::uint64_t seed, std::int64_t m, std::int64_t n) {
  CounterStream rs(seed, domain_key(KeyDomain::Percolation, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n)),
                   0);
  return rs.next();
}

PercolationField sample_independent(const EvenLattice& lattice, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("site probability must lie in [0,1]");
  PercolationField f(lattice, {SamplerInfo::Kind::Independent, p, 0, 1.0 - p, "independent"});
  for (std::int64_t n = 0; n <= lattice.height(); ++n)
    for (std::int64_t m : lattice.level(n)) f.set(m, n, site_uniform(seed, m, n) < p);
  return f;
}

PercolationField sample_synthetic_m1(const EvenLattice& lattice, double q, std::uint64_t seed) {
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("noise probability must lie in [0,1]");
  PercolationField f(lattice, {SamplerInfo::Kind::MDependent, 0, 1, (1 - q) * (1 - q), "synthetic-m1"});
  for (std::int64_t n = 0; n <= lattice.height(); ++n)
    for (std::int64_t m : lattice.level(n))
      f.set(m, n, site_uniform(seed, m, n) < q || site_uniform(seed, m - 1, n - 1) < q);
  return f;
}

PercolationField m_dependent_from_blocks(const EvenLattice& lattice,
                                         const std::function<bool(std::int64_t, std::int64_t)>& marks, int M,
                                         double gamma, std::string source) {
  if (M < 0) throw ParameterError("dependence range M must be nonnegative");
  PercolationField f(lattice, {SamplerInfo::Kind::MDependent, 0, M, gamma, std::move(source)});
  for (std::int64_t n = 0; n <= lattice.height(); ++n)
    for (std::int64_t m : lattice.level(n)) f.set(m, n, marks(m, n));
  return f;
}

const char* to_string(Cluster::Stop s) {
  switch (s) {
    case Cluster::Stop::Extinct: return "extinct";
    case Cluster::Stop::ReachedTop: return "reached-top";
    case Cluster::Stop::Capped: return "capped";
  }
  return "?";
}

Cluster grow_cluster(const PercolationField& field, const std::vector<std::int64_t>& seeds, SeedRule rule,
                     std::size_t cap) {
  return grow_cluster(
      field.lattice(), [&field](std::int64_t m, std::int64_t n) { return field.open(m, n); }, seeds, rule, cap);
}

Cluster grow_cluster(const EvenLattice& lat, const std::function<bool(std::int64_t, std::int64_t)>& open,
                     const std::vector<std::int64_t>& seeds, SeedRule rule, std::size_t cap) {
  Cluster c;
  std::vector<std::int64_t> cur;
  for (std::int64_t m : seeds) {
    if (!lat.contains(m, 0)) throw ContainmentError("seed " + std::to_string(m) + " is not a level-0 site");
    if (rule == SeedRule::Unconditional || open(m, 0)) cur.push_back(m);
  }
  std::sort(cur.begin(), cur.end());
  cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
  for (std::int64_t n = 0;; ++n) {
    c.size += cur.size();
    c.levels.push_back(cur);
    if (cur.empty()) {
      c.stop = Cluster::Stop::Extinct;
      return c;
    }
    if (c.size > cap) {
      c.stop = Cluster::Stop::Capped;
      return c;
    }
    if (n == lat.height()) {
      c.stop = Cluster::Stop::ReachedTop;
      return c;
    }
    std::vector<std::int64_t> next;
    for (std::int64_t m : cur) {
      for (std::int64_t y : {m - 1, m + 1})
        if (lat.contains(y, n + 1) && open(y, n + 1)) next.push_back(y);
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    cur.swap(next);
  }
}

Cluster cluster_from_origin(const PercolationField& field, std::size_t cap) {
  return grow_cluster(field, {0}, SeedRule::RequireOpen, cap);
}

bool open_path_exists(const PercolationField& field, std::int64_t m_from, std::int64_t m_to, std::int64_t n) {
  const EvenLattice& lat = field.lattice();
  if (!lat.contains(m_from, 0) || !lat.contains(m_to, n)) throw ContainmentError("path endpoint outside the lattice");
  const EvenLattice cut(n, lat.width());
  PercolationField sub(cut, field.info());
  for (std::int64_t k = 0; k <= n; ++k)
    for (std::int64_t m : cut.level(k)) sub.set(m, k, field.open(m, k));
  const Cluster c = grow_cluster(sub, {m_from}, SeedRule::RequireOpen);
  if (static_cast<std::int64_t>(c.levels.size()) <= n) return false;
  const auto& top = c.levels[n];
  return std::binary_search(top.begin(), top.end(), m_to);
}

Estimate survival_to_top(const EvenLattice& lattice, double p, std::size_t trials, std::uint64_t seed0,
                         unsigned workers) {
  if (trials == 0) throw ParameterError("survival estimate needs at least one trial");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("site probability must lie in [0,1]");
  // Same draws as sample_independent, evaluated only where the cluster looks.
  const auto hits = parallel_map(trials, workers, [&](std::size_t i) -> char {
    const std::uint64_t seed = seed0 + i;
    auto open = [seed, p](std::int64_t m, std::int64_t n) { return site_uniform(seed, m, n) < p; };
    return grow_cluster(lattice, open, {0}, SeedRule::RequireOpen).reached_top();
  });
  return binomial_estimate(static_cast<std::size_t>(std::count(hits.begin(), hits.end(), 1)), trials);
}

Threshold dependent_threshold(int M) {
  if (M < 0) throw ParameterError("dependence range M must be nonnegative");
  const int e = -4 * (2 * M + 1);
  return {std::pow(6.0, e), 6, e};
}

}  // namespace islab
