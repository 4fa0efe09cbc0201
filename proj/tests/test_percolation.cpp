#include <cmath>
#include <set>

#include "doctest.h"
#include "islab/percolation.hpp"

using namespace islab;

namespace {

struct ConeSite {
  std::int64_t m, n;
};

std::vector<ConeSite> cone(std::int64_t height) {
  std::vector<ConeSite> out;
  for (std::int64_t n = 0; n <= height; ++n)
    for (std::int64_t m = -n; m <= n; m += 2) out.push_back({m, n});
  return out;
}

PercolationField from_bits(const EvenLattice& lat, const std::vector<ConeSite>& sites, unsigned bits) {
  PercolationField f(lat, {});
  for (std::size_t i = 0; i < sites.size(); ++i) f.set(sites[i].m, sites[i].n, (bits >> i) & 1u);
  return f;
}

// All 2^n oriented paths from (0,0) up to `height`, checked site by site.
std::set<std::pair<std::int64_t, std::int64_t>> reached_by_paths(const PercolationField& f, std::int64_t height) {
  std::set<std::pair<std::int64_t, std::int64_t>> out;
  if (!f.open(0, 0)) return out;
  out.insert({0, 0});
  for (std::int64_t n = 1; n <= height; ++n) {
    for (unsigned steps = 0; steps < (1u << n); ++steps) {
      std::int64_t m = 0;
      bool ok = true;
      for (std::int64_t i = 0; i < n && ok; ++i) {
        m += ((steps >> i) & 1u) ? 1 : -1;
        ok = f.open(m, i + 1);
      }
      if (ok) out.insert({m, n});
    }
  }
  return out;
}

// Exact probability that the origin cluster reaches level `height`.
double exact_survival(std::int64_t height, double p) {
  const EvenLattice lat(height, height);
  const auto sites = cone(height);
  double total = 0;
  for (unsigned bits = 0; bits < (1u << sites.size()); ++bits) {
    const int open = __builtin_popcount(bits);
    const double w = std::pow(p, open) * std::pow(1 - p, static_cast<double>(sites.size()) - open);
    if (cluster_from_origin(from_bits(lat, sites, bits)).reached_top()) total += w;
  }
  return total;
}

}  // namespace

TEST_CASE("even lattice") {
  const EvenLattice lat(4, 3);
  std::set<std::size_t> idx;
  for (std::int64_t n = 0; n <= 4; ++n)
    for (std::int64_t m : lat.level(n)) {
      CHECK((m + n) % 2 == 0);
      CHECK(std::abs(m) <= 3);
      idx.insert(lat.index(m, n));
    }
  CHECK(idx.size() == lat.size());
  CHECK(*idx.rbegin() == lat.size() - 1);
  CHECK(lat.level(0) == std::vector<std::int64_t>{-2, 0, 2});
  CHECK(lat.level(1) == std::vector<std::int64_t>{-3, -1, 1, 3});
  CHECK_FALSE(lat.contains(1, 0));
  CHECK_THROWS_AS(lat.index(1, 0), ContainmentError);
  CHECK_THROWS_AS(EvenLattice(-1, 2), ParameterError);
}

TEST_CASE("independent sampling") {
  const EvenLattice lat(20, 20);
  CHECK(sample_independent(lat, 0.0, 1).open_count() == 0);
  CHECK(sample_independent(lat, 1.0, 1).open_count() == lat.size());
  CHECK_THROWS_AS(sample_independent(lat, 1.5, 1), ParameterError);
  const EvenLattice big(999, 1000);
  const auto f = sample_independent(big, 0.5, 7);
  const double n = static_cast<double>(big.size());
  REQUIRE(n >= 1e6);
  CHECK(std::abs(f.open_count() / n - 0.5) < 3.0 * std::sqrt(0.25 / n));
  const auto g = sample_independent(big, 0.5, 7);
  for (std::int64_t m : big.level(500)) CHECK(f.open(m, 500) == g.open(m, 500));
}

TEST_CASE("open paths") {
  const EvenLattice lat(6, 8);
  const auto all = sample_independent(lat, 1.0, 0);
  CHECK(open_path_exists(all, 2, 2, 0));
  for (std::int64_t n = 0; n <= 6; ++n)
    for (std::int64_t m : lat.level(n)) CHECK(open_path_exists(all, 0, m, n) == (std::abs(m) <= n));
  CHECK_THROWS_AS(open_path_exists(all, 1, 1, 0), ContainmentError);
  PercolationField shut = all;
  shut.set(0, 0, false);
  CHECK_FALSE(open_path_exists(shut, 0, 0, 0));
  CHECK(cluster_from_origin(shut).size == 0);
}

TEST_CASE("cluster growth against path enumeration") {
  const EvenLattice lat(3, 3);
  const auto sites = cone(3);
  REQUIRE(sites.size() == 10);
  for (unsigned bits = 0; bits < (1u << sites.size()); ++bits) {
    const auto f = from_bits(lat, sites, bits);
    const Cluster c = cluster_from_origin(f);
    std::set<std::pair<std::int64_t, std::int64_t>> got;
    for (std::size_t n = 0; n < c.levels.size(); ++n)
      for (std::int64_t m : c.levels[n]) got.insert({m, static_cast<std::int64_t>(n)});
    CHECK(got == reached_by_paths(f, 3));
    CHECK(c.size == got.size());
    for (const auto& [m, n] : reached_by_paths(f, 3)) CHECK(open_path_exists(f, 0, m, n));
  }
}

TEST_CASE("full cone growth") {
  const EvenLattice lat(10, 30);
  const Cluster c = cluster_from_origin(sample_independent(lat, 1.0, 0));
  CHECK(c.reached_top());
  for (std::size_t n = 0; n < c.levels.size(); ++n) CHECK(c.levels[n].size() == n + 1);
  CHECK(cluster_from_origin(sample_independent(lat, 1.0, 0), 20).stop == Cluster::Stop::Capped);
}

TEST_CASE("survival against exhaustive enumeration") {
  for (std::int64_t h = 1; h <= 4; ++h) {
    const EvenLattice lat(h, 4);
    for (double p : {0.3, 0.6, 0.9}) {
      const double exact = exact_survival(h, p);
      const auto est = survival_to_top(lat, p, 20000, 1000 * h);
      INFO("height " << h << " p " << p << " exact " << exact << " mc " << est.estimate);
      CHECK(std::abs(est.estimate - exact) <= 3.0 * std::sqrt(exact * (1 - exact) / est.trials));
    }
  }
  // h = 1 by hand: origin open and one of two children open
  CHECK(exact_survival(1, 0.6) == doctest::Approx(0.6 * (1 - 0.16)));
}

TEST_CASE("deep survival is stable and below shallow survival") {
  const EvenLattice lat(100, 200);
  const auto a = survival_to_top(lat, 0.8, 10000, 0);
  const auto b = survival_to_top(lat, 0.8, 10000, 10000);
  CHECK(a.estimate > 0.0);
  CHECK(std::abs(a.estimate - b.estimate) < 3.0 * std::hypot(a.stderr_, b.stderr_));
  CHECK(a.estimate <= exact_survival(4, 0.8) + 3.0 * a.stderr_);
}

TEST_CASE("clusters are nested in p under shared uniforms") {
  const EvenLattice lat(30, 30);
  std::size_t breaches = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Cluster lo = cluster_from_origin(sample_independent(lat, 0.6, seed));
    const Cluster hi = cluster_from_origin(sample_independent(lat, 0.75, seed));
    for (std::size_t n = 0; n < lo.levels.size(); ++n) {
      if (n >= hi.levels.size()) {
        breaches += !lo.levels[n].empty();
        continue;
      }
      breaches += !std::includes(hi.levels[n].begin(), hi.levels[n].end(), lo.levels[n].begin(), lo.levels[n].end());
    }
  }
  CHECK(breaches == 0);
}

TEST_CASE("dependent threshold") {
  CHECK(dependent_threshold(0).value == 1.0 / 1296.0);
  CHECK(dependent_threshold(0).exponent == -4);
  CHECK(dependent_threshold(1).value == doctest::Approx(std::pow(6.0, -12)).epsilon(1e-15));
  for (int M = 0; M < 6; ++M) {
    CHECK(dependent_threshold(M + 1).exponent - dependent_threshold(M).exponent == -8);
    CHECK(dependent_threshold(M).base == 6);
  }
  CHECK_THROWS_AS(dependent_threshold(-1), ParameterError);
}

TEST_CASE("dependence condition on separated families") {
  const EvenLattice lat(10, 20);
  const int trials = 4000;
  const std::vector<std::pair<std::int64_t, std::int64_t>> triple{{-6, 2}, {0, 4}, {6, 6}};
  SUBCASE("independent marks, M = 0") {
    const double p = 0.6, gamma = 1 - p;
    int closed = 0, open = 0;
    for (int s = 0; s < trials; ++s) {
      const auto f = m_dependent_from_blocks(
          lat, [&](std::int64_t m, std::int64_t n) { return site_uniform(s, m, n) < p; }, 0, gamma);
      bool all_closed = true, all_open = true;
      for (auto [m, n] : triple) {
        all_closed &= !f.open(m, n);
        all_open &= f.open(m, n);
      }
      closed += all_closed;
      open += all_open;
    }
    const double want = std::pow(gamma, 3);
    CHECK(std::abs(closed / double(trials) - want) <= 3.0 * std::sqrt(want * (1 - want) / trials));
    // the bound 1 - gamma^k is met by "some site open", not by "all open"
    CHECK(open / double(trials) < 1 - want);
  }
  SUBCASE("synthetic M = 1 field") {
    const double q = 0.3;
    int closed = 0;
    double gamma = 0;
    for (int s = 0; s < trials; ++s) {
      const auto f = sample_synthetic_m1(lat, q, s);
      gamma = f.info().gamma;
      bool all_closed = true;
      for (auto [m, n] : triple) all_closed &= !f.open(m, n);
      closed += all_closed;
    }
    const double want = std::pow(gamma, 3);
    CHECK(gamma == doctest::Approx(0.49));
    CHECK(std::abs(closed / double(trials) - want) <= 3.0 * std::sqrt(want * (1 - want) / trials));
    // adjacent sites share noise: P(both closed) exceeds gamma^2
    int pair_closed = 0;
    for (int s = 0; s < trials; ++s) {
      const auto f = sample_synthetic_m1(lat, q, s);
      pair_closed += !f.open(0, 2) && !f.open(1, 3);
    }
    CHECK(pair_closed / double(trials) > gamma * gamma + 3.0 * std::sqrt(gamma * gamma / trials));
  }
}

TEST_CASE("externally given seeds") {
  const EvenLattice lat(3, 5);
  PercolationField f(lat, {});
  f.set(1, 1, true);
  CHECK(grow_cluster(f, {0}, SeedRule::RequireOpen).size == 0);
  const Cluster c = grow_cluster(f, {0, 2}, SeedRule::Unconditional);
  CHECK(c.levels[0] == std::vector<std::int64_t>{0, 2});
  CHECK(c.levels[1] == std::vector<std::int64_t>{1});
  CHECK(c.stop == Cluster::Stop::Extinct);
}
