#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "islab/dynamics.hpp"

namespace islab {

// Sites (m, n) with m + n even, 0 <= n <= height, |m| <= width.
class EvenLattice {
 public:
  EvenLattice(std::int64_t height, std::int64_t width);

  std::int64_t height() const { return height_; }
  std::int64_t width() const { return width_; }
  bool contains(std::int64_t m, std::int64_t n) const;
  std::size_t index(std::int64_t m, std::int64_t n) const;
  std::size_t size() const { return offsets_.back(); }
  // Sorted m values of level n.
  std::vector<std::int64_t> level(std::int64_t n) const;

 private:
  std::int64_t lowest(std::int64_t n) const;
  std::int64_t height_;
  std::int64_t width_;
  std::vector<std::size_t> offsets_;
};

struct SamplerInfo {
  enum class Kind { Independent, MDependent, Given } kind = Kind::Given;
  double p = 0;
  int M = 0;
  double gamma = 1;
  std::string source;
};

class PercolationField {
 public:
  PercolationField(EvenLattice lattice, SamplerInfo info);

  const EvenLattice& lattice() const { return lattice_; }
  const SamplerInfo& info() const { return info_; }
  bool open(std::int64_t m, std::int64_t n) const { return lattice_.contains(m, n) && open_[lattice_.index(m, n)]; }
  void set(std::int64_t m, std::int64_t n, bool value);
  std::size_t open_count() const;

 private:
  EvenLattice lattice_;
  SamplerInfo info_;
  std::vector<std::uint8_t> open_;
};

// Uniform attached to (m, n) for a seed; fields at different p sampled from
// the same seed are nested.
double site_uniform(std::uint64_t seed, std::int64_t m, std::int64_t n);

PercolationField sample_independent(const EvenLattice& lattice, double p, std::uint64_t seed);

// open(m, n) = b(m, n) or b(m-1, n-1) with b i.i.d. Bernoulli(q): sites at
// l-infinity distance > 1 share no noise, and each is closed with
// probability (1-q)^2.
PercolationField sample_synthetic_m1(const EvenLattice& lattice, double q, std::uint64_t seed);

PercolationField m_dependent_from_blocks(const EvenLattice& lattice,
                                         const std::function<bool(std::int64_t, std::int64_t)>& marks, int M,
                                         double gamma, std::string source = "blocks");

enum class SeedRule {
  RequireOpen,    // level-0 seeds must themselves be open
  Unconditional,  // seeds given from outside count as occupied
};

struct Cluster {
  enum class Stop { Extinct, ReachedTop, Capped } stop = Stop::Extinct;
  std::vector<std::vector<std::int64_t>> levels;  // A_0, A_1, ...
  std::size_t size = 0;
  bool reached_top() const { return stop == Stop::ReachedTop; }
};

const char* to_string(Cluster::Stop s);

// Level-by-level growth through the oriented bonds (m,n) -> (m+-1,n+1).
Cluster grow_cluster(const PercolationField& field, const std::vector<std::int64_t>& seeds, SeedRule rule,
                     std::size_t cap = static_cast<std::size_t>(-1));
Cluster cluster_from_origin(const PercolationField& field, std::size_t cap = static_cast<std::size_t>(-1));

// Same growth over an implicit field given by `open(m, n)` on `lattice`.
Cluster grow_cluster(const EvenLattice& lattice, const std::function<bool(std::int64_t, std::int64_t)>& open,
                     const std::vector<std::int64_t>& seeds, SeedRule rule,
                     std::size_t cap = static_cast<std::size_t>(-1));

// Both endpoints must be open; from = to at level 0 reduces to openness.
bool open_path_exists(const PercolationField& field, std::int64_t m_from, std::int64_t m_to, std::int64_t n);

// Fraction of seeds whose origin cluster reaches the top level.
Estimate survival_to_top(const EvenLattice& lattice, double p, std::size_t trials, std::uint64_t seed0,
                         unsigned workers = 1);

struct Threshold {
  double value;
  int base;
  int exponent;
};

// gamma below which an M-dependent field percolates: 6^{-4(2M+1)}.
Threshold dependent_threshold(int M);

}  // namespace islab
