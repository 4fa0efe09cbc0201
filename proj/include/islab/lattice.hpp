#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace islab {

using Coord = std::vector<std::int64_t>;

class ContainmentError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BoundaryRule : std::uint8_t { AbsorbingEmpty, Periodic };

const char* to_string(BoundaryRule rule);
BoundaryRule parse_boundary(const std::string& name);

// Axis-aligned box of Z^d with inclusive corners. Sites are addressed by
// row-major offset, last axis fastest.
class Box {
 public:
  Box() = default;
  Box(Coord lo, Coord hi);

  // [lo, hi]^d
  static Box cube(int d, std::int64_t lo, std::int64_t hi);

  int dim() const { return static_cast<int>(lo_.size()); }
  const Coord& lo() const { return lo_; }
  const Coord& hi() const { return hi_; }
  std::int64_t side(int axis) const { return hi_[axis] - lo_[axis] + 1; }
  std::size_t volume() const { return volume_; }

  bool contains(const Coord& x) const;
  bool contains(const Box& other) const;

  std::size_t offset(const Coord& x) const;
  Coord coord(std::size_t offset) const;

  bool operator==(const Box& other) const { return lo_ == other.lo_ && hi_ == other.hi_; }

 private:
  Coord lo_;
  Coord hi_;
  std::vector<std::size_t> stride_;
  std::size_t volume_ = 0;
};

std::string to_string(const Box& b);

std::vector<Coord> neighbors(const Box& b, const Coord& x, BoundaryRule rule);

std::vector<std::pair<Coord, Coord>> enumerate_edges(const Box& b, BoundaryRule rule);

inline constexpr std::uint32_t kOutside = 0xffffffffu;

// Precomputed topology of a box under a boundary rule. Direction k moves
// along axis k/2, in the positive sense when k is even. The in-edge (y, k)
// is the oriented edge y - e_k -> y; its source may lie outside the box
// under AbsorbingEmpty, in which case in_src is kOutside.
class Lattice {
 public:
  Lattice(Box box, BoundaryRule rule);

  const Box& box() const { return box_; }
  BoundaryRule rule() const { return rule_; }
  int degree() const { return degree_; }
  std::size_t size() const { return box_.volume(); }

  std::uint32_t out_dst(std::uint32_t x, int k) const { return out_dst_[x * degree_ + k]; }
  std::uint32_t in_src(std::uint32_t y, int k) const { return in_src_[y * degree_ + k]; }
  std::uint64_t in_edge_key(std::uint32_t y, int k) const { return in_key_[y * degree_ + k]; }
  std::uint64_t site_key(std::uint32_t x) const { return site_key_[x]; }

  // Coordinates of the source of in-edge (y, k), possibly outside the box.
  Coord in_src_coord(std::uint32_t y, int k) const;

 private:
  Box box_;
  BoundaryRule rule_;
  int degree_;
  std::vector<std::uint32_t> out_dst_;
  std::vector<std::uint32_t> in_src_;
  std::vector<std::uint64_t> in_key_;
  std::vector<std::uint64_t> site_key_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

LatticePtr make_lattice(const Box& box, BoundaryRule rule);

}  // namespace islab
