#include "islab/lattice.hpp"

#include <limits>
#include <sstream>

#include "islab/rng.hpp"

namespace islab {

const char* to_string(BoundaryRule rule) {
  return rule == BoundaryRule::Periodic ? "periodic" : "absorbing";
}

BoundaryRule parse_boundary(const std::string& name) {
  if (name == "absorbing") return BoundaryRule::AbsorbingEmpty;
  if (name == "periodic") return BoundaryRule::Periodic;
  throw ParameterError("unknown boundary rule '" + name + "'");
}

Box::Box(Coord lo, Coord hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty()) throw ParameterError("box dimension must be positive");
  if (lo_.size() != hi_.size()) throw ParameterError("box corners differ in dimension");
  stride_.assign(lo_.size(), 1);
  std::size_t vol = 1;
  for (int i = dim() - 1; i >= 0; --i) {
    if (lo_[i] > hi_[i]) throw ParameterError("box lower corner exceeds upper corner");
    const auto side = static_cast<unsigned long long>(hi_[i] - lo_[i]) + 1ull;
    if (side > std::numeric_limits<std::uint32_t>::max() ||
        vol > (std::numeric_limits<std::uint32_t>::max() - 1) / side) {
      throw ParameterError("box volume overflows the site index type");
    }
    stride_[i] = vol;
    vol *= side;
  }
  volume_ = vol;
}

Box Box::cube(int d, std::int64_t lo, std::int64_t hi) {
  return Box(Coord(static_cast<std::size_t>(d), lo), Coord(static_cast<std::size_t>(d), hi));
}

bool Box::contains(const Coord& x) const {
  if (x.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  return other.dim() == dim() && contains(other.lo_) && contains(other.hi_);
}

std::size_t Box::offset(const Coord& x) const {
  if (!contains(x)) throw ContainmentError("site outside box " + to_string(*this));
  std::size_t off = 0;
  for (std::size_t i = 0; i < x.size(); ++i) off += static_cast<std::size_t>(x[i] - lo_[i]) * stride_[i];
  return off;
}

Coord Box::coord(std::size_t offset) const {
  if (offset >= volume_) throw ContainmentError("site offset outside box");
  Coord x(lo_.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = lo_[i] + static_cast<std::int64_t>(offset / stride_[i]);
    offset %= stride_[i];
  }
  return x;
}

std::string to_string(const Box& b) {
  std::ostringstream os;
  for (int i = 0; i < b.dim(); ++i) {
    if (i) os << 'x';
    os << '[' << b.lo()[i] << ',' << b.hi()[i] << ']';
  }
  return os.str();
}

namespace {

void check_periodic(const Box& b) {
  for (int i = 0; i < b.dim(); ++i) {
    if (b.side(i) < 3) throw ParameterError("periodic boxes need every side length >= 3");
  }
}

// Neighbor of x in direction k, unwrapped.
Coord step(const Coord& x, int k) {
  Coord y = x;
  y[k / 2] += (k % 2 == 0) ? 1 : -1;
  return y;
}

Coord wrap(const Box& b, Coord y) {
  for (int i = 0; i < b.dim(); ++i) {
    const std::int64_t s = b.side(i);
    std::int64_t r = (y[i] - b.lo()[i]) % s;
    if (r < 0) r += s;
    y[i] = b.lo()[i] + r;
  }
  return y;
}

std::uint64_t coord_key(const Coord& x) {
  std::uint64_t h = mix64(0xC0 + x.size());
  for (auto c : x) h = hash_combine(h, static_cast<std::uint64_t>(c));
  return h;
}

}  // namespace

std::vector<Coord> neighbors(const Box& b, const Coord& x, BoundaryRule rule) {
  if (!b.contains(x)) throw ContainmentError("site outside box " + to_string(b));
  if (rule == BoundaryRule::Periodic) check_periodic(b);
  std::vector<Coord> out;
  for (int k = 0; k < 2 * b.dim(); ++k) {
    Coord y = step(x, k);
    if (rule == BoundaryRule::Periodic) {
      out.push_back(wrap(b, std::move(y)));
    } else if (b.contains(y)) {
      out.push_back(std::move(y));
    }
  }
  return out;
}

std::vector<std::pair<Coord, Coord>> enumerate_edges(const Box& b, BoundaryRule rule) {
  std::vector<std::pair<Coord, Coord>> edges;
  for (std::size_t off = 0; off < b.volume(); ++off) {
    Coord x = b.coord(off);
    for (auto& y : neighbors(b, x, rule)) edges.emplace_back(x, std::move(y));
  }
  return edges;
}

Lattice::Lattice(Box box, BoundaryRule rule) : box_(std::move(box)), rule_(rule), degree_(2 * box_.dim()) {
  if (rule_ == BoundaryRule::Periodic) check_periodic(box_);
  const std::size_t n = box_.volume();
  out_dst_.assign(n * degree_, kOutside);
  in_src_.assign(n * degree_, kOutside);
  in_key_.assign(n * degree_, 0);
  site_key_.resize(n);
  for (std::size_t off = 0; off < n; ++off) {
    const Coord x = box_.coord(off);
    site_key_[off] = hash_combine(coord_key(x), static_cast<std::uint64_t>(KeyDomain::Site));
    for (int k = 0; k < degree_; ++k) {
      Coord y = step(x, k);
      if (rule_ == BoundaryRule::Periodic) y = wrap(box_, std::move(y));
      if (box_.contains(y)) out_dst_[off * degree_ + k] = static_cast<std::uint32_t>(box_.offset(y));
      // in-edge (x, k) comes from x - e_k
      Coord src = step(x, k ^ 1);
      Coord src_wrapped = rule_ == BoundaryRule::Periodic ? wrap(box_, src) : src;
      if (box_.contains(src_wrapped)) in_src_[off * degree_ + k] = static_cast<std::uint32_t>(box_.offset(src_wrapped));
      in_key_[off * degree_ + k] =
          hash_combine(hash_combine(coord_key(src_wrapped), coord_key(x)), static_cast<std::uint64_t>(KeyDomain::Edge));
    }
  }
}

Coord Lattice::in_src_coord(std::uint32_t y, int k) const {
  Coord src = step(box_.coord(y), k ^ 1);
  return rule_ == BoundaryRule::Periodic ? wrap(box_, std::move(src)) : src;
}

LatticePtr make_lattice(const Box& box, BoundaryRule rule) { return std::make_shared<const Lattice>(box, rule); }

}  // namespace islab
