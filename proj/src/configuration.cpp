#include "islab/configuration.hpp"

#include <algorithm>

namespace islab {

namespace {
void check_state(std::int8_t v) {
  if (v < -1 || v > 1) throw ParameterError("site state must lie in {-1,0,1}");
}
}  // namespace

Configuration::Configuration(Box box, std::vector<std::int8_t> states) : box_(std::move(box)), states_(std::move(states)) {
  if (states_.size() != box_.volume()) throw ParameterError("state array size does not match box volume");
  for (auto v : states_) check_state(v);
}

Configuration Configuration::with_sites(const Box& box, const std::vector<Coord>& sites, std::int8_t value) {
  Configuration c(box);
  for (const auto& x : sites) c.set(x, value);
  return c;
}

Configuration Configuration::filled(const Box& box, std::int8_t value) {
  check_state(value);
  return Configuration(box, std::vector<std::int8_t>(box.volume(), value));
}

void Configuration::set(const Coord& x, std::int8_t v) {
  check_state(v);
  states_[box_.offset(x)] = v;
}

std::size_t Configuration::fertile_count() const {
  return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), std::int8_t{1}));
}

std::size_t Configuration::sterile_count() const {
  return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), std::int8_t{-1}));
}

std::vector<Coord> Configuration::fertile_sites() const {
  std::vector<Coord> out;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == 1) out.push_back(box_.coord(i));
  }
  return out;
}

Configuration translate(const Configuration& c, const Coord& v, BoundaryRule rule) {
  const Box& b = c.box();
  if (static_cast<int>(v.size()) != b.dim()) throw ParameterError("translation vector has wrong dimension");
  Configuration out(b);
  for (std::size_t off = 0; off < b.volume(); ++off) {
    Coord src = b.coord(off);
    for (int i = 0; i < b.dim(); ++i) {
      src[i] -= v[i];
      if (rule == BoundaryRule::Periodic) {
        const std::int64_t s = b.side(i);
        std::int64_t r = (src[i] - b.lo()[i]) % s;
        if (r < 0) r += s;
        src[i] = b.lo()[i] + r;
      }
    }
    if (b.contains(src)) out.states()[off] = c.states()[b.offset(src)];
  }
  return out;
}

}  // namespace islab
