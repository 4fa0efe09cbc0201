#pragma once

#include <cstdint>
#include <vector>

#include "islab/lattice.hpp"

namespace islab {

// Spin state in {-1,0,1} per site of a box.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(Box box) : box_(std::move(box)), states_(box_.volume(), 0) {}
  Configuration(Box box, std::vector<std::int8_t> states);

  // Box with the listed sites set to `value` and every other site 0.
  static Configuration with_sites(const Box& box, const std::vector<Coord>& sites, std::int8_t value = 1);
  static Configuration filled(const Box& box, std::int8_t value);

  const Box& box() const { return box_; }
  const std::vector<std::int8_t>& states() const { return states_; }
  std::vector<std::int8_t>& states() { return states_; }

  std::int8_t at(const Coord& x) const { return states_[box_.offset(x)]; }
  void set(const Coord& x, std::int8_t v);

  std::size_t fertile_count() const;
  std::size_t sterile_count() const;
  std::vector<Coord> fertile_sites() const;
  bool has_sterile() const { return sterile_count() > 0; }

  bool operator==(const Configuration& o) const { return box_ == o.box_ && states_ == o.states_; }

 private:
  Box box_;
  std::vector<std::int8_t> states_;
};

// (tau_v c)(x) = c(x - v)
Configuration translate(const Configuration& c, const Coord& v, BoundaryRule rule);

}  // namespace islab
