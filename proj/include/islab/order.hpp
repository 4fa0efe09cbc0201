#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace islab {

enum class OrderKind { NegFirst, ZeroFirst, Partial };

// A 3x3 relation over {-1,0,1}, indexed by state + 1.
using Relation = std::array<std::array<bool, 3>, 3>;

// Order on {-1,0,1} with 1 maximal. rank() is the order rank used for
// Borrello increments; the partial order uses the extension -1 < 0 < 1.
class StateOrder {
 public:
  static StateOrder neg_first();   // -1 < 0 < 1
  static StateOrder zero_first();  // 0 < -1 < 1
  static StateOrder partial();     // 0 < 1, -1 < 1
  static StateOrder parse(const std::string& name);
  // Validates the relation and matches it against the supported instances.
  static StateOrder from_pairs(const std::vector<std::pair<int, int>>& strict_pairs);

  OrderKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool leq(int a, int b) const { return rel_[a + 1][b + 1]; }
  bool comparable(int a, int b) const { return leq(a, b) || leq(b, a); }
  int rank(int s) const { return rank_[s + 1]; }
  int state_of_rank(int r) const;
  const Relation& relation() const { return rel_; }

 private:
  StateOrder(OrderKind kind, std::string name, Relation rel, std::array<int, 3> rank)
      : kind_(kind), name_(std::move(name)), rel_(rel), rank_(rank) {}
  OrderKind kind_;
  std::string name_;
  Relation rel_;
  std::array<int, 3> rank_;
};

// a <= b iff (a == 1 implies b == 1); compares fertile sets only.
Relation fertile_inclusion();

}  // namespace islab
