#include "islab/order.hpp"

#include "islab/lattice.hpp"

namespace islab {

namespace {
Relation relation_from_ranks(const std::array<int, 3>& rank) {
  Relation r{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r[a][b] = rank[a] <= rank[b];
  return r;
}
}  // namespace

StateOrder StateOrder::neg_first() {
  const std::array<int, 3> rank{0, 1, 2};
  return StateOrder(OrderKind::NegFirst, "neg-first", relation_from_ranks(rank), rank);
}

StateOrder StateOrder::zero_first() {
  const std::array<int, 3> rank{1, 0, 2};
  return StateOrder(OrderKind::ZeroFirst, "zero-first", relation_from_ranks(rank), rank);
}

StateOrder StateOrder::partial() {
  Relation r{};
  for (int a = 0; a < 3; ++a) r[a][a] = true;
  r[0][2] = true;  // -1 <= 1
  r[1][2] = true;  // 0 <= 1
  return StateOrder(OrderKind::Partial, "partial", r, {0, 1, 2});
}

StateOrder StateOrder::parse(const std::string& name) {
  if (name == "neg-first") return neg_first();
  if (name == "zero-first") return zero_first();
  if (name == "partial") return partial();
  throw ParameterError("unknown order '" + name + "' (expected neg-first, zero-first or partial)");
}

StateOrder StateOrder::from_pairs(const std::vector<std::pair<int, int>>& strict_pairs) {
  Relation r{};
  for (int a = 0; a < 3; ++a) r[a][a] = true;
  for (auto [a, b] : strict_pairs) {
    if (a < -1 || a > 1 || b < -1 || b > 1 || a == b) throw ParameterError("order pairs must relate distinct states");
    r[a + 1][b + 1] = true;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a != b && r[a][b] && r[b][a]) throw ParameterError("order relation is not antisymmetric");
      for (int c = 0; c < 3; ++c)
        if (r[a][b] && r[b][c] && !r[a][c]) throw ParameterError("order relation is not transitive");
    }
  for (const auto& candidate : {neg_first(), zero_first(), partial()}) {
    if (candidate.relation() == r) return candidate;
  }
  throw ParameterError("unsupported order on {-1,0,1}");
}

int StateOrder::state_of_rank(int r) const {
  for (int s = -1; s <= 1; ++s)
    if (rank(s) == r) return s;
  throw ParameterError("rank out of range");
}

Relation fertile_inclusion() {
  Relation r{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r[a][b] = a != 2 || b == 2;
  return r;
}

}  // namespace islab
