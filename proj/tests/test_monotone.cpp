#include <functional>

#include "doctest.h"
#include "islab/coupling.hpp"
#include "islab/monotone.hpp"

using namespace islab;

namespace {

const RateExpr kLp = RateExpr::atom("lambda*p");
const RateExpr kLq = RateExpr::atom("lambda*(1-p)");

bool has_failure(const MonotonicityVerdict& v, const std::string& id, int a, int b, int c, int d, int thr,
                 const RateExpr& lhs, const RateExpr& rhs) {
  for (const auto& f : v.failures) {
    if (f.inequality == id && f.alpha == a && f.beta == b && f.gamma == c && f.delta == d && f.threshold == thr)
      return f.lhs == lhs && f.rhs == rhs;
  }
  return false;
}

// Hand-written rates of one process: rate at which a site in state `from`
// with one neighbour in state `partner` jumps to `to`, split into the part
// caused by the neighbour and the spontaneous part.
struct Hand {
  std::function<double(int partner, int from, int to)> inter;
  std::function<double(int from, int to)> spont;
};

Hand spont_hand(double lambda, double p) {
  return {[=](int partner, int from, int to) { return (partner == 1 && from == 0 && to == 1) ? lambda * p : 0.0; },
          [=](int from, int to) {
            if (from == 1 && to == 0) return 1.0;
            if (from == -1 && to == 0) return 1.0;
            if (from == 0 && to == -1) return 2.0 * lambda * (1 - p);
            return 0.0;
          }};
}

Hand is_hand(double lambda, double p) {
  return {[=](int partner, int from, int to) {
            if (partner != 1 || from != 0) return 0.0;
            return to == 1 ? lambda * p : to == -1 ? lambda * (1 - p) : 0.0;
          },
          [=](int from, int to) { return (from != 0 && to == 0) ? 1.0 : 0.0; }};
}

// Sum over k > thr of the birth (resp. death) rates in rank space, computed
// directly from the hand rates.
double hand_sum(const Hand& h, const StateOrder& o, int a, int b, bool birth, int thr) {
  double s = 0;
  for (int to = -1; to <= 1; ++to) {
    const int changing = birth ? b : a;
    const int partner = birth ? a : b;
    if (to == changing) continue;
    const int step = o.rank(to) - o.rank(changing);
    const int k = birth ? step : -step;
    if (k <= thr) continue;
    s += h.inter(partner, changing, to) + h.spont(changing, to);
  }
  return s;
}

}  // namespace

TEST_CASE("rate expressions") {
  const RateExpr e = kLp * 2.0 + RateExpr::one();
  CHECK(e.str() == "1 + 2*lambda*p");
  CHECK((e - e).is_zero());
  CHECK((kLp - kLq).str() == "-lambda*(1-p) + lambda*p");
  CHECK_FALSE((kLp - kLq).nonnegative());
  CHECK(e.evaluate({{"lambda*p", 0.5}}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(e.evaluate({}), ParameterError);
  CHECK(RateExpr().str() == "0");
}

TEST_CASE("pi sums") {
  const RateTable zero("zero", {-1, 0, 1}, {});
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int t = 0; t <= 2; ++t) {
        CHECK(pi_sums(zero, StateOrder::neg_first(), a, b, Side::Birth, t).is_zero());
        CHECK(pi_sums(zero, StateOrder::neg_first(), a, b, Side::Death, t).is_zero());
      }
  const RateTable is = builtin_tables(ProcessKind::IS, 2.0, 0.3);
  // Only the fertile birth increases the rank of a 0 under -1 < 0 < 1; the
  // sterile birth is a rank decrease and sits on the death side.
  CHECK(pi_sums(is, StateOrder::neg_first(), 1, 0, Side::Birth, 0) == kLp);
  CHECK(pi_sums(is, StateOrder::neg_first(), 0, 1, Side::Death, 0) == kLq);
  const RateTable spont = builtin_tables(ProcessKind::Spont, 2.0, 0.3);
  for (int b = -1; b <= 1; ++b) CHECK(pi_sums(spont, StateOrder::neg_first(), 1, b, Side::Death, 0) == RateExpr::one());
}

TEST_CASE("IS tables under both total orders") {
  const RateTable is = builtin_tables(ProcessKind::IS, 2.0, 0.3);
  auto expect = [&](const StateOrder& o, std::function<RateExpr(int, int, Side, int)> want) {
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (Side s : {Side::Birth, Side::Death})
          for (int k = 1; k <= 2; ++k) {
            INFO(o.name() << " a=" << a << " b=" << b << " k=" << k << " birth=" << (s == Side::Birth));
            CHECK(is.pi(o, a, b, s, k) == want(a, b, s, k));
          }
  };
  // R^{0,1}_{1,0} = lambda p, R^{-1,0}_{0,1} = lambda (1-p), P^{-1}_1 = P^1_{-1} = 1
  expect(StateOrder::neg_first(), [](int a, int b, Side s, int k) {
    if (s == Side::Birth && k == 1 && a == 1 && b == 0) return kLp;
    if (s == Side::Birth && k == 1 && b == -1) return RateExpr::one();
    if (s == Side::Death && k == 1 && a == 0 && b == 1) return kLq;
    if (s == Side::Death && k == 1 && a == 1) return RateExpr::one();
    return RateExpr();
  });
  // R^{0,2}_{1,0} = lambda p, R^{0,1}_{1,0} = lambda (1-p), P^{-2}_1 = P^{-1}_{-1} = 1
  expect(StateOrder::zero_first(), [](int a, int b, Side s, int k) {
    if (s == Side::Birth && a == 1 && b == 0) return k == 2 ? kLp : kLq;
    if (s == Side::Death && k == 2 && a == 1) return RateExpr::one();
    if (s == Side::Death && k == 1 && a == -1) return RateExpr::one();
    return RateExpr();
  });
}

TEST_CASE("IS fails the criterion under every order") {
  const RateTable is = builtin_tables(ProcessKind::IS, 2.0, 0.3);
  const auto neg = check_monotone(is, is, StateOrder::neg_first());
  CHECK_FALSE(neg.pass);
  CHECK(has_failure(neg, "I2", 0, 0, 0, 1, 0, kLq, RateExpr()));
  const auto zero = check_monotone(is, is, StateOrder::zero_first());
  CHECK_FALSE(zero.pass);
  CHECK(has_failure(zero, "I1", 1, 0, 1, -1, 0, kLp, RateExpr()));
  CHECK_FALSE(check_monotone(is, is, StateOrder::partial()).pass);
  for (const auto& order : {StateOrder::neg_first(), StateOrder::zero_first(), StateOrder::partial()}) {
    const auto [lo, up] = tables_in_p(ProcessKind::IS, 2.0, 0.3, 0.7);
    CHECK_FALSE(check_monotone(lo, up, order).pass);
    CHECK(find_order_violation_is(order, 2.0, 0.5, 1000).has_value());
  }
}

TEST_CASE("Spont is monotone in p") {
  const auto [lo, up] = tables_in_p(ProcessKind::Spont, 1.0, 0.3, 0.7);
  const auto v = check_monotone(lo, up, StateOrder::neg_first());
  CHECK(v.pass);
  // 36 comparable (alpha, beta) <= (gamma, delta) tuples, three thresholds,
  // two inequalities
  CHECK(v.instances == 216);
  const auto num = check_monotone(lo, up, StateOrder::neg_first(), CheckMode::Numeric);
  CHECK(num.pass);

  const auto o = StateOrder::neg_first();
  const Hand low = spont_hand(1.0, 0.3), high = spont_hand(1.0, 0.7);
  int tuples = 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = a; c <= 1; ++c)
        for (int d = b; d <= 1; ++d) {
          ++tuples;
          for (int t = 0; t <= 2; ++t) {
            CHECK(hand_sum(low, o, a, b, true, t + o.rank(d) - o.rank(b)) <= hand_sum(high, o, c, d, true, t) + 1e-15);
            CHECK(hand_sum(high, o, c, d, false, t + o.rank(c) - o.rank(a)) <= hand_sum(low, o, a, b, false, t) + 1e-15);
          }
        }
  CHECK(tuples == 36);
}

TEST_CASE("failures re-evaluate to a strict violation") {
  const double lambda = 2.0, p = 0.3;
  const Hand h = is_hand(lambda, p);
  for (const auto& order : {StateOrder::neg_first(), StateOrder::zero_first(), StateOrder::partial()}) {
    const RateTable is = builtin_tables(ProcessKind::IS, lambda, p);
    const auto v = check_monotone(is, is, order, CheckMode::Numeric);
    REQUIRE_FALSE(v.pass);
    for (const auto& f : v.failures) {
      double lhs, rhs;
      if (f.inequality == "I1") {
        lhs = hand_sum(h, order, f.alpha, f.beta, true, f.threshold + order.rank(f.delta) - order.rank(f.beta));
        rhs = hand_sum(h, order, f.gamma, f.delta, true, f.threshold);
      } else {
        lhs = hand_sum(h, order, f.gamma, f.delta, false, f.threshold + order.rank(f.gamma) - order.rank(f.alpha));
        rhs = hand_sum(h, order, f.alpha, f.beta, false, f.threshold);
      }
      CHECK(lhs > rhs);
      CHECK(*f.lhs_value == doctest::Approx(lhs));
      CHECK(*f.rhs_value == doctest::Approx(rhs));
    }
  }
}

TEST_CASE("contact is attractive") {
  for (double lambda : {0.1, 1.0, 4.0, 50.0}) {
    const RateTable c = builtin_tables(ProcessKind::Contact, lambda, 1.0);
    for (const auto& order : {StateOrder::neg_first(), StateOrder::zero_first(), StateOrder::partial()}) {
      CHECK(check_monotone(c, c, order).pass);
      CHECK(check_monotone(c, c, order, CheckMode::Numeric).pass);
    }
  }
  const RateTable c = builtin_tables(ProcessKind::Contact, 3.0, 1.0);
  REQUIRE(c.transitions().size() == 2);
  CHECK(c.pi(StateOrder::neg_first(), 1, 0, Side::Birth, 1) == RateExpr::atom("lambda"));
  CHECK(c.pi(StateOrder::neg_first(), 1, 0, Side::Death, 1) == RateExpr::one());
}

TEST_CASE("no monotonicity in lambda at fixed p") {
  for (auto kind : {ProcessKind::IS, ProcessKind::Spont}) {
    const auto [lo, up] = tables_in_lambda(kind, 1.0, 2.0, 0.6);
    for (const auto& order : {StateOrder::neg_first(), StateOrder::zero_first(), StateOrder::partial()}) {
      const auto v = check_monotone(lo, up, order);
      CHECK_FALSE(v.pass);
      CHECK_FALSE(check_monotone(lo, up, order, CheckMode::Numeric).pass);
    }
  }
  // Spont: the spontaneous -1 rate grows with lambda
  const auto [lo, up] = tables_in_lambda(ProcessKind::Spont, 1.0, 2.0, 0.6);
  const auto v = check_monotone(lo, up, StateOrder::neg_first());
  const RateExpr gap = RateExpr::atom("lambda1*(1-p)", 2) + RateExpr::atom("(lambda2-lambda1)*(1-p)", 2);
  CHECK(has_failure(v, "I2", 0, 0, 0, 0, 0, gap, RateExpr::atom("lambda1*(1-p)", 2)));
}

TEST_CASE("rate table JSON") {
  const RateTable t = builtin_tables(ProcessKind::Spont, 2.0, 0.4, 2);
  const RateTable back = RateTable::from_json(nlohmann::json::parse(t.to_json().dump()));
  CHECK(back.to_json() == t.to_json());
  CHECK(check_monotone(back, back, StateOrder::neg_first()).pass);
  auto bad = t.to_json();
  bad["extra"] = 1;
  CHECK_THROWS_AS(RateTable::from_json(bad), ParameterError);
  auto neg = t.to_json();
  neg["transitions"][0]["rate"]["lambda*p"] = -1.0;
  CHECK_THROWS_AS(RateTable::from_json(neg), ParameterError);
  auto out = t.to_json();
  out["transitions"][0]["to"] = 2;
  CHECK_THROWS_AS(RateTable::from_json(out), ParameterError);
}

TEST_CASE("verdict JSON") {
  const RateTable is = builtin_tables(ProcessKind::IS, 2.0, 0.3);
  const auto j = verdict_json(check_monotone(is, is, StateOrder::neg_first(), CheckMode::Numeric));
  CHECK(j["pass"] == false);
  CHECK(j["failures"].size() > 0);
  CHECK(j["failures"][0].contains("lhs_value"));
}
