#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "islab/dynamics.hpp"
#include "islab/order.hpp"

namespace islab {

// Nonnegative linear combination of named nonnegative atoms, e.g.
// 2 * "lambda*(1-p)". The atom "1" is the constant.
class RateExpr {
 public:
  RateExpr() = default;
  static RateExpr atom(const std::string& name, double coef = 1.0);
  static RateExpr one() { return atom("1"); }

  RateExpr& operator+=(const RateExpr& o);
  RateExpr operator+(const RateExpr& o) const;
  RateExpr operator-(const RateExpr& o) const;
  RateExpr operator*(double c) const;
  bool operator==(const RateExpr& o) const { return terms_ == o.terms_; }

  bool is_zero() const { return terms_.empty(); }
  // Every coefficient >= 0, so the value is >= 0 for all atom values.
  bool nonnegative() const;
  double evaluate(const std::map<std::string, double>& values) const;
  const std::map<std::string, double>& terms() const { return terms_; }
  std::string str() const;

 private:
  std::map<std::string, double> terms_;
};

// One flip of the changing site from `from` to `to`, spontaneous or caused
// by a neighbour in state `partner`.
struct Transition {
  std::optional<int> partner;
  int from;
  int to;
  RateExpr rate;
};

enum class Side { Birth, Death };

// Borrello-style rate description over the states a process uses. Birth and
// death are increments and decrements of the order rank.
class RateTable {
 public:
  RateTable(std::string name, std::vector<int> states, std::vector<Transition> transitions,
            std::map<std::string, double> values = {});

  const std::string& name() const { return name_; }
  const std::vector<int>& states() const { return states_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::map<std::string, double>& values() const { return values_; }

  // R^{0,k}_{alpha,beta} + P^k_beta for birth, R^{-k,0}_{alpha,beta} +
  // P^{-k}_alpha for death, where k is the rank change under `order`.
  RateExpr pi(const StateOrder& order, int alpha, int beta, Side side, int k) const;

  nlohmann::json to_json() const;
  static RateTable from_json(const nlohmann::json& j);

 private:
  std::string name_;
  std::vector<int> states_;
  std::vector<Transition> transitions_;
  std::map<std::string, double> values_;
};

// Sum of pi over 0 <= k <= 2 with k > threshold.
RateExpr pi_sums(const RateTable& table, const StateOrder& order, int alpha, int beta, Side side, int threshold);

struct MonotoneFailure {
  std::string inequality;  // "I1" or "I2"
  int alpha, beta, gamma, delta;
  int threshold;           // j for I1, h for I2
  RateExpr lhs;
  RateExpr rhs;
  std::optional<double> lhs_value;
  std::optional<double> rhs_value;
};

struct MonotonicityVerdict {
  bool pass = true;
  std::vector<MonotoneFailure> failures;
  std::size_t instances = 0;
};

enum class CheckMode {
  Symbolic,  // lhs <= rhs for every value of the atoms
  Numeric,   // lhs <= rhs at the tables' atom values
};

// Is `upper` larger than `lower` under `order`? Quantifies over comparable
// alpha <= gamma, beta <= delta from the union of both state sets and
// h, j in {0, 1, 2}.
MonotonicityVerdict check_monotone(const RateTable& lower, const RateTable& upper, const StateOrder& order,
                                   CheckMode mode = CheckMode::Symbolic);

// Per-neighbour fertile and sterile birth rates of one parameterization.
struct BirthRates {
  RateExpr fertile;
  RateExpr sterile;
};

RateTable make_table(ProcessKind kind, const BirthRates& rates, int dim = 1,
                     const std::map<std::string, double>& values = {});

// Rate table of one process with atoms lambda*p and lambda*(1-p).
RateTable builtin_tables(ProcessKind kind, double lambda, double p, int dim = 1);

// Lower and upper tables at p1 <= p2 (resp. lambda1 <= lambda2) written over
// shared atoms so symbolic comparisons hold for all parameter values.
std::pair<RateTable, RateTable> tables_in_p(ProcessKind kind, double lambda, double p1, double p2, int dim = 1);
std::pair<RateTable, RateTable> tables_in_lambda(ProcessKind kind, double lambda1, double lambda2, double p,
                                                 int dim = 1);

nlohmann::json verdict_json(const MonotonicityVerdict& v);

}  // namespace islab
