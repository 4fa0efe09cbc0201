#include "islab/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "islab/lattice.hpp"

namespace islab {

RateExpr RateExpr::atom(const std::string& name, double coef) {
  RateExpr e;
  if (coef != 0.0) e.terms_[name] = coef;
  return e;
}

RateExpr& RateExpr::operator+=(const RateExpr& o) {
  for (const auto& [a, c] : o.terms_) {
    const double v = (terms_[a] += c);
    if (v == 0.0) terms_.erase(a);
  }
  return *this;
}

RateExpr RateExpr::operator+(const RateExpr& o) const {
  RateExpr r = *this;
  r += o;
  return r;
}

RateExpr RateExpr::operator-(const RateExpr& o) const { return *this + o * -1.0; }

RateExpr RateExpr::operator*(double c) const {
  RateExpr r;
  if (c == 0.0) return r;
  for (const auto& [a, v] : terms_) r.terms_[a] = v * c;
  return r;
}

bool RateExpr::nonnegative() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.second >= 0.0; });
}

double RateExpr::evaluate(const std::map<std::string, double>& values) const {
  double s = 0;
  for (const auto& [a, c] : terms_) {
    if (a == "1") {
      s += c;
      continue;
    }
    const auto it = values.find(a);
    if (it == values.end()) throw ParameterError("no value bound for rate atom '" + a + "'");
    s += c * it->second;
  }
  return s;
}

std::string RateExpr::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [a, c] : terms_) {
    double mag = c;
    if (!first) {
      os << (c < 0 ? " - " : " + ");
      mag = std::abs(c);
    }
    first = false;
    if (a == "1") {
      os << mag;
    } else if (mag == 1.0) {
      os << a;
    } else if (mag == -1.0) {
      os << "-" << a;
    } else {
      os << mag << "*" << a;
    }
  }
  return os.str();
}

namespace {

bool valid_state(int s) { return s >= -1 && s <= 1; }

}  // namespace

RateTable::RateTable(std::string name, std::vector<int> states, std::vector<Transition> transitions,
                     std::map<std::string, double> values)
    : name_(std::move(name)), states_(std::move(states)), transitions_(std::move(transitions)),
      values_(std::move(values)) {
  std::sort(states_.begin(), states_.end());
  states_.erase(std::unique(states_.begin(), states_.end()), states_.end());
  if (states_.empty()) throw ParameterError("rate table needs at least one state");
  for (int s : states_)
    if (!valid_state(s)) throw ParameterError("rate table states must lie in {-1,0,1}");
  auto known = [this](int s) { return std::binary_search(states_.begin(), states_.end(), s); };
  for (const Transition& t : transitions_) {
    if (!known(t.from) || !known(t.to) || (t.partner && !known(*t.partner)))
      throw ParameterError("rate table '" + name_ + "' has a transition outside its states");
    if (t.from == t.to) throw ParameterError("rate table '" + name_ + "' has a transition that does not flip");
    if (!t.rate.nonnegative()) throw ParameterError("rate table '" + name_ + "' has a negative rate");
  }
  for (const auto& [a, v] : values_)
    if (!(v >= 0.0)) throw ParameterError("rate atom '" + a + "' must have a nonnegative value");
}

RateExpr RateTable::pi(const StateOrder& order, int alpha, int beta, Side side, int k) const {
  RateExpr sum;
  for (const Transition& t : transitions_) {
    const int step = order.rank(t.to) - order.rank(t.from);
    if (side == Side::Birth) {
      if (t.from == beta && step == k && (!t.partner || *t.partner == alpha)) sum += t.rate;
    } else {
      if (t.from == alpha && -step == k && (!t.partner || *t.partner == beta)) sum += t.rate;
    }
  }
  return sum;
}

nlohmann::json RateTable::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  j["states"] = states_;
  auto& ts = j["transitions"] = nlohmann::json::array();
  for (const Transition& t : transitions_) {
    nlohmann::json e;
    e["partner"] = t.partner ? nlohmann::json(*t.partner) : nlohmann::json(nullptr);
    e["from"] = t.from;
    e["to"] = t.to;
    e["rate"] = t.rate.terms();
    ts.push_back(e);
  }
  j["values"] = values_;
  return j;
}

RateTable RateTable::from_json(const nlohmann::json& j) {
  static const std::set<std::string> table_keys{"name", "states", "transitions", "values"};
  static const std::set<std::string> transition_keys{"partner", "from", "to", "rate"};
  try {
    for (const auto& [k, v] : j.items())
      if (!table_keys.count(k)) throw ParameterError("unknown rate table field '" + k + "'");
    std::vector<Transition> ts;
    for (const auto& e : j.at("transitions")) {
      for (const auto& [k, v] : e.items())
        if (!transition_keys.count(k)) throw ParameterError("unknown transition field '" + k + "'");
      Transition t;
      if (e.contains("partner") && !e["partner"].is_null()) t.partner = e["partner"].get<int>();
      t.from = e.at("from").get<int>();
      t.to = e.at("to").get<int>();
      for (const auto& [a, c] : e.at("rate").items()) t.rate += RateExpr::atom(a, c.get<double>());
      ts.push_back(std::move(t));
    }
    std::map<std::string, double> values;
    if (j.contains("values")) values = j["values"].get<std::map<std::string, double>>();
    return RateTable(j.value("name", std::string("table")), j.at("states").get<std::vector<int>>(), std::move(ts),
                     std::move(values));
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed rate table: ") + e.what());
  }
}

RateExpr pi_sums(const RateTable& table, const StateOrder& order, int alpha, int beta, Side side, int threshold) {
  RateExpr sum;
  for (int k = std::max(threshold + 1, 0); k <= 2; ++k) sum += table.pi(order, alpha, beta, side, k);
  return sum;
}

MonotonicityVerdict check_monotone(const RateTable& lower, const RateTable& upper, const StateOrder& order,
                                   CheckMode mode) {
  std::vector<int> states = lower.states();
  states.insert(states.end(), upper.states().begin(), upper.states().end());
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());

  MonotonicityVerdict v;
  auto judge = [&](const char* id, int a, int b, int c, int d, int thr, const RateExpr& lhs, const RateExpr& rhs) {
    ++v.instances;
    MonotoneFailure f{id, a, b, c, d, thr, lhs, rhs, std::nullopt, std::nullopt};
    bool fails;
    if (mode == CheckMode::Symbolic) {
      fails = !(rhs - lhs).nonnegative();
    } else {
      f.lhs_value = lhs.evaluate(lower.values().empty() ? upper.values() : lower.values());
      f.rhs_value = rhs.evaluate(upper.values().empty() ? lower.values() : upper.values());
      fails = *f.lhs_value > *f.rhs_value + 1e-12 * std::max(1.0, std::abs(*f.rhs_value));
    }
    if (fails) v.failures.push_back(std::move(f));
  };
  for (int a : states)
    for (int b : states)
      for (int c : states)
        for (int d : states) {
          if (!order.leq(a, c) || !order.leq(b, d)) continue;
          for (int j = 0; j <= 2; ++j) {
            const RateExpr lhs = pi_sums(lower, order, a, b, Side::Birth, j + order.rank(d) - order.rank(b));
            const RateExpr rhs = pi_sums(upper, order, c, d, Side::Birth, j);
            judge("I1", a, b, c, d, j, lhs, rhs);
          }
          for (int h = 0; h <= 2; ++h) {
            const RateExpr lhs = pi_sums(upper, order, c, d, Side::Death, h + order.rank(c) - order.rank(a));
            const RateExpr rhs = pi_sums(lower, order, a, b, Side::Death, h);
            judge("I2", a, b, c, d, h, lhs, rhs);
          }
        }
  v.pass = v.failures.empty();
  return v;
}

RateTable make_table(ProcessKind kind, const BirthRates& rates, int dim, const std::map<std::string, double>& values) {
  if (dim < 1) throw ParameterError("dimension must be at least 1");
  std::vector<Transition> ts;
  ts.push_back({1, 0, 1, rates.fertile});
  ts.push_back({std::nullopt, 1, 0, RateExpr::one()});
  std::vector<int> states{0, 1};
  if (kind == ProcessKind::IS) {
    ts.push_back({1, 0, -1, rates.sterile});
  } else if (kind == ProcessKind::Spont) {
    ts.push_back({std::nullopt, 0, -1, rates.sterile * (2.0 * dim)});
  }
  if (kind != ProcessKind::Contact) {
    ts.push_back({std::nullopt, -1, 0, RateExpr::one()});
    states.push_back(-1);
  }
  ts.erase(std::remove_if(ts.begin(), ts.end(), [](const Transition& t) { return t.rate.is_zero(); }), ts.end());
  return RateTable(to_string(kind), states, std::move(ts), values);
}

RateTable builtin_tables(ProcessKind kind, double lambda, double p, int dim) {
  validate_rates(lambda, p, 1.0);
  if (kind == ProcessKind::Contact)
    return make_table(kind, {RateExpr::atom("lambda"), {}}, dim, {{"lambda", lambda}});
  return make_table(kind, {RateExpr::atom("lambda*p"), RateExpr::atom("lambda*(1-p)")}, dim,
                    {{"lambda*p", lambda * p}, {"lambda*(1-p)", lambda * (1 - p)}});
}

std::pair<RateTable, RateTable> tables_in_p(ProcessKind kind, double lambda, double p1, double p2, int dim) {
  validate_rates(lambda, p1, 1.0);
  validate_rates(lambda, p2, 1.0);
  if (p1 > p2) throw ParameterError("tables_in_p needs p1 <= p2");
  const RateExpr lp1 = RateExpr::atom("lambda*p1");
  const RateExpr gap = RateExpr::atom("lambda*(p2-p1)");
  const RateExpr lq2 = RateExpr::atom("lambda*(1-p2)");
  const std::map<std::string, double> values{
      {"lambda*p1", lambda * p1}, {"lambda*(p2-p1)", lambda * (p2 - p1)}, {"lambda*(1-p2)", lambda * (1 - p2)}};
  return {make_table(kind, {lp1, lq2 + gap}, dim, values), make_table(kind, {lp1 + gap, lq2}, dim, values)};
}

std::pair<RateTable, RateTable> tables_in_lambda(ProcessKind kind, double lambda1, double lambda2, double p, int dim) {
  validate_rates(lambda1, p, 1.0);
  validate_rates(lambda2, p, 1.0);
  if (lambda1 > lambda2) throw ParameterError("tables_in_lambda needs lambda1 <= lambda2");
  const RateExpr f1 = RateExpr::atom("lambda1*p");
  const RateExpr fg = RateExpr::atom("(lambda2-lambda1)*p");
  const RateExpr s1 = RateExpr::atom("lambda1*(1-p)");
  const RateExpr sg = RateExpr::atom("(lambda2-lambda1)*(1-p)");
  const std::map<std::string, double> values{{"lambda1*p", lambda1 * p},
                                             {"(lambda2-lambda1)*p", (lambda2 - lambda1) * p},
                                             {"lambda1*(1-p)", lambda1 * (1 - p)},
                                             {"(lambda2-lambda1)*(1-p)", (lambda2 - lambda1) * (1 - p)}};
  return {make_table(kind, {f1, s1}, dim, values), make_table(kind, {f1 + fg, s1 + sg}, dim, values)};
}

nlohmann::json verdict_json(const MonotonicityVerdict& v) {
  nlohmann::json j;
  j["pass"] = v.pass;
  j["instances"] = v.instances;
  auto& fs = j["failures"] = nlohmann::json::array();
  for (const auto& f : v.failures) {
    nlohmann::json e{{"inequality", f.inequality}, {"alpha", f.alpha}, {"beta", f.beta}, {"gamma", f.gamma},
                     {"delta", f.delta}, {"threshold", f.threshold}, {"lhs", f.lhs.str()}, {"rhs", f.rhs.str()}};
    if (f.lhs_value) e["lhs_value"] = *f.lhs_value;
    if (f.rhs_value) e["rhs_value"] = *f.rhs_value;
    fs.push_back(e);
  }
  return j;
}

}  // namespace islab
