#include "islab/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "islab/monotone.hpp"
#include "islab/parallel.hpp"
#include "islab/percolation.hpp"
#include "islab/renorm.hpp"

namespace islab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<Field> common_fields() {
  return {
      {"seed", FieldKind::Integer, 1, "master seed"},
      {"workers", FieldKind::Integer, 1, "worker threads (results do not depend on it)"},
      {"output", FieldKind::String, "islab-out", "output directory"},
  };
}

std::vector<Field> box_fields(std::int64_t half_width) {
  return {
      {"dim", FieldKind::Integer, 1, "lattice dimension"},
      {"half_width", FieldKind::Integer, half_width, "box [-W, W]^d"},
      {"boundary", FieldKind::String, "absorbing", "absorbing or periodic"},
  };
}

std::map<std::string, std::vector<Field>> build_fields() {
  std::map<std::string, std::vector<Field>> f;
  auto with = [](std::vector<Field> a, const std::vector<Field>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  f["simulate"] = with(box_fields(50), {
                                           {"process", FieldKind::String, "spont", "contact, is or spont"},
                                           {"lambda", FieldKind::Number, 2.0, "birth rate per edge"},
                                           {"p", FieldKind::Number, 0.9, "fertile fraction"},
                                           {"horizon", FieldKind::Number, 20.0, "time horizon"},
                                           {"trials", FieldKind::Integer, 1000, "seeds for the survival proxy"},
                                           {"initial", FieldKind::String, "origin", "origin or full"},
                                           {"snapshots", FieldKind::NumberList, json::array(),
                                            "snapshot times of the first seed (default: tenths of the horizon)"},
                                       });
  f["couple"] = with(box_fields(50), {
                                         {"pair", FieldKind::String, "is-contact", "is-contact, spont-is or spont-spont"},
                                         {"lambda", FieldKind::Number, 2.0, "birth rate per edge"},
                                         {"p", FieldKind::Number, 0.7, "p, or p1 for spont-spont"},
                                         {"p2", FieldKind::Number, 0.9, "upper p for spont-spont"},
                                         {"horizon", FieldKind::Number, 20.0, "time horizon"},
                                         {"trials", FieldKind::Integer, 1000, "seeds"},
                                     });
  f["mono"] = {
      {"process", FieldKind::String, "is", "contact, is or spont"},
      {"compare", FieldKind::String, "self", "self, p or lambda"},
      {"order", FieldKind::String, "neg-first", "neg-first, zero-first or partial"},
      {"lambda", FieldKind::Number, 2.0, "lambda (lower lambda for compare=lambda)"},
      {"lambda2", FieldKind::Number, 3.0, "upper lambda for compare=lambda"},
      {"p", FieldKind::Number, 0.5, "p (lower p for compare=p)"},
      {"p2", FieldKind::Number, 0.8, "upper p for compare=p"},
      {"dim", FieldKind::Integer, 1, "lattice dimension"},
      {"mode", FieldKind::String, "symbolic", "symbolic or numeric"},
      {"lower_table", FieldKind::String, "", "JSON rate table replacing the lower one"},
      {"upper_table", FieldKind::String, "", "JSON rate table replacing the upper one"},
  };
  f["perc"] = {
      {"field", FieldKind::String, "independent", "independent or synthetic-m1"},
      {"p", FieldKind::Number, 0.7, "site density (independent)"},
      {"q", FieldKind::Number, 0.5, "noise density (synthetic-m1)"},
      {"height", FieldKind::Integer, 20, "levels"},
      {"width", FieldKind::Integer, 0, "half width (0: height)"},
      {"trials", FieldKind::Integer, 1000, "seeds"},
  };
  f["block"] = {
      {"N", FieldKind::Integer, 5, "block scale"},
      {"K", FieldKind::Integer, 2, "survival window half width"},
      {"dim", FieldKind::Integer, 1, "lattice dimension"},
      {"lambda", FieldKind::Number, 4.0, "birth rate per edge"},
      {"p", FieldKind::Number, 0.97, "fertile fraction"},
      {"alpha1", FieldKind::Number, 0.0, "spread speed (0: calibrate)"},
      {"alpha2", FieldKind::Number, 0.0, "coupling speed (0: calibrate)"},
      {"calib_trials", FieldKind::Integer, 1000, "speed calibration seeds"},
      {"calib_horizon", FieldKind::Number, 30.0, "speed calibration horizon"},
      {"calib_half_width", FieldKind::Integer, 150, "speed calibration box"},
      {"epsilon", FieldKind::Number, 0.01, "alpha2 tolerance"},
      {"gamma", FieldKind::Number, 0.1, "H threshold is 1 - gamma/2"},
      {"h_trials", FieldKind::Integer, 64, "inner survival trials per window"},
      {"h_horizon", FieldKind::Number, 20.0, "inner survival horizon"},
      {"h_half_width", FieldKind::Integer, 40, "inner survival box"},
      {"trials", FieldKind::Integer, 1000, "block event seeds"},
      {"good", FieldKind::Bool, true, "evaluate G on every block seed"},
      {"good_trials", FieldKind::Integer, 200, "seeds for the G estimate used by the wet-site audit"},
      {"wet_seeds", FieldKind::Integer, 0, "wet-site audit seeds"},
      {"n_max", FieldKind::Integer, 5, "wet-site levels"},
  };
  f["sweep"] = with(box_fields(50), {
                                        {"lambdas", FieldKind::NumberList, json{1.0, 2.0, 3.0, 4.0}, "lambda grid"},
                                        {"ps", FieldKind::NumberList, json{0.25, 0.5, 0.75, 0.9, 0.95, 0.99}, "p grid"},
                                        {"horizon", FieldKind::Number, 20.0, "time horizon"},
                                        {"trials", FieldKind::Integer, 1000, "seeds per cell"},
                                    });
  f["duality"] = with(box_fields(60), {
                                          {"lambda", FieldKind::Number, 2.0, "contact rate"},
                                          {"t", FieldKind::Number, 10.0, "time"},
                                          {"sites", FieldKind::SiteList, json::array({json::array({0})}),
                                           "fertile sites of zeta"},
                                          {"trials", FieldKind::Integer, 10000, "seeds per side"},
                                      });
  const auto common = common_fields();
  for (auto& [name, fields] : f) fields.insert(fields.begin(), common.begin(), common.end());
  return f;
}

const std::map<std::string, std::vector<Field>>& all_fields() {
  static const auto f = build_fields();
  return f;
}

json coerce(const Field& f, const json& v) {
  auto fail = [&](const char* want) { throw ConfigError("field '" + f.key + "' must be " + want); };
  switch (f.kind) {
    case FieldKind::Number:
      if (!v.is_number()) fail("a number");
      return v.get<double>();
    case FieldKind::Integer:
      if (v.is_number_integer()) return v.get<std::int64_t>();
      if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() && std::abs(v.get<double>()) < 9e15)
        return static_cast<std::int64_t>(v.get<double>());
      fail("an integer");
      break;
    case FieldKind::Bool:
      if (!v.is_boolean()) fail("true or false");
      return v;
    case FieldKind::String:
      if (!v.is_string()) fail("a string");
      return v;
    case FieldKind::NumberList: {
      if (!v.is_array()) fail("a list of numbers");
      json out = json::array();
      for (const auto& x : v) {
        if (!x.is_number()) fail("a list of numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    case FieldKind::SiteList: {
      if (!v.is_array()) fail("a list of integer coordinate lists");
      json out = json::array();
      for (const auto& s : v) {
        if (!s.is_array()) fail("a list of integer coordinate lists");
        json c = json::array();
        for (const auto& x : s) {
          if (!x.is_number_integer()) fail("a list of integer coordinate lists");
          c.push_back(x.get<std::int64_t>());
        }
        out.push_back(c);
      }
      return out;
    }
  }
  return v;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

template <class F>
void check_name(F&& parse) {
  try {
    parse();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

void check_unit(const RunConfig& c, const std::string& key) {
  const double v = c.number(key);
  require(v >= 0 && v <= 1, "'" + key + "' must lie in [0,1]");
}

void check_rate(const RunConfig& c, const std::string& key) {
  const double v = c.number(key);
  require(v >= 0 && std::isfinite(v), "'" + key + "' must be finite and nonnegative");
}

void check_box(const RunConfig& c) {
  const auto d = c.integer("dim");
  const auto w = c.integer("half_width");
  require(d >= 1 && d <= 3, "'dim' must lie in [1,3]");
  require(w >= 1, "'half_width' must be at least 1");
  require(std::pow(2.0 * w + 1, static_cast<double>(d)) <= 5e7, "box has too many sites");
  check_name([&] { parse_boundary(c.text("boundary")); });
}

void check_positive_int(const RunConfig& c, const std::string& key, std::int64_t lo = 1) {
  require(c.integer(key) >= lo, "'" + key + "' must be at least " + std::to_string(lo));
}

void validate(const RunConfig& c) {
  require(c.integer("seed") >= 0, "'seed' must be nonnegative");
  require(c.integer("workers") >= 1 && c.integer("workers") <= 256, "'workers' must lie in [1,256]");
  require(!c.output().empty(), "'output' must not be empty");
  const std::string& cmd = c.command;
  if (cmd == "simulate") {
    check_box(c);
    check_name([&] { parse_process(c.text("process")); });
    check_rate(c, "lambda");
    check_unit(c, "p");
    require(c.number("horizon") > 0, "'horizon' must be positive");
    check_positive_int(c, "trials");
    require(c.text("initial") == "origin" || c.text("initial") == "full", "'initial' must be origin or full");
    for (double t : c.numbers("snapshots"))
      require(t >= 0 && t <= c.number("horizon"), "snapshot times must lie in [0, horizon]");
  } else if (cmd == "couple") {
    check_box(c);
    check_name([&] { parse_pair(c.text("pair")); });
    check_rate(c, "lambda");
    check_unit(c, "p");
    check_unit(c, "p2");
    if (c.text("pair") == "spont-spont") require(c.number("p") <= c.number("p2"), "spont-spont needs p <= p2");
    require(c.number("horizon") > 0, "'horizon' must be positive");
    check_positive_int(c, "trials");
  } else if (cmd == "mono") {
    check_name([&] { parse_process(c.text("process")); });
    check_name([&] { StateOrder::parse(c.text("order")); });
    const auto cmp = c.text("compare");
    require(cmp == "self" || cmp == "p" || cmp == "lambda", "'compare' must be self, p or lambda");
    require(c.text("mode") == "symbolic" || c.text("mode") == "numeric", "'mode' must be symbolic or numeric");
    check_rate(c, "lambda");
    check_rate(c, "lambda2");
    check_unit(c, "p");
    check_unit(c, "p2");
    if (cmp == "p") require(c.number("p") <= c.number("p2"), "compare=p needs p <= p2");
    if (cmp == "lambda") require(c.number("lambda") <= c.number("lambda2"), "compare=lambda needs lambda <= lambda2");
    require(c.integer("dim") >= 1 && c.integer("dim") <= 3, "'dim' must lie in [1,3]");
  } else if (cmd == "perc") {
    require(c.text("field") == "independent" || c.text("field") == "synthetic-m1",
            "'field' must be independent or synthetic-m1");
    check_unit(c, "p");
    check_unit(c, "q");
    check_positive_int(c, "height", 0);
    check_positive_int(c, "width", 0);
    require(c.integer("height") <= 100000 && c.integer("width") <= 100000, "percolation lattice too large");
    check_positive_int(c, "trials");
  } else if (cmd == "block") {
    check_positive_int(c, "N");
    require(c.integer("K") >= 1 && c.integer("K") <= c.integer("N"), "'K' must lie in [1, N]");
    require(c.integer("dim") >= 1 && c.integer("dim") <= 3, "'dim' must lie in [1,3]");
    check_rate(c, "lambda");
    check_unit(c, "p");
    check_rate(c, "alpha1");
    check_rate(c, "alpha2");
    check_positive_int(c, "calib_trials");
    require(c.number("calib_horizon") > 0, "'calib_horizon' must be positive");
    check_positive_int(c, "calib_half_width");
    require(c.number("epsilon") > 0 && c.number("epsilon") < 1, "'epsilon' must lie in (0,1)");
    require(c.number("gamma") > 0, "'gamma' must be positive");
    check_positive_int(c, "h_trials");
    require(c.number("h_horizon") > 0, "'h_horizon' must be positive");
    require(c.integer("h_half_width") >= c.integer("K"), "'h_half_width' must be at least K");
    check_positive_int(c, "trials");
    check_positive_int(c, "good_trials", 0);
    check_positive_int(c, "wet_seeds", 0);
    check_positive_int(c, "n_max", 0);
    if (c.integer("wet_seeds") > 0) require(c.integer("good_trials") > 0, "wet-site audit needs good_trials > 0");
  } else if (cmd == "sweep") {
    check_box(c);
    require(!c.numbers("lambdas").empty() && !c.numbers("ps").empty(), "sweep grid must not be empty");
    for (double l : c.numbers("lambdas")) require(l >= 0 && std::isfinite(l), "grid lambdas must be nonnegative");
    for (double p : c.numbers("ps")) require(p >= 0 && p <= 1, "grid p values must lie in [0,1]");
    require(c.number("horizon") > 0, "'horizon' must be positive");
    check_positive_int(c, "trials", 100);
  } else if (cmd == "duality") {
    check_box(c);
    check_rate(c, "lambda");
    require(c.number("t") >= 0 && std::isfinite(c.number("t")), "'t' must be finite and nonnegative");
    check_positive_int(c, "trials");
    const auto d = c.integer("dim");
    const auto w = c.integer("half_width");
    for (const auto& s : c.values.at("sites")) {
      require(static_cast<std::int64_t>(s.size()) == d, "every site needs dim coordinates");
      for (const auto& x : s) require(std::abs(x.get<std::int64_t>()) <= w, "site outside the box");
    }
  }
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

json estimate_json(const Estimate& e) {
  return {{"estimate", e.estimate}, {"stderr", e.stderr_}, {"successes", e.successes}, {"trials", e.trials}};
}

json box_json(const Box& b) { return {{"lo", b.lo()}, {"hi", b.hi()}}; }

Box config_box(const RunConfig& c) {
  const auto w = c.integer("half_width");
  return Box::cube(static_cast<int>(c.integer("dim")), -w, w);
}

fs::path out_path(const RunConfig& c, const std::string& name) { return fs::path(c.output()) / name; }

struct Outputs {
  const RunConfig& cfg;
  std::vector<std::string> names;
  void put(const std::string& name, const std::string& content) {
    write_atomic(out_path(cfg, name).string(), content);
    names.push_back(name);
  }
};

bool run_simulate(const RunConfig& c, Outputs& out, std::string& summary) {
  const ProcessKind kind = parse_process(c.text("process"));
  const Box box = config_box(c);
  const BoundaryRule rule = parse_boundary(c.text("boundary"));
  const double lambda = c.number("lambda"), p = c.number("p"), T = c.number("horizon");
  const auto trials = static_cast<std::size_t>(c.integer("trials"));
  const Configuration init = c.text("initial") == "full" ? Configuration::filled(box, 1)
                                                         : Configuration::with_sites(box, {Coord(box.dim(), 0)});
  const std::uint64_t base = consumer_seed(c.seed(), "simulate");
  const Estimate surv = survival_proxy(kind, lambda, p, box, rule, T, trials, base, init, c.workers());
  std::vector<double> snaps = c.numbers("snapshots");
  if (snaps.empty())
    for (int k = 1; k <= 10; ++k) snaps.push_back(T * k / 10);
  std::sort(snaps.begin(), snaps.end());
  EvolveOptions keep;
  keep.stop_when_extinct = false;
  const Trajectory tr = evolve(init, kind, make_generator(make_lattice(box, rule), lambda, p, T, base), snaps, keep);
  std::string csv = "time,fertile,sterile\n0," + std::to_string(init.fertile_count()) + "," +
                    std::to_string(init.sterile_count()) + "\n";
  for (const auto& [t, cfg] : tr.snapshots)
    csv += fmt(t) + "," + std::to_string(cfg.fertile_count()) + "," + std::to_string(cfg.sterile_count()) + "\n";
  json j = {{"process", c.text("process")},
            {"lambda", lambda},
            {"p", p},
            {"box", box_json(box)},
            {"boundary", c.text("boundary")},
            {"horizon", T},
            {"initial", c.text("initial")},
            {"seed_first", base},
            {"survival", estimate_json(surv)},
            {"first_seed_extinction", tr.extinction_time ? json(*tr.extinction_time) : json(nullptr)}};
  out.put("simulate.json", dump(j));
  out.put("trajectory.csv", csv);
  summary = "survival proxy " + fmt(surv.estimate) + " +- " + fmt(surv.stderr_);
  return false;
}

bool run_couple(const RunConfig& c, Outputs& out, std::string& summary) {
  PairParams params{parse_pair(c.text("pair")), c.number("lambda"), c.number("p"), c.number("p2")};
  const Box box = config_box(c);
  const std::uint64_t base = consumer_seed(c.seed(), "couple");
  const auto r = run_pair_suite(params, box, parse_boundary(c.text("boundary")), c.number("horizon"),
                                static_cast<std::size_t>(c.integer("trials")), base, c.workers());
  json j = {{"pair", c.text("pair")},
            {"lambda", params.lambda},
            {"p1", params.p1},
            {"p2", params.pair == PairKind::SpontSpont ? json(params.p2) : json(nullptr)},
            {"box", box_json(box)},
            {"horizon", c.number("horizon")},
            {"seed_first", base},
            {"trials", r.trials},
            {"violations", r.violations},
            {"seeds_with_violations", r.seeds_with_violations},
            {"count_breaches", r.count_breaches},
            {"lower_alive", r.lower_alive},
            {"upper_alive", r.upper_alive}};
  out.put("couple.json", dump(j));
  summary = std::to_string(r.violations) + " order violations over " + std::to_string(r.trials) + " seeds";
  return r.violations > 0 || r.count_breaches > 0;
}

bool run_mono(const RunConfig& c, Outputs& out, std::string& summary) {
  const ProcessKind kind = parse_process(c.text("process"));
  const int dim = static_cast<int>(c.integer("dim"));
  const std::string cmp = c.text("compare");
  auto tables = cmp == "p"        ? tables_in_p(kind, c.number("lambda"), c.number("p"), c.number("p2"), dim)
                : cmp == "lambda" ? tables_in_lambda(kind, c.number("lambda"), c.number("lambda2"), c.number("p"), dim)
                                  : std::pair{builtin_tables(kind, c.number("lambda"), c.number("p"), dim),
                                              builtin_tables(kind, c.number("lambda"), c.number("p"), dim)};
  auto load_table = [](const std::string& path) {
    try {
      return RateTable::from_json(parse_json_text(read_file(path), path));
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  };
  if (!c.text("lower_table").empty()) tables.first = load_table(c.text("lower_table"));
  if (!c.text("upper_table").empty()) tables.second = load_table(c.text("upper_table"));
  const StateOrder order = StateOrder::parse(c.text("order"));
  const CheckMode mode = c.text("mode") == "numeric" ? CheckMode::Numeric : CheckMode::Symbolic;
  const auto v = check_monotone(tables.first, tables.second, order, mode);
  json j = {{"order", order.name()},
            {"mode", c.text("mode")},
            {"lower", tables.first.to_json()},
            {"upper", tables.second.to_json()},
            {"verdict", verdict_json(v)}};
  out.put("mono.json", dump(j));
  summary = std::string(v.pass ? "monotone" : "not monotone") + " (" + std::to_string(v.failures.size()) +
            " failing instances of " + std::to_string(v.instances) + ")";
  return false;
}

bool run_perc(const RunConfig& c, Outputs& out, std::string& summary) {
  const auto height = c.integer("height");
  const auto width = c.integer("width") > 0 ? c.integer("width") : std::max<std::int64_t>(height, 1);
  const EvenLattice lat(height, width);
  const auto trials = static_cast<std::size_t>(c.integer("trials"));
  const std::uint64_t base = consumer_seed(c.seed(), "perc");
  const bool indep = c.text("field") == "independent";
  Estimate e;
  if (indep) {
    e = survival_to_top(lat, c.number("p"), trials, base, c.workers());
  } else {
    const double q = c.number("q");
    auto top = parallel_map(trials, c.workers(), [&](std::size_t i) -> char {
      return cluster_from_origin(sample_synthetic_m1(lat, q, base + i)).reached_top();
    });
    e = binomial_estimate(static_cast<std::size_t>(std::count(top.begin(), top.end(), 1)), trials);
  }
  const int M = indep ? 0 : 1;
  const Threshold th = dependent_threshold(M);
  const double density = indep ? c.number("p") : 1 - (1 - c.number("q")) * (1 - c.number("q"));
  json j = {{"field", c.text("field")},
            {"height", height},
            {"width", width},
            {"density", density},
            {"M", M},
            {"threshold", {{"value", th.value}, {"base", th.base}, {"exponent", th.exponent}}},
            {"seed_first", base},
            {"reach_top", estimate_json(e)}};
  out.put("perc.json", dump(j));
  summary = "origin cluster reaches level " + std::to_string(height) + " with frequency " + fmt(e.estimate);
  return false;
}

bool run_block(const RunConfig& c, Outputs& out, std::string& summary) {
  const int N = static_cast<int>(c.integer("N")), K = static_cast<int>(c.integer("K"));
  const int d = static_cast<int>(c.integer("dim"));
  const double lambda = c.number("lambda"), p = c.number("p");
  double a1 = c.number("alpha1"), a2 = c.number("alpha2");
  json calib = nullptr;
  if (a1 == 0 || a2 == 0) {
    const auto s = calibrate_speeds(lambda * p, d, c.integer("calib_half_width"), c.number("calib_horizon"),
                                    static_cast<std::size_t>(c.integer("calib_trials")),
                                    consumer_seed(c.seed(), "calibrate"), c.number("epsilon"), c.workers());
    if (!s.alpha2) throw ParameterError("speed calibration failed: no calibration run survived");
    calib = {{"alpha1", s.alpha1}, {"alpha2", *s.alpha2}, {"trials", s.trials}, {"surviving", s.surviving},
             {"epsilon", s.epsilon}, {"horizon", s.horizon}};
    if (a1 == 0) a1 = s.alpha1;
    if (a2 == 0) a2 = *s.alpha2;
  }
  const BlockGeometry g = BlockGeometry::make(N, K, d, a1, a2);
  HOptions ho;
  ho.lambda_p = lambda * p;
  ho.gamma = c.number("gamma");
  ho.trials = static_cast<std::size_t>(c.integer("h_trials"));
  ho.horizon = c.number("h_horizon");
  ho.half_width = c.integer("h_half_width");
  ho.seed = consumer_seed(c.seed(), "h");
  const HEvaluator h(g, ho);
  const Configuration xi = Configuration::filled(Box::cube(d, -N, N), 1);
  const HMembership hm = h.membership(xi, Coord(d, 0));

  json j;
  j["geometry"] = {{"N", g.N},   {"K", g.K},   {"d", g.d},       {"alpha1", g.alpha1}, {"alpha2", g.alpha2},
                   {"alpha_prime", g.alpha_prime}, {"T1", g.T1}, {"T", g.T}, {"T2", g.T2}, {"k", g.k},
                   {"j", g.j},   {"M", g.M}};
  j["calibration"] = calib;
  j["lambda"] = lambda;
  j["p"] = p;
  j["initial_in_H"] = {{"verdict", to_string(hm.verdict)},
                       {"point", hm.point},
                       {"survival", estimate_json(hm.survival)},
                       {"threshold", hm.threshold}};
  if (!hm.point) {
    out.put("block.json", dump(j));
    summary = "initial block is not in H; nothing to estimate";
    return false;
  }
  BlockOptions bo;
  bo.evaluate_good = c.flag("good");
  bo.workers = c.workers();
  const auto r = block_events(xi, h, lambda, p, static_cast<std::size_t>(c.integer("trials")),
                              consumer_seed(c.seed(), "block"), bo);
  j["events"] = {{"seed_first", r.seed0},
                 {"E1", estimate_json(r.e1)},
                 {"E2", estimate_json(r.e2)},
                 {"E3", estimate_json(r.e3)},
                 {"E4", estimate_json(r.e4)},
                 {"E", estimate_json(r.e_all)},
                 {"E1E2", estimate_json(r.e1e2)},
                 {"E3E4", estimate_json(r.e3e4)},
                 {"G", r.good_evaluated ? estimate_json(r.good) : json(nullptr)}};
  j["closed_form"] = {{"E1", r.e1_closed_form},
                      {"E1_rate_2d", r.e1_closed_form_2d},
                      {"E1E2", r.e1e2_closed_form},
                      {"sites_outside_I", r.outside_I_sites},
                      {"nominal_outside_count", r.nominal_outside_count}};
  std::size_t breaches = r.restriction_violations + r.inclusion_violations + r.implication_breaches;
  j["audits"] = {{"restriction_violations", r.restriction_violations},
                 {"inclusion_violations", r.inclusion_violations},
                 {"implication_breaches", r.implication_breaches}};
  summary = "P(E1) " + fmt(r.e1.estimate) + " vs closed form " + fmt(r.e1_closed_form);

  const auto wet_seeds = static_cast<std::size_t>(c.integer("wet_seeds"));
  if (wet_seeds > 0) {
    const Estimate ge = good_event(xi, h, lambda, p, static_cast<std::size_t>(c.integer("good_trials")),
                                   consumer_seed(c.seed(), "good"), c.workers());
    WetOptions wo;
    wo.good_estimate = ge.estimate;
    wo.p_site = std::max(0.0, ge.estimate - 3 * ge.stderr_);
    const auto n_max = c.integer("n_max");
    const std::uint64_t base = consumer_seed(c.seed(), "wet");
    const auto reports = parallel_map(wet_seeds, c.workers(),
                                      [&](std::size_t i) { return wet_sites(xi, h, lambda, p, n_max, base + i, wo); });
    std::string csv = "seed,level,in_h,wet,good,cluster,cluster_unthinned\n";
    std::size_t contain = 0, hv = 0, gw = 0, un = 0, rv = 0, top = 0;
    for (const auto& w : reports) {
      contain += w.containment_violations;
      hv += w.h_violations;
      gw += w.good_not_wet;
      un += w.unthinned_violations;
      rv += w.restriction_violations;
      top += w.cluster.reached_top();
      for (std::int64_t n = 0; n <= n_max; ++n) {
        auto level_size = [n](const Cluster& cl) {
          return n < static_cast<std::int64_t>(cl.levels.size()) ? cl.levels[n].size() : std::size_t{0};
        };
        csv += std::to_string(w.seed) + "," + std::to_string(n) + "," + std::to_string(w.in_h[n].size()) + "," +
               std::to_string(w.wet[n].size()) + "," + std::to_string(w.good[n].size()) + "," +
               std::to_string(level_size(w.cluster)) + "," + std::to_string(level_size(w.cluster_unthinned)) + "\n";
      }
    }
    j["wet"] = {{"seeds", wet_seeds},
                {"seed_first", base},
                {"n_max", n_max},
                {"good_estimate", estimate_json(ge)},
                {"p_site", wo.p_site},
                {"containment_violations", contain},
                {"h_violations", hv},
                {"good_not_wet", gw},
                {"unthinned_violations", un},
                {"restriction_violations", rv},
                {"clusters_reaching_top", top}};
    breaches += contain + hv + gw + un + rv;
    out.put("wet.csv", csv);
    summary += "; wet-site containment violations " + std::to_string(contain);
  }
  out.put("block.json", dump(j));
  return breaches > 0;
}

bool run_sweep_cmd(const RunConfig& c, Outputs& out, std::string& summary) {
  const SweepRecord r = run_sweep(c);
  out.put("sweep.csv", sweep_csv(r));
  out.put("sweep.json", dump(sweep_json(r)));
  summary = std::to_string(r.cells.size()) + " cells, " + std::to_string(r.pathwise_violations) +
            " pathwise violations, " + std::to_string(r.monotonicity_flags.size()) + " monotonicity flags";
  return r.pathwise_violations > 0;
}

bool run_duality(const RunConfig& c, Outputs& out, std::string& summary) {
  const Box box = config_box(c);
  Configuration z(box);
  for (const auto& s : c.values.at("sites")) z.set(s.get<Coord>(), 1);
  const std::uint64_t base = consumer_seed(c.seed(), "duality");
  const auto r = duality_check(z, c.number("lambda"), c.number("t"), parse_boundary(c.text("boundary")),
                               static_cast<std::size_t>(c.integer("trials")), base, c.workers());
  json j = {{"lambda", c.number("lambda")},
            {"t", c.number("t")},
            {"box", box_json(box)},
            {"sites", c.values.at("sites")},
            {"seed_first", base},
            {"lhs", estimate_json(r.lhs)},
            {"rhs", estimate_json(r.rhs)},
            {"z", r.z},
            {"within_3_sigma", std::abs(r.z) < 3}};
  out.put("duality.json", dump(j));
  summary = "survival " + fmt(r.lhs.estimate) + " vs dual " + fmt(r.rhs.estimate) + ", z = " + fmt(r.z);
  return false;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "couple", "mono", "perc", "block", "sweep", "duality"};
  return names;
}

const std::vector<Field>& command_fields(const std::string& command) {
  const auto& f = all_fields();
  auto it = f.find(command);
  if (it == f.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const { return values.at(key).get<double>(); }
std::int64_t RunConfig::integer(const std::string& key) const { return values.at(key).get<std::int64_t>(); }
bool RunConfig::flag(const std::string& key) const { return values.at(key).get<bool>(); }
std::string RunConfig::text(const std::string& key) const { return values.at(key).get<std::string>(); }
std::vector<double> RunConfig::numbers(const std::string& key) const {
  return values.at(key).get<std::vector<double>>();
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = e.byte > 0 ? std::min<std::size_t>(e.byte - 1, text.size()) : 0;
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto pos = what.find(": ", what.find("parse error"));
    if (pos != std::string::npos) what = what.substr(pos + 2);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

RunConfig resolve(const std::string& command, const json& file_values, const json& overrides) {
  const auto& fields = command_fields(command);
  for (const json* layer : {&file_values, &overrides}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : layer->items()) {
      if (key == "command") throw ConfigError("'command' is only allowed at the top level of a config file");
      const bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
      if (!known) throw ConfigError("unknown field '" + key + "' for command " + command);
    }
  }
  RunConfig cfg;
  cfg.command = command;
  for (const Field& f : fields) {
    json v = f.fallback;
    if (file_values.is_object() && file_values.contains(f.key)) v = file_values.at(f.key);
    if (overrides.is_object() && overrides.contains(f.key)) v = overrides.at(f.key);
    cfg.values[f.key] = coerce(f, v);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path, const std::string& command, const json& overrides) {
  json j = parse_json_text(read_file(path), path);
  if (j.is_object() && j.contains("config") && j.contains("outputs")) j = j.at("config");
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  std::string cmd = command;
  if (j.contains("command")) {
    if (!j.at("command").is_string()) throw ConfigError(path + ": 'command' must be a string");
    const std::string file_cmd = j.at("command").get<std::string>();
    if (!cmd.empty() && cmd != file_cmd)
      throw ConfigError(path + ": config is for '" + file_cmd + "', not '" + cmd + "'");
    cmd = file_cmd;
    j.erase("command");
  }
  if (cmd.empty()) throw ConfigError(path + ": no command given");
  return resolve(cmd, j, overrides);
}

json config_json(const RunConfig& cfg) {
  json j = cfg.values;
  j["command"] = cfg.command;
  return j;
}

void write_config(const RunConfig& cfg, const std::string& path) { write_atomic(path, dump(config_json(cfg))); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError(target.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(tmp.string() + ": cannot open for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) throw IoError(tmp.string() + ": write failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(target.string() + ": cannot replace file");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError(path + ": read failed");
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

json manifest_json(const RunManifest& m) {
  json outs = json::array();
  for (const auto& o : m.outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return {{"tool", "islab"},
          {"version", m.tool_version},
          {"config", config_json(m.config)},
          {"wall_seconds", m.wall_seconds},
          {"outputs", outs}};
}

RunManifest write_manifest(const RunConfig& cfg, const std::vector<std::string>& outputs, double wall_seconds) {
  RunManifest m;
  m.tool_version = kVersion;
  m.config = cfg;
  m.wall_seconds = wall_seconds;
  for (const auto& name : outputs) {
    const std::string bytes = read_file(out_path(cfg, name).string());
    m.outputs.push_back({name, sha256_hex(bytes), bytes.size()});
  }
  write_atomic(out_path(cfg, "manifest.json").string(), dump(manifest_json(m)));
  return m;
}

std::uint64_t consumer_seed(std::uint64_t master, const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return domain_key(KeyDomain::Derived, master, h);
}

SweepRecord run_sweep(const RunConfig& cfg) {
  if (cfg.command != "sweep") throw ConfigError("run_sweep needs a sweep config");
  SweepRecord r;
  r.lambdas = cfg.numbers("lambdas");
  r.ps = cfg.numbers("ps");
  r.box = config_box(cfg);
  r.horizon = cfg.number("horizon");
  r.trials = static_cast<std::size_t>(cfg.integer("trials"));
  const BoundaryRule rule = parse_boundary(cfg.text("boundary"));
  const std::uint64_t base = consumer_seed(cfg.seed(), "sweep");
  std::size_t index = 0;
  for (double lambda : r.lambdas) {
    for (double p : r.ps) {
      SweepCell cell;
      cell.lambda = lambda;
      cell.p = p;
      cell.seed_first = base + index * r.trials;
      cell.result = run_sandwich(lambda, p, r.box, rule, r.horizon, r.trials, cell.seed_first, cfg.workers());
      cell.spont = binomial_estimate(cell.result.alive[0], r.trials);
      r.pathwise_violations += cell.result.spont_is_violations + cell.result.is_contact_violations;
      r.cells.push_back(cell);
      ++index;
    }
  }
  flag_monotonicity(r);
  return r;
}

void flag_monotonicity(SweepRecord& r) {
  r.monotonicity_flags.clear();
  const std::size_t np = r.ps.size();
  for (std::size_t li = 0; li < r.lambdas.size(); ++li) {
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b < np; ++b) {
        const SweepCell& lo = r.cells[li * np + a];
        const SweepCell& hi = r.cells[li * np + b];
        if (!(lo.p < hi.p)) continue;
        const double joint = std::sqrt(lo.spont.stderr_ * lo.spont.stderr_ + hi.spont.stderr_ * hi.spont.stderr_);
        if (hi.spont.estimate < lo.spont.estimate - 3 * joint)
          r.monotonicity_flags.push_back({r.lambdas[li], lo.p, hi.p});
      }
  }
}

json sweep_json(const SweepRecord& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"lambda", c.lambda},
                     {"p", c.p},
                     {"seed_first", c.seed_first},
                     {"seed_last", c.seed_first + r.trials - 1},
                     {"spont", estimate_json(c.spont)},
                     {"is", estimate_json(binomial_estimate(c.result.alive[1], r.trials))},
                     {"contact_lambda_p", estimate_json(binomial_estimate(c.result.alive[2], r.trials))},
                     {"spont_is_violations", c.result.spont_is_violations},
                     {"is_contact_violations", c.result.is_contact_violations},
                     {"survival_order_breaches", c.result.count_breaches}});
  }
  json flags = json::array();
  for (const auto& f : r.monotonicity_flags) flags.push_back({{"lambda", f[0]}, {"p_low", f[1]}, {"p_high", f[2]}});
  return {{"process", r.process},
          {"lambdas", r.lambdas},
          {"ps", r.ps},
          {"box", box_json(r.box)},
          {"horizon", r.horizon},
          {"trials", r.trials},
          {"cells", cells},
          {"pathwise_violations", r.pathwise_violations},
          {"monotonicity_flags", flags}};
}

std::string sweep_csv(const SweepRecord& r) {
  std::string csv = "lambda,p,estimate,stderr,trials\n";
  for (const auto& c : r.cells)
    csv += fmt(c.lambda) + "," + fmt(c.p) + "," + fmt(c.spont.estimate) + "," + fmt(c.spont.stderr_) + "," +
           std::to_string(r.trials) + "\n";
  return csv;
}

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out{cfg, {}};
  RunResult res;
  const std::string& c = cfg.command;
  if (c == "simulate")
    res.invariant_violation = run_simulate(cfg, out, res.summary);
  else if (c == "couple")
    res.invariant_violation = run_couple(cfg, out, res.summary);
  else if (c == "mono")
    res.invariant_violation = run_mono(cfg, out, res.summary);
  else if (c == "perc")
    res.invariant_violation = run_perc(cfg, out, res.summary);
  else if (c == "block")
    res.invariant_violation = run_block(cfg, out, res.summary);
  else if (c == "sweep")
    res.invariant_violation = run_sweep_cmd(cfg, out, res.summary);
  else if (c == "duality")
    res.invariant_violation = run_duality(cfg, out, res.summary);
  else
    throw ConfigError("unknown command '" + c + "'");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.manifest = write_manifest(cfg, out.names, wall);
  return res;
}

}  // namespace islab::cli
