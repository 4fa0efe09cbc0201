#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "islab/coupling.hpp"
#include "json.hpp"

namespace islab::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kInvariantViolation = 3, kIoError = 4 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldKind { Number, Integer, Bool, String, NumberList, SiteList };

struct Field {
  std::string key;
  FieldKind kind;
  nlohmann::json fallback;
  std::string help;
};

const std::vector<std::string>& command_names();
// Common fields first, then the command's own.
const std::vector<Field>& command_fields(const std::string& command);

// Every field of the command resolved to a typed JSON value.
struct RunConfig {
  std::string command;
  nlohmann::json values = nlohmann::json::object();

  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }
  unsigned workers() const { return static_cast<unsigned>(integer("workers")); }
  std::string output() const { return text("output"); }

  bool operator==(const RunConfig& o) const { return command == o.command && values == o.values; }
};

// Parses JSON text; syntax errors name the origin, line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);

// Layers `overrides` over `file_values` over the defaults, rejects unknown
// keys and ill-typed values, then checks ranges and names.
RunConfig resolve(const std::string& command, const nlohmann::json& file_values, const nlohmann::json& overrides);

// Reads a config file or a manifest (whose echoed config is used). When
// `command` is non-empty it must match the file's command, if any.
RunConfig load_config(const std::string& path, const std::string& command, const nlohmann::json& overrides = {});

nlohmann::json config_json(const RunConfig& cfg);
void write_config(const RunConfig& cfg, const std::string& path);

std::string dump(const nlohmann::json& j);
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string tool_version;
  RunConfig config;
  double wall_seconds = 0;
  std::vector<OutputFile> outputs;
};

nlohmann::json manifest_json(const RunManifest& m);
// Hashes the listed outputs and writes manifest.json next to them.
RunManifest write_manifest(const RunConfig& cfg, const std::vector<std::string>& outputs, double wall_seconds);

// Seed base of one Monte Carlo consumer; distinct names give unrelated
// 64-bit starting points.
std::uint64_t consumer_seed(std::uint64_t master, const std::string& name);

struct SweepCell {
  double lambda = 0;
  double p = 0;
  std::uint64_t seed_first = 0;
  SandwichResult result;
  Estimate spont;
};

struct SweepRecord {
  std::vector<double> lambdas;
  std::vector<double> ps;
  std::string process = "spont";
  Box box;
  double horizon = 0;
  std::size_t trials = 0;
  std::vector<SweepCell> cells;  // lambda-major grid order
  std::size_t pathwise_violations = 0;
  // (lambda, p_lo, p_hi) pairs where the Spont estimate drops by more than
  // 3 joint standard errors
  std::vector<std::array<double, 3>> monotonicity_flags;
};

SweepRecord run_sweep(const RunConfig& cfg);
// Fills monotonicity_flags from the Spont estimates of the cells.
void flag_monotonicity(SweepRecord& r);
nlohmann::json sweep_json(const SweepRecord& r);
std::string sweep_csv(const SweepRecord& r);

struct RunResult {
  RunManifest manifest;
  bool invariant_violation = false;
  std::string summary;
};

// Runs the command, writes its outputs atomically and the manifest.
RunResult run(const RunConfig& cfg);

// Full command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace islab::cli
