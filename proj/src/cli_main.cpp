#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "islab/cli.hpp"

namespace islab::cli {

namespace {

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& ch : s)
    if (ch == '_') ch = '-';
  return "--" + s;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"islab: contact, inherited-sterility and spontaneous-sterility processes; couplings, "
               "monotonicity checks, percolation and block audits"};
  app.require_subcommand(1);
  std::map<std::string, std::string> config_path;
  std::map<std::string, bool> print_only;
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  const std::map<std::string, std::string> about = {
      {"simulate", "survival proxy of one process from a single fertile site"},
      {"couple", "pathwise domination audit of a basic coupling"},
      {"mono", "monotonicity criterion on rate tables"},
      {"perc", "oriented site percolation from the origin"},
      {"block", "block events, good event and wet-site audit"},
      {"sweep", "Spont / IS / contact sandwich over a (lambda, p) grid"},
      {"duality", "self-duality check of the contact process"},
  };
  for (const std::string& cmd : command_names()) {
    CLI::App* sub = app.add_subcommand(cmd, about.at(cmd));
    sub->add_option("--config", config_path[cmd], "JSON config or manifest; flags override it");
    sub->add_flag("--print-config", print_only[cmd], "print the resolved config and exit");
    for (const Field& f : command_fields(cmd)) {
      std::string help = f.help + " (default " + f.fallback.dump() + ")";
      opts[cmd][f.key] = sub->add_option(flag_name(f.key), raw[cmd][f.key], help);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    nlohmann::json overrides = nlohmann::json::object();
    for (const Field& f : command_fields(cmd)) {
      if (opts[cmd][f.key]->count() == 0) continue;
      const std::string& v = raw[cmd][f.key];
      overrides[f.key] = f.kind == FieldKind::String ? nlohmann::json(v) : parse_json_text(v, flag_name(f.key));
    }
    const RunConfig cfg = config_path[cmd].empty() ? resolve(cmd, nlohmann::json::object(), overrides)
                                                   : load_config(config_path[cmd], cmd, overrides);
    if (print_only[cmd]) {
      std::cout << dump(config_json(cfg));
      return kOk;
    }
    const RunResult r = run(cfg);
    std::cout << cmd << ": " << r.summary << "\n";
    for (const auto& o : r.manifest.outputs) std::cout << "  " << cfg.output() << "/" << o.path << "  " << o.sha256 << "\n";
    if (r.invariant_violation) {
      std::cerr << "invariant violation detected; see the outputs above\n";
      return kInvariantViolation;
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ContainmentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace islab::cli
