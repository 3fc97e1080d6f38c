#include "cli/app.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "oed/errors.hpp"

namespace oed::cli {

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

const char* description(const std::string& command) {
  if (command == "scan") return "EIG on a uniform design grid";
  if (command == "optimize") return "ensemble of stochastic design optimizations";
  if (command == "surrogate") return "polynomial chaos surrogate by sparse pseudospectral projection";
  if (command == "infer") return "DRAM posterior sampling and density grid";
  if (command == "bias") return "estimator bias against inner sample size";
  return "acceptance checks; exit status 0 iff all pass";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian optimal experimental design toolkit", "oed"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, description(name));
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--seed", flags.seed, "overrides the config seed");
    sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--set", flags.overrides, "config override key.path=value")->allow_extra_args(false);
  }

  std::string command;
  try {
    app.parse(argc, argv);
    command = app.get_subcommands().front()->get_name();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    for (const auto* sub : app.get_subcommands()) {
      if (sub->parsed()) {
        command = sub->get_name();
      }
    }
    err << error_record("UsageError", e.what(), command) << '\n';
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    Json user = read_config_file(flags.config);
    if (!user.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& o : flags.overrides) apply_override(user, o);
    if (flags.seed) user["seed"] = *flags.seed;
    if (flags.workers) user["workers"] = *flags.workers;
    if (flags.out) user["out"] = *flags.out;
    cfg = resolve_config(user);
  } catch (const Error& e) {
    err << error_record(e.kind(), e.what(), command) << '\n';
    return kExitConfig;
  }

  try {
    run_command(command, cfg, out);
  } catch (const CommandFailure& e) {
    err << error_record(e.kind(), e.what(), command) << '\n';
    return e.exit_code();
  } catch (const ConfigError& e) {
    err << error_record(e.kind(), e.what(), command) << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << error_record(e.kind(), e.what(), command) << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << error_record("InternalError", e.what(), command) << '\n';
    return kExitFailure;
  }
  return 0;
}

}  // namespace oed::cli
