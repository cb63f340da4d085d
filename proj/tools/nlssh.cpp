// nlssh: command-line front end for the nonlinear SSH waveguide simulator.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlssh/cli/commands.hpp"
#include "nlssh/cli/config.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  unsigned workers = nlssh::default_workers();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides output.dir)");
  cmd->add_option("--workers", f.workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "base seed (overrides seed)");
  cmd->add_option("--set", f.sets, "KEY=VALUE override, e.g. lattice.n_sites=51 (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nlssh::cli;
  CLI::App app{"Nonlinear SSH waveguide lattice simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Flags flags;
  std::optional<Mode> mode;
  for (auto m : {Mode::evolve, Mode::spectrum, Mode::sweep, Mode::disorder}) {
    auto* sub = app.add_subcommand(std::string(to_string(m)), "run a " + std::string(to_string(m)) + " experiment");
    add_common(sub, flags);
    sub->callback([&mode, m] { mode = m; });
  }
  auto* validate = app.add_subcommand("validate", "check a configuration and print it resolved");
  add_common(validate, flags);

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    std::vector<Override> overrides;
    for (const auto& s : flags.sets) overrides.push_back(parse_override(s));
    if (!flags.out.empty()) overrides.push_back({"output.dir", flags.out});
    if (flags.seed) overrides.push_back({"seed", std::to_string(*flags.seed)});
    cfg = load_config(flags.config, overrides, mode);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  if (!mode) {
    auto doc = config_json(cfg);
    doc["output_dir"] = cfg.output_dir;
    doc["manifest_hash"] = manifest_hash(cfg);
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  }
  try {
    return run_command(cfg, CommandOptions{flags.workers, &std::cerr});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
