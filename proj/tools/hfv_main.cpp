// Command-line driver: mesh-gen, run, convergence and check subcommands on
// top of the configuration file.

#include "hfv/config.hpp"
#include "hfv/run_command.hpp"
#include "hfv/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> condense;
  std::optional<double> alpha;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file")->required();
  cmd->add_option("--seed", args.seed, "override mesh.seed");
  cmd->add_option("--out", args.out, "override output.dir");
  cmd->add_option("--condense", args.condense, "override solver.condense (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--alpha", args.alpha, "override the stabilization parameter");
}

hfv::RunConfig load(const CommonArgs& args) {
  hfv::RunConfig config = hfv::parse_config(args.config_path);
  if (args.seed) config.mesh.seed = *args.seed;
  if (args.out) config.output.dir = *args.out;
  if (args.condense) config.solver.condense = *args.condense == "on";
  if (args.alpha) {
    if (!(*args.alpha > 0.0)) throw hfv::ConfigError("--alpha must be positive");
    config.solver.alpha = *args.alpha;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid finite-volume solver for degenerate parabolic "
               "convection-reaction-diffusion problems"};
  app.set_version_flag("--version", hfv::version_string());
  app.require_subcommand(1);

  CommonArgs run_args, conv_args, mesh_args, check_args;
  bool dry_run = false;

  CLI::App* cmd_run = app.add_subcommand("run", "solve the configured problem");
  add_common(cmd_run, run_args);
  cmd_run->add_flag("--dry-run", dry_run, "validate config and mesh, write metadata only");

  CLI::App* cmd_conv = app.add_subcommand("convergence", "mesh/time refinement study");
  add_common(cmd_conv, conv_args);

  CLI::App* cmd_mesh = app.add_subcommand("mesh-gen", "generate and write the mesh");
  add_common(cmd_mesh, mesh_args);

  CLI::App* cmd_check = app.add_subcommand("check", "validate config, mesh and hypotheses");
  add_common(cmd_check, check_args);

  CLI11_PARSE(app, argc, argv);

  try {
    hfv::CommandResult result;
    if (cmd_run->parsed())
      result = hfv::run_command(load(run_args), dry_run, std::cout);
    else if (cmd_conv->parsed())
      result = hfv::convergence_command(load(conv_args), std::cout);
    else if (cmd_mesh->parsed())
      result = hfv::mesh_gen_command(load(mesh_args), std::cout);
    else
      result = hfv::check_command(load(check_args), std::cout);
    if (!result.message.empty()) std::cerr << result.message << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
