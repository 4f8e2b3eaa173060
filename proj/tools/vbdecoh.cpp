#include <CLI11.hpp>
#include <iostream>

#include "app/commands.hpp"
#include "app/config.hpp"

using namespace vbdecoh::app;

int main(int argc, char** argv) {
  CLI::App cli{"Hahn-echo decoherence of the boron-vacancy spin in hBN"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", VBDECOH_VERSION);

  CommandOptions opts;
  std::string config;
  std::string preset;
  int threads = 0;
  std::string output_dir;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--preset", preset, "start from a built-in configuration")
        ->check(CLI::IsMember(kPresets));
    sub->add_option("--threads", threads, "worker threads (env " + std::string(kThreadsEnv) + ")")
        ->check(CLI::PositiveNumber);
    sub->add_option("--output-dir", output_dir, "output directory (env " + std::string(kOutputDirEnv) + ")");
  };
  auto* validate = cli.add_subcommand("validate", "check a configuration and its dataset without computing");
  auto* run = cli.add_subcommand("run", "run the configured point, sweep, convergence study and ablations");
  auto* oracle = cli.add_subcommand("oracle-check", "compare gCCE against exact propagation on a small bath");
  common(validate);
  common(run);
  common(oracle);

  double radius = 30.0;
  std::string dataset_path = "synthetic_hyperfine.csv";
  auto* make_dataset = cli.add_subcommand("make-dataset", "write the synthetic hyperfine dataset as CSV");
  make_dataset->add_option("--radius", radius, "site cutoff around the vacancy, A");
  make_dataset->add_option("--output", dataset_path, "CSV path");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kSuccess : kValidationFailure;
  }

  if (!config.empty()) opts.config = config;
  if (!preset.empty()) opts.preset = preset;
  if (threads > 0) opts.threads = threads;
  if (!output_dir.empty()) opts.output_dir = output_dir;

  if (*validate) return cmd_validate(opts, std::cout, std::cerr);
  if (*run) return cmd_run(opts, std::cout, std::cerr);
  if (*oracle) return cmd_oracle_check(opts, std::cout, std::cerr);
  return cmd_make_dataset(radius, dataset_path, std::cout, std::cerr);
}
