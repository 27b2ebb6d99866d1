#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "switchsplit/config.hpp"
#include "switchsplit/errors.hpp"
#include "switchsplit/experiment.hpp"
#include "switchsplit/selftest.hpp"

int main(int argc, char** argv) {
  using namespace switchsplit;

  CLI::App app{"Rare-event probabilities for switching diffusions by multilevel splitting"};
  app.require_subcommand(1);

  std::string run_config, run_output;
  std::uint64_t run_seed = 0;
  unsigned run_threads = 0;
  CLI::App* run = app.add_subcommand("run", "Execute the experiment described by a JSON config");
  run->add_option("config", run_config, "path to the JSON config")->required();
  CLI::Option* out_opt =
      run->add_option("--output", run_output, "write results here instead of output.path");
  CLI::Option* seed_opt =
      run->add_option("--seed", run_seed, "override engine.seed");
  run->add_option("--threads", run_threads,
                  "worker threads, 0 = one per core; never changes the results");

  std::string validate_config;
  CLI::App* validate =
      app.add_subcommand("validate", "Check a config and print it with all defaults resolved");
  validate->add_option("config", validate_config, "path to the JSON config")->required();

  std::string suite = "fast";
  unsigned selftest_threads = 0;
  CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in check suites");
  selftest->add_option("--suite", suite, "fast | oracle | variance | all")
      ->capture_default_str();
  selftest->add_option("--threads", selftest_threads, "worker threads, 0 = one per core");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg = load_config_file(run_config);
      RunOverrides overrides;
      if (out_opt->count() > 0) overrides.output_path = run_output;
      if (seed_opt->count() > 0) overrides.seed = run_seed;
      overrides.threads = run_threads;
      run_experiment(cfg, overrides, &std::cout);
      return 0;
    }
    if (validate->parsed()) {
      const ExperimentConfig cfg = load_config_file(validate_config);
      std::cout << cfg.to_json().dump(2) << "\n";
      return 0;
    }
    if (selftest->parsed()) {
      const SuiteResult result = run_selftest(suite, selftest_threads, std::cout);
      return result.all_passed() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
