#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fracred/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fractional Calderon toolkit: exterior-value problems and their reductions"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::vector<std::string> suites;
  std::uint64_t seed = 0;
  CLI::App* run = app.add_subcommand("run", "run the suites of a configuration");
  run->add_option("config", config, "configuration JSON")->required();
  CLI::Option* out_opt = run->add_option("--out", out, "output directory");
  CLI::Option* suites_opt =
      run->add_option("--suites", suites, "comma-separated suite names")->delimiter(',');
  CLI::Option* seed_opt = run->add_option("--seed", seed, "random seed");

  app.add_subcommand("list-suites", "print the available suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fracred::kExitSchema;
  }

  if (app.got_subcommand("list-suites")) {
    std::cout << fracred::list_suites_text();
    return fracred::kExitOk;
  }
  fracred::RunOptions opts;
  if (*out_opt) opts.out = out;
  if (*suites_opt) opts.suites = suites;
  if (*seed_opt) opts.seed = seed;
  return fracred::run_experiment(config, opts, std::cout);
}
