// Command line front end: esdlab <experiment> --config file.json [--out dir]
// [--seed u64] [--threads k].
//
// Exit codes: 0 all assertions passed, 1 assertion failure, 2 configuration
// error, 3 numerical failure.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "esdlab/error.hpp"
#include "esdlab/harness.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

unsigned thread_override(unsigned fallback) {
  const char* env = std::getenv("ESDLAB_THREADS");
  if (!env || !*env) return fallback;
  try {
    const long v = std::stol(env);
    if (v < 1) throw esdlab::ConfigError("ESDLAB_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  } catch (const std::logic_error&) {
    throw esdlab::ConfigError("ESDLAB_THREADS must be a positive integer");
  }
}

int run(const std::string& command, const Args& args, bool seed_given, bool out_given) {
  auto config = esdlab::load_config(args.config);
  const auto expected = esdlab::parse_experiment_kind(command);
  if (config.experiment != expected) {
    throw esdlab::ConfigError("config is for '" + esdlab::to_string(config.experiment) + "', not '" + command + "'");
  }
  if (seed_given) config.master_seed = args.seed;
  if (out_given) config.output_dir = args.out;

  esdlab::RunOptions options;
  options.threads = thread_override(args.threads);
  const auto result = esdlab::run_experiment(config, options);

  bool passed = true;
  for (const auto& a : result.assertions) {
    std::cout << (a.passed ? "PASS  " : "FAIL  ") << a.name;
    if (!a.detail.empty()) std::cout << "  (" << a.detail << ")";
    std::cout << '\n';
    passed = passed && a.passed;
  }
  if (result.numerical_failures > 0) {
    std::cout << result.numerical_failures << " trial(s) hit a numerical failure\n";
  }
  std::cout << "outputs in " << config.output_dir << '\n';
  if (result.numerical_failures > 0) return 3;
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"esdlab: empirical spectral distribution laboratory"};
  app.require_subcommand(1);
  Args args;
  const char* names[] = {"circular", "universality", "hermitize", "ds-solve", "tails", "lemmas"};
  std::vector<CLI::Option*> seed_opts, out_opts;
  for (const char* name : names) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", args.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    out_opts.push_back(sub->add_option("--out", args.out, "output directory (overrides output_dir)"));
    seed_opts.push_back(sub->add_option("--seed", args.seed, "master seed (overrides master_seed)"));
    sub->add_option("--threads", args.threads, "worker threads (ESDLAB_THREADS takes precedence)")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto* sub = app.get_subcommands().front();
  const auto given = [&](const std::vector<CLI::Option*>& opts) {
    for (auto* o : opts) {
      if (o->count() > 0) return true;
    }
    return false;
  };
  try {
    return run(sub->get_name(), args, given(seed_opts), given(out_opts));
  } catch (const esdlab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const esdlab::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const esdlab::DegenerateError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    // I/O problems (unwritable output_dir and the like) count as setup errors.
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
