#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nnc/bench.hpp"
#include "nnc/version.hpp"

namespace {

struct BenchArgs {
  std::string config_path;
  std::vector<std::string> estimators;
  // raw override strings, parsed by the same code path as the config file
  std::vector<std::pair<std::string, std::string>> overrides;
};

int run_bench(const BenchArgs& args) {
  nnc::BenchConfig config;
  if (!args.config_path.empty()) config = nnc::parse_config_file(args.config_path);
  for (const auto& [key, value] : args.overrides) nnc::apply_config_key(config, key, value);
  if (!args.estimators.empty()) {
    config.estimators.clear();
    for (const std::string& name : args.estimators) {
      config.estimators.push_back(nnc::method_from_string(name));
    }
  }

  const nnc::BenchReport report = nnc::run(config);
  const std::string csv_path = nnc::write_report(report);

  std::printf("%-14s %12s %10s %8s\n", "estimator", "mean", "se", "trials");
  for (const nnc::MethodSummary& s : report.overall) {
    const std::string name(nnc::method_name(s.method));
    if (s.mean_of_trial_means) {
      std::printf("%-14s %12.6g %10.3g %8zu\n", name.c_str(), *s.mean_of_trial_means,
                  s.se_over_trials, s.n_trials);
    } else {
      std::printf("%-14s %12s %10s %8zu\n", name.c_str(), "failed", "-", s.n_trials);
    }
  }
  std::printf("wrote %s and %s (%.1fs)\n", report.config.out.c_str(), csv_path.c_str(),
              report.runtime_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nearest neighbor matrix completion benchmark"};
  app.set_version_flag("--version", std::string(nnc::kVersion));
  app.require_subcommand(1);

  BenchArgs args;
  CLI::App* bench = app.add_subcommand("bench", "run the benchmark described by a config file");
  bench->add_option("--config", args.config_path, "config file (key = value lines)");
  bench->add_option("--estimator", args.estimators,
                    "estimator to run (repeatable; replaces the config's list)");

  // every override funnels through the config grammar so flag and file
  // behavior can never drift apart
  const std::pair<const char*, const char*> kOverrides[] = {
      {"--dataset", "dataset"},       {"--sigma", "sigma"},
      {"--propensity", "propensity"}, {"--n-rows", "n_rows"},
      {"--n-cols", "n_cols"},         {"--trials", "trials"},
      {"--seed", "seed"},             {"--metric", "metric"},
      {"--out", "out"},
  };
  for (const auto& [flag, key] : kOverrides) {
    const std::string key_copy = key;
    bench
        ->add_option_function<std::string>(
            flag,
            [&args, key_copy](const std::string& value) {
              args.overrides.emplace_back(key_copy, value);
            },
            std::string("overrides config key '") + key + "'")
        ->type_name("VALUE");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run_bench(args);
  } catch (const nnc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const nnc::ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const nnc::DuplicateEntry& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const nnc::RatingOutOfRange& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const nnc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
