// Command-line front end: one subcommand per experiment, config file in,
// CSV out.  Exit codes: 0 success, 2 config error, 3 numerical guard
// violation, 1 anything else.

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaband/config.hpp"
#include "adaband/csv.hpp"
#include "adaband/experiments.hpp"
#include "adaband/threads.hpp"

namespace {

using Driver =
    std::function<std::vector<adaband::ResultRow>(const adaband::Config&, const adaband::RunOptions&)>;

const std::map<std::string, Driver>& drivers() {
  static const std::map<std::string, Driver> table = {
      {"coverage", adaband::run_coverage},
      {"diameter", adaband::run_diameter},
      {"risk_slope", adaband::run_risk_slope},
      {"prior_concentration", adaband::run_prior_concentration},
      {"testing_risk", adaband::run_testing_risk},
      {"chi_square", adaband::run_chi_square},
      {"concentration_tail", adaband::run_concentration_tail},
      {"calibrate", adaband::run_calibrate},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for adaptive sup-norm confidence bands"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  int threads_flag = 0;

  std::string chosen;
  for (const auto& [name, fn] : drivers()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_path, "CSV output path (default: stdout)");
    sub->add_option("--threads", threads_flag,
                    "worker threads; 0 = all cores (env ADABAND_THREADS is the fallback)");
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    adaband::RunOptions opt;
    opt.seed_given = sub->count("--seed") > 0;
    opt.seed = seed;
    opt.threads = adaband::resolve_threads(threads_flag, sub->count("--threads") > 0);

    adaband::Config cfg = adaband::Config::parse_file(config_path);
    std::vector<adaband::ResultRow> rows = drivers().at(chosen)(cfg, opt);

    if (out_path.empty())
      adaband::write_csv(std::cout, rows);
    else
      adaband::write_csv_file(out_path, rows);
    return 0;
  } catch (const adaband::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const adaband::GuardError& e) {
    std::cerr << "guard violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
