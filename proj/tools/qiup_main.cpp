#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qiup/commands.hpp"
#include "qiup/run_config.hpp"

namespace {

void add_common(CLI::App* sub, qiup::cmd::Options& opts, std::string& seed_text,
                const std::string& config_help) {
  sub->add_option("--config", opts.config, config_help)->required();
  sub->add_option("--out", opts.out, "output directory");
  sub->add_option("--workers", opts.workers, "worker threads (0 = all hardware threads)");
  sub->add_option("--seed", seed_text, "noise seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum imaging with undetected photons: simulation and reconstruction"};
  app.require_subcommand(1);

  qiup::cmd::Options opts;
  std::string seed_text;
  CLI::App* sim = app.add_subcommand("simulate", "synthesize a phase-stepped fringe stack");
  add_common(sim, opts, seed_text, "scenario config file");
  CLI::App* rec = app.add_subcommand("reconstruct", "fit fringes and recover the object");
  add_common(rec, opts, seed_text, "stack directory (or its manifest.txt)");
  CLI::App* ver =
      app.add_subcommand("verify-magnification", "check measured image scale against the geometry");
  add_common(ver, opts, seed_text, "verification config file");
  CLI::App* orc =
      app.add_subcommand("oracle-check", "cross-validate the imaging engine against the state model");
  add_common(orc, opts, seed_text, "oracle config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage problems map to the config-error exit code; --help stays 0
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!seed_text.empty()) opts.seed = std::stoull(seed_text);
  } catch (const std::exception&) {
    std::cerr << "config error: --seed must be a nonnegative integer\n";
    return 2;
  }

  try {
    if (sim->parsed()) return qiup::cmd::simulate(opts, std::cout);
    if (rec->parsed()) return qiup::cmd::reconstruct(opts, std::cout);
    if (ver->parsed()) return qiup::cmd::verify_magnification(opts, std::cout);
    return qiup::cmd::oracle_check(opts, std::cout);
  } catch (const qiup::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
