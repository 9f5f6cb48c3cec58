#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "pinnstab/config.hpp"
#include "pinnstab/errors.hpp"
#include "pinnstab/harness.hpp"
#include "pinnstab/runtime.hpp"
#include "pinnstab/selftest.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

int run_command(const pinnstab::Overrides& flags) {
  const pinnstab::RunConfig config = pinnstab::parse_config(flags);
  const auto summaries = pinnstab::run_experiments(config, std::cerr);
  bool all = true;
  for (const auto& s : summaries) {
    std::cout << (s.passed ? "PASS " : "FAIL ") << s.experiment << "/" << s.pde << "  " << s.metric << "  -> "
              << s.file.string() << "  (" << s.seconds << " s)\n";
    for (const auto& f : s.failures) std::cout << "     " << f << "\n";
    all = all && s.passed;
  }
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  pinnstab::configure_allocator();
  CLI::App app{"Stability experiments for physics-informed networks"};
  app.require_subcommand(1);

  pinnstab::Overrides flags;
  auto* run = app.add_subcommand("run", "Run experiments and write CSVs");
  run->add_option("--pde", flags.pde, "burgers, poisson, wave, a comma list, or all");
  run->add_option("--experiment", flags.experiment,
                  "perturbation, consistency, capacity, energy, regularization, refinement, noniid, a comma list, "
                  "or all");
  run->add_option("--config", flags.config, "key = value config file");
  run->add_option("--out", flags.out, std::string("output root (default $") + pinnstab::kOutEnv + " or ./out)");
  run->add_option("--seed", flags.seed, "experiment seed");
  run->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--overwrite", flags.overwrite, "replace existing CSVs");

  auto* selftest = app.add_subcommand("selftest", "Check autodiff, quadrature, partition of unity and residuals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_command(flags);
    if (*selftest) return pinnstab::report(pinnstab::run_selftest(), std::cout) ? kOk : kFailed;
  } catch (const pinnstab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const pinnstab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
