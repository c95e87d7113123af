// evoel: validate, run and derive generalized-continuum models.

#include "evoel/cli_io.hpp"
#include "evoel/error.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>

namespace {

void apply_thread_env() {
  if (const char* t = std::getenv("EVOEL_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

int guarded(const std::function<evoel::cli::CommandResult()>& cmd) {
  using namespace evoel::cli;
  try {
    const CommandResult r = cmd();
    std::cout << r.report << '\n';
    return r.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const evoel::SolverError& e) {
    std::cerr << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kSolverError;
  } catch (const evoel::PreconditionError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kValidationFailed;
  } catch (const evoel::SingularError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kValidationFailed;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  CLI::App app{"evoel: evolutionary equations for generalized continua"};
  app.require_subcommand(1);

  std::string cfg_path;
  auto* validate = app.add_subcommand("validate", "classify the model's coefficients and check its parameter inequalities");
  validate->add_option("config", cfg_path, "JSON config")->required();
  auto* run = app.add_subcommand("run", "integrate in time and write energy CSV / report");
  run->add_option("config", cfg_path, "JSON config")->required();
  bool force = false;
  run->add_flag("--force", force, "run even with inadmissible parameters or indefinite M2");
  auto* derive = app.add_subcommand("derive", "conjugate a model along a catalog edge and compare with the direct build");
  derive->add_option("config", cfg_path, "JSON config")->required();
  auto* zoo = app.add_subcommand("zoo", "model catalog");
  zoo->require_subcommand(1);
  zoo->add_subcommand("list", "print models, parameter schemas and edges as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : evoel::cli::kConfigError;
  }

  using namespace evoel::cli;
  if (*zoo) {
    std::cout << cmd_zoo_list() << '\n';
    return kOk;
  }
  return guarded([&]() -> CommandResult {
    RunConfig cfg = load_config(cfg_path);
    if (*validate) return cmd_validate(cfg);
    if (*run) {
      cfg.force = cfg.force || force;
      return cmd_run(cfg);
    }
    return cmd_derive(cfg);
  });
}
