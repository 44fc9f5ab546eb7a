#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "plurikit/cli.hpp"
#include "plurikit/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bergman kernels and equilibrium measures: experiment runner"};
  app.set_version_flag("--version", std::string(plurikit::tool_version));
  app.require_subcommand(1);

  std::string config, out;
  int workers = 0;
  std::string command;
  for (std::string_view name : plurikit::commands) {
    auto* sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " experiment");
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->callback([&command, name] { command = name; });
  }
  auto* validate = app.add_subcommand("validate", "echo the fully defaulted config without computing");
  validate->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  validate->callback([&command] { command = "validate"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (command == "validate") {
    try {
      std::cout << plurikit::echo_config(plurikit::load_config(config)) << "\n";
    } catch (const plurikit::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    return 0;
  }
  return plurikit::run(command, config, out, workers, std::cerr);
}
