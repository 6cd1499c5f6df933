#include <cstdio>
#include <exception>

#include "commands.hpp"
#include "gswm/config.hpp"
#include "gswm/error.hpp"

namespace {

// Config keys name long options of the active subcommand (or the globals);
// a value is used only when the option was not given on the command line.
void apply_config(const gswm::Config& cfg, CLI::App& app, CLI::App& sub) {
  for (const auto& [key, value] : cfg.values()) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config" || key == "help") {
      gswm::fail(gswm::ErrorCode::kParse, "unknown config key '" + key + "' for " + sub.get_name());
    }
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-aware watermarking of Gaussian-splat scenes"};
  app.require_subcommand(1);
  app.fallthrough();
  gswm::cli::Globals globals;
  app.add_option("--seed", globals.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--config", globals.config, "key = value file supplying option defaults");
  app.add_option("--out", globals.out, "Output file or directory");
  const auto commands = gswm::cli::register_commands(app, globals);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  }

  try {
    for (const auto& c : commands) {
      if (!c.app->parsed()) continue;
      if (!globals.config.empty()) apply_config(gswm::Config::load(globals.config), app, *c.app);
      c.run();
      return 0;
    }
  } catch (const gswm::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(gswm::to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 1;
}
