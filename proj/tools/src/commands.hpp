#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace gswm::cli {

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

/// Adds every subcommand to `app`. Options are bound to state captured by the
/// returned runners, so config values can be applied between parsing and
/// running.
std::vector<Command> register_commands(CLI::App& app, const Globals& globals);

}  // namespace gswm::cli
