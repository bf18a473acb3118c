#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace stepdecay::cli {

/// Exit codes: 0 success, 1 usage / config / I/O error, 2 certification failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

/// The fully resolved configuration a command line maps to. Every output
/// embeds it, so feeding it back through --config reproduces the run.
nlohmann::ordered_json resolve_config(const std::vector<std::string>& args);

}  // namespace stepdecay::cli
