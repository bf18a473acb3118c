#pragma once

#include <string>

namespace stepdecay {

// Shortest decimal form that parses back to the same double. CSV and JSONL
// writers go through this so outputs are byte-stable across runs.
std::string format_double(double value);

}  // namespace stepdecay
