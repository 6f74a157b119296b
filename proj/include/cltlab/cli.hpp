#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cltlab/io.hpp"

namespace cltlab {

// Flat run configuration. Exactly one model source: a gallery preset (name
// plus its parameters at top level), an inline model, or a model file.
struct RunConfig {
  std::string command;
  std::optional<Json> gallery;  // {"gallery": name, ...parameters}
  std::optional<Json> model;
  std::optional<std::string> model_file;
  std::size_t n = 1024;
  std::size_t max_n = 64;
  std::size_t m = 4;
  std::size_t u = 8;
  std::size_t reps = 10'000;
  std::uint64_t seed = 12345;
  Centering centering = Centering::endpoint;
  double tolerance = 1e-10;
  std::size_t workers = 1;
  std::string format = "json";
  std::string experiment = "clt";
  std::optional<std::string> output;
  std::optional<std::string> statistics_output;
};

inline const std::vector<std::string> kCommands = {
    "validate", "stationary", "ergodicity", "moments", "bridge",
    "conditions", "blocks", "simulate", "report"};

// Strict: unknown keys, wrong types and missing or duplicate model sources
// raise validation errors naming the key.
RunConfig parse_run_config(const Json& json);

// Every field with defaults filled in, minus output paths; feeding it back
// through parse_run_config reproduces the run.
Json resolved_config(const RunConfig& config);

// Builds a preset from {"gallery": name, ...} or a model from {"model": {...}}.
Model gallery_model(const Json& spec);
Model build_model(const RunConfig& config);

// Runs the command and returns the emitted text. Warnings go to err.
std::string execute(const RunConfig& config, std::ostream& err);

// Parses argv-style arguments (without the program name), merges the config
// file, flags and CLTLAB_SEED, runs, and returns the exit status: 0 success,
// 2 validation, 3 budget, 4 invariant.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cltlab
