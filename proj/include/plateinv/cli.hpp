#pragma once

#include "plateinv/study.hpp"

namespace plateinv {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;  // forward | invert | study
  std::string case_name = "square-poly";
  std::optional<Domain> domain;  // defaults to the case's domain
  ElementKind element = ElementKind::BFS;
  int reg_k = 0;
  std::vector<double> alphas;
  int levels = 0;  // 0 = family default (6 for BFS, 7 for Morley)
  std::vector<RectRegion> regions;
  double delta = 0;
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  int quad_degree = 10;
};

// Parses argv-style arguments (without the program name). A --config file
// supplies defaults for everything not given on the command line; the file is
// either flat key=value text (repeated keys extend list values) or the JSON
// manifest of a previous run. Throws ConfigError naming the offending field.
RunConfig parse_config(const std::vector<std::string>& args);

std::string usage_text();

// Executes the configured command, writing table.csv, table.txt and
// manifest.json into the output directory. Returns the process exit code:
// 0 on success, 1 when a pipeline stage fails (the stage is named on stderr).
int run(const RunConfig& config);

}  // namespace plateinv
