#include <iostream>
#include <string>
#include <vector>

#include "plateinv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::cerr << plateinv::usage_text();
    return 2;
  }
  for (const std::string& a : args) {
    if (a == "-h" || a == "--help") {
      std::cout << plateinv::usage_text();
      return 0;
    }
  }
  plateinv::RunConfig config;
  try {
    config = plateinv::parse_config(args);
  } catch (const plateinv::ConfigError& e) {
    std::cerr << "plateinv: " << e.what() << "\n"
              << "run 'plateinv --help' for usage\n";
    return 2;
  }
  return plateinv::run(config);
}
