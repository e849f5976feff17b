#include <vector>

#include "pjml/io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pjml::run_cli(args);
}
