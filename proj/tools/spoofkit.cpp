#include <iostream>
#include <string>
#include <vector>

#include "spoofkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spoofkit::run_cli(args, std::cout, std::cerr);
}
