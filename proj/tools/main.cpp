#include <iostream>
#include <string>
#include <vector>

#include "fit4control/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fit4control::run_command(args, std::cout, std::cerr);
}
