#include <iostream>
#include <string>
#include <vector>

#include "daef/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return daef::run_cli(args, std::cout, std::cerr);
}
