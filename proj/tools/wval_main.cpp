#include <iostream>
#include <string>
#include <vector>

#include "wval/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wval::run_cli(args, std::cout, std::cerr);
}
