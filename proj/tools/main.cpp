#include <iostream>
#include <string>
#include <vector>

#include "hetcons/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hetcons::cli::run(args, std::cout, std::cerr);
}
