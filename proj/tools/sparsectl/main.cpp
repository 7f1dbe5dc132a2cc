#include <iostream>
#include <string>
#include <vector>

#include "sparsectl/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sparsectl::cli::run(args, std::cout, std::cerr);
}
