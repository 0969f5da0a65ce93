#include <iostream>
#include <string>
#include <vector>

#include "tvacal/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return tvacal::cli::run(args, std::cout, std::cerr);
}
