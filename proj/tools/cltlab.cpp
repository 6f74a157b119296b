#include <iostream>
#include <string>
#include <vector>

#include "cltlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cltlab::run(args, std::cout, std::cerr);
}
