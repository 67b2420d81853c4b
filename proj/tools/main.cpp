#include <iostream>
#include <string>
#include <vector>

#include "gaitfuse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gaitfuse::run(args, std::cout, std::cerr);
}
