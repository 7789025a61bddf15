#include <iostream>

#include "occshape/cli.hpp"

int main(int argc, char** argv) {
  return occshape::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
