#include <iostream>

#include "nexcv/cli.hpp"

int main(int argc, char** argv) {
  return nexcv::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
