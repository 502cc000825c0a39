#include <iostream>

#include "holonomy/cli.hpp"

int main(int argc, char** argv) {
  return holonomy::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
