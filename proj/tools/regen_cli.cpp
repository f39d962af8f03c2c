#include <iostream>

#include "regen/cli.hpp"

int main(int argc, char** argv) {
  return regen::cli::run_cli(argc, argv, std::cout, std::cerr);
}
