#include <iostream>

#include "bbcd/cli.hpp"

int main(int argc, char** argv) {
  return bbcd::cli::run(argc, argv, std::cout, std::cerr);
}
