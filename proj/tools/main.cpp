#include "ultraco/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return ultraco::cli::run(argc, argv, std::cout, std::cerr);
}
