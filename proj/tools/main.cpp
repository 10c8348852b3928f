#include <iostream>

#include "mixauto_cli.hpp"

int main(int argc, char** argv) {
  return mixauto::cli::run(argc, argv, std::cout, std::cerr);
}
