#include "dcan/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return dcan::cli::run(argc, argv, {std::cout, std::cerr});
}
