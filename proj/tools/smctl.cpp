#include <iostream>

#include "sensorimotor/cli.hpp"

int main(int argc, char** argv) {
  return sensorimotor::cli_main(argc, argv, std::cout, std::cerr);
}
