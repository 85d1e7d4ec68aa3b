#include "gesture/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return gesture::cli::run(argc, argv, std::cout, std::cerr);
}
