#include <unistd.h>

#include <iostream>

#include "relang/shell.hpp"

int main(int argc, char** argv) {
  return relang::run(argc, argv, std::cin, std::cout, std::cerr, isatty(0) != 0, isatty(1) != 0);
}
