#include <iostream>

#include "darkspec/cli.hpp"

int main(int argc, char** argv) {
  return darkspec::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
