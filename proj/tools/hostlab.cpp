#include <iostream>
#include <string>
#include <vector>

#include "hostlab/cli.hpp"

int main(int argc, char** argv) {
  return hostlab::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
