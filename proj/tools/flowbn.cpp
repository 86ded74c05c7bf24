#include <iostream>
#include <string>
#include <vector>

#include "flowbn/cli/cli.hpp"

int main(int argc, char** argv) {
  return flowbn::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
