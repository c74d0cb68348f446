#include <iostream>
#include <string>
#include <vector>

#include "ganland/cli.hpp"

int main(int argc, char** argv) {
  return ganland::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
