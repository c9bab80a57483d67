// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return arguagent::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cin, std::cout, std::cerr);
}
