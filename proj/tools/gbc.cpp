#include <iostream>
#include <string>
#include <vector>

#include "gbc/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gbc::run_cli(args, std::cout, std::cerr);
}
