#include <iostream>
#include <string>
#include <vector>

#include "fosense/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fosense::cli::run(args, std::cout, std::cerr);
}
