#include <iostream>
#include <string>
#include <vector>

#include "ctpe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctpe::dispatch(args, std::cout, std::cerr);
}
