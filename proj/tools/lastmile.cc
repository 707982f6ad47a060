#include <iostream>
#include <string>
#include <vector>

#include "lastmile/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lastmile::cli::Run(args, std::cout, std::cerr);
}
