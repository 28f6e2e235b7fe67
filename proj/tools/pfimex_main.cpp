#include <iostream>

#include "pfimex/cli.hpp"

int main(int argc, char** argv) {
  return pfimex::cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
