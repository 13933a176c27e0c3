#include <vector>

#include "dero/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dero::cli_main(args);
}
