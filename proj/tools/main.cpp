#include <string>
#include <vector>

#include "capcurv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return capcurv::cli::run_cli(args);
}
