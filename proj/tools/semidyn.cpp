#include "semidyn/cli.hpp"

int main(int argc, char** argv) {
  return semidyn::cli::run(argc, argv);
}
