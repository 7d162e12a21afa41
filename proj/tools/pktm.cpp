#include <string>
#include <vector>

#include "pktm/cli.hpp"

int main(int argc, char** argv) {
  return pktm::cli::run(std::vector<std::string>(argv, argv + argc));
}
