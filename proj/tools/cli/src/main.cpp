#include <iostream>
#include <string>
#include <vector>

#include "nelcorr_cli/app.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return nelcorr::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
