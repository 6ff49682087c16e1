#include <iostream>
#include <string>
#include <vector>

#include "inpaint_gan/cli.hpp"

int main(int argc, char** argv) {
  return inpaint_gan::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
