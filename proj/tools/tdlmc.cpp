#include <iostream>

#include "tdlmc/cli.hpp"

int main(int argc, char** argv)
{
  return tdlmc::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
