#include <iostream>

#include "bdsde/cli.hpp"

int main(int argc, char** argv) { return bdsde::cli::run(argc, argv, std::cout, std::cerr); }
