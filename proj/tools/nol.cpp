#include <iostream>

#include "nol/cli.hpp"

int main(int argc, char** argv) { return nol::run_cli(argc, argv, std::cout, std::cerr); }
