#include "cavcoord/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cavcoord::cli_main(argc, argv, std::cout, std::cerr); }
