#include <iostream>

#include "codetool/cli.hpp"

int main(int argc, char** argv) { return codetool::cli_main(argc, argv, std::cout, std::cerr); }
