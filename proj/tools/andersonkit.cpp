#include <iostream>

#include "andersonkit/cli.hpp"

int main(int argc, char** argv) { return andersonkit::cli_main(argc, argv, std::cout, std::cerr); }
