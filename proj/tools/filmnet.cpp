#include <iostream>

#include "filmnet/cli.hpp"

int main(int argc, char** argv) { return filmnet::cli::run(argc, argv, std::cout, std::cerr); }
