#include <iostream>

#include "clab/cli.hpp"

int main(int argc, char** argv) { return clab::cli::run(argc, argv, std::cout, std::cerr); }
