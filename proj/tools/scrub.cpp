#include <iostream>

#include "scrub/cli.hpp"

int main(int argc, char** argv) { return scrub::cli::run(argc, argv, std::cout, std::cerr); }
