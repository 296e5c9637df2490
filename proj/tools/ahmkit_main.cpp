#include <iostream>

#include "ahmkit/cli.hpp"

int main(int argc, char** argv) { return ahmkit::cli::run(argc, argv, std::cout, std::cerr); }
