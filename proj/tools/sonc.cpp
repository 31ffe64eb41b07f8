#include <iostream>

#include "sonc/cli.hpp"

int main(int argc, char** argv) { return sonc::cli::run(argc, argv, std::cout, std::cerr); }
