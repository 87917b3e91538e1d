#include <iostream>

#include "sumeval/cli.hpp"

int main(int argc, char** argv) { return sumeval::cli::run(argc, argv, std::cout, std::cerr); }
