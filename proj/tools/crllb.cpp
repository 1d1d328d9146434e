#include <iostream>

#include "crllb/cli.hpp"

int main(int argc, char** argv) { return crllb::cli::run(argc, argv, std::cout, std::cerr); }
