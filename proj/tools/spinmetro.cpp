#include <iostream>

#include "spinmetro/cli.hpp"

int main(int argc, char **argv) { return spinmetro::cli::main(argc, argv, std::cout, std::cerr); }
