#include <iostream>

#include "shapereg/cli.hpp"

int main(int argc, char** argv) { return shapereg::run_cli(argc, argv, std::cout, std::cerr); }
