#include <iostream>

#include "spinctl/cli.hpp"

int main(int argc, char** argv) { return spinctl::run_cli(argc, argv, std::cout, std::cerr); }
