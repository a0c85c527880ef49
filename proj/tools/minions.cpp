#include "minions/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return minions::run_cli(argc, argv, std::cout, std::cerr); }
