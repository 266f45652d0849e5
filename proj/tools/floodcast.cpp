#include <iostream>

#include "floodcast/cli/commands.hpp"

int main(int argc, char** argv) { return floodcast::run_cli(argc, argv, std::cout, std::cerr); }
