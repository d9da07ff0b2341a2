#include <iostream>

#include "vfocus/cli/commands.hpp"

int main(int argc, char** argv) { return vfocus::cli::run(argc, argv, std::cout, std::cerr); }
