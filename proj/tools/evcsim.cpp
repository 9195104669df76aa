#include <iostream>

#include "evc/cli.hpp"

int main(int argc, char** argv) { return evc::cli::main(argc, argv, std::cout, std::cerr); }
