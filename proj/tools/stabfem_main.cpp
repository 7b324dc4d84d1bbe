#include <iostream>

#include "stabfem/cli.hpp"

int main(int argc, char** argv) { return stabfem::run_cli(argc, argv, std::cout, std::cerr); }
