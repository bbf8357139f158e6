#include <iostream>

#include "patho/cli.hpp"

int main(int argc, char** argv) { return patho::cli::run(argc, argv, std::cout, std::cerr); }
