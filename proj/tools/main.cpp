#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return indscale::cli::dispatch(argc, argv, std::cout, std::cerr); }
