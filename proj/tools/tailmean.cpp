#include <iostream>

#include "tailmean/cli.hpp"

int main(int argc, char** argv) { return tailmean::run_cli(argc, argv, std::cout, std::cerr); }
