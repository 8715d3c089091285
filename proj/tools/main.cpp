#include <iostream>

#include "sls/cli.hpp"

int main(int argc, char** argv) { return sls::run_cli(argc, argv, std::cout, std::cerr); }
