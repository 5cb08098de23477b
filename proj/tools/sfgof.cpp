#include <iostream>

#include "sfgof/cli.hpp"

int main(int argc, char** argv) { return sfgof::run_cli(argc, argv, std::cout, std::cerr); }
