#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return motionorder::run_cli(argc, argv, std::cout, std::cerr); }
