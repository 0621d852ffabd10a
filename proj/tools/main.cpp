#include <iostream>

#include "hnsynth/cli.hpp"

int main(int argc, char** argv) { return hnsynth::cli_main(argc, argv, std::cout, std::cerr); }
