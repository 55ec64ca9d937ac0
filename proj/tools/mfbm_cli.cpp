#include <iostream>

#include "mfbm/cli.hpp"

int main(int argc, char** argv) { return mfbm::cli::run(argc, argv, std::cout, std::cerr); }
