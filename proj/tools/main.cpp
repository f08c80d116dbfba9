#include "microdim/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return microdim::cli::run(argc, argv, std::cout, std::cerr); }
