#include <iostream>

#include "appclass/cli.hpp"

int main(int argc, char** argv) { return appclass::cli::run(argc, argv, std::cout, std::cerr); }
