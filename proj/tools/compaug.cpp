#include <iostream>

#include "compaug/cli.hpp"

int main(int argc, char** argv) { return compaug::cli::run(argc, argv, std::cout, std::cerr); }
