#include <iostream>

#include "cdp/cli.hpp"

int main(int argc, char** argv) { return cdp::cli::main_entry(argc, argv, std::cout, std::cerr); }
