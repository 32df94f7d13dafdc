#include <iostream>

#include "runner.hpp"

int main(int argc, char** argv) { return polarpath::cli::main_entry(argc, argv, std::cout, std::cerr); }
