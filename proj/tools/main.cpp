#include <iostream>

#include "moecs/bench.hpp"

int main(int argc, char** argv) { return moecs::bench::cli(argc, argv, std::cout, std::cerr); }
