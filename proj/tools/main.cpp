#include <iostream>

#include "iwocf/cli.hpp"

int main(int argc, char** argv) {
    return iwocf::cli::run(argc, argv, std::cout, std::cerr);
}
