#include <iostream>

#include "mbf/cli.hpp"

int main(int argc, char** argv) {
    return mbf::run_cli(argc, argv, std::cout, std::cerr);
}
