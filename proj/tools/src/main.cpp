#include <iostream>
#include <string>
#include <vector>

#include "sagechain_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sagechain::cli::run(args, std::cout, std::cerr);
}
