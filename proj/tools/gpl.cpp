#include <iostream>
#include <string>
#include <vector>

#include "gpl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gpl::cli::run(args, std::cerr);
}
