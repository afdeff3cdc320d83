#include <iostream>
#include <string>
#include <vector>

#include "phirl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return phirl::run_cli(args, std::cout, std::cerr);
}
