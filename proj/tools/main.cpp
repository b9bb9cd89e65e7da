#include <iostream>
#include <string>
#include <vector>

#include "belief_divide/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return belief_divide::dispatch(args, std::cout, std::cerr);
}
