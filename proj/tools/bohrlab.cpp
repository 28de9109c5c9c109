#include <iostream>
#include <string>
#include <vector>

#include "bohrlab/acceptance.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bohrlab::acceptance::dispatch(std::move(args), std::cout, std::cerr);
}
