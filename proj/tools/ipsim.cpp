#include <iostream>
#include <string>
#include <vector>

#include "ipsim/harness.hpp"

int main(int argc, char** argv) {
    return ipsim::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
