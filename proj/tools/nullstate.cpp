#include <iostream>

#include "nullstate/cli.hpp"

int main(int argc, char** argv) {
    return nullstate::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
