#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "fbsde/cli.hpp"

int main(int argc, char** argv) {
    try {
        return fbsde::cli_main(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 2;
    }
}
