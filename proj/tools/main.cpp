#include "engorgio/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return engorgio::cli::run_command(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
