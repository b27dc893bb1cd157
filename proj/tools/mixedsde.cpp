#include <iostream>
#include <string>
#include <vector>

#include <mixedsde/cli.hpp>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mixedsde::cli::run_cli(args, std::cout, std::cerr);
}
