#include <string>
#include <vector>

#include "sonobox/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sonobox::cli::run_cli(args);
}
