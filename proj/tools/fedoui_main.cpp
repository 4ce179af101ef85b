#include <string>
#include <vector>

#include "fedoui/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fedoui::run_cli(args);
}
