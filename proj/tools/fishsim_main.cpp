#include <string>
#include <vector>

#include "fishsim/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fishsim::run_cli(args);
}
