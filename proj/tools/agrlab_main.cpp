#include <string>
#include <vector>

#include "agrlab/cli.hpp"

int main(int argc, char** argv) {
    return agrlab::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
