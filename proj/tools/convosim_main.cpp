#include "convosim/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
    return convosim::cli::dispatch(
        std::vector<std::string>(argv, argv + argc));
}
