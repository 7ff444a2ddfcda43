// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "hodgegp/logging.hpp"

int main(int argc, char** argv)
{
    hodgegp::init_logging();
    std::vector<std::string> args(argv + 1, argv + argc);
    return hodgegp::cli::run(args, std::cout, std::cerr);
}
