// SPDX-License-Identifier: Apache-2.0

#include "cimt/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv)
{
    return cimt::cli::run(std::vector<std::string>(argv, argv + argc));
}
