// SPDX-License-Identifier: Apache-2.0

#include "conam/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return conam::cli::run(argc, argv, std::cout, std::cerr); }
