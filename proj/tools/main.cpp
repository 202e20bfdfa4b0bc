// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mle_uvad::cli::run(args, std::cout, std::cerr);
}
