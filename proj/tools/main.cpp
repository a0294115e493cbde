// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include <iostream>
#include <string>
#include <vector>

#include "nestedtm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return nestedtm::run_cli(args, std::cout, std::cerr);
}
