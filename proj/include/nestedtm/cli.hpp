// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nestedtm {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code: 0 on success, 1 on a runtime error, 2 on a usage
/// error. Diagnostics go to `err`, help text to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/// Relative paths are taken against $NESTEDTM_DATA_DIR when it is set.
std::filesystem::path resolve_data_path(const std::filesystem::path& path);

/// Splits "a,b,,c" into {"a", "b", "c"}, trimming blanks.
std::vector<std::string> split_list(std::string_view text);

}  // namespace nestedtm
