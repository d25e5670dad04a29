#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include "fgf/random.hpp"

namespace fgf::support {

inline std::filesystem::path source(const std::string& rel) { return std::filesystem::path(FGF_SOURCE_DIR) / rel; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("fgf_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Runs the command line tool; returns its exit status.
inline int run_cli(const std::string& args, const std::string& log = "/dev/null")
{
    const auto cmd = std::string(FGF_CLI) + " " + args + " >" + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace fgf::support
