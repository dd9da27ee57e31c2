#pragma once

// In-process CLI invocation for tests.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace clitest {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

inline Result run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"weaklabel"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = weaklabel::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

// Fresh, empty directory under base.
inline std::filesystem::path scratch(const std::filesystem::path& base, const std::string& name) {
    const auto dir = base / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace clitest
