#pragma once

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "ragfb/errors.hpp"

namespace testutil {

inline std::filesystem::path repo_path(const std::string& rel) {
    return std::filesystem::path(RAGFB_REPO_DIR) / rel;
}

/// Empty scratch directory under the system temp root; wiped on entry so
/// reruns start clean.
inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "ragfb-tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

/// Runs f and reports which library error (if any) it raised.
template <typename F>
std::optional<ragfb::ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const ragfb::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace testutil
