#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "psguard/ast.hpp"
#include "psguard/error.hpp"
#include "psguard/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path golden(const std::string& name) { return fs::path(PSGUARD_SOURCE_DIR) / "tests" / "golden" / name; }
inline fs::path data_file(const std::string& name) { return fs::path(PSGUARD_SOURCE_DIR) / "data" / name; }

inline std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw psguard::Error("missing test file " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary);
    f << bytes;
}

/// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("psguard_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::string random_bytes(psguard::Rng& rng, std::size_t max_len) {
    std::string s(rng.uniform_index(max_len + 1), '\0');
    for (auto& c : s) c = static_cast<char>(rng.uniform_index(256));
    return s;
}

/// Walks the tree and reports the first span or text violation, empty if none.
inline std::string span_violation(const psguard::AstNode& n, std::string_view src) {
    if (n.span.start > n.span.end || n.span.end > src.size()) return "span out of range at " + n.text;
    if (n.text != src.substr(n.span.start, n.span.size())) return "text differs from slice: " + n.text;
    std::size_t prev_end = n.span.start;
    for (const auto& c : n.children) {
        if (!n.span.contains(c.span)) return "child outside parent: " + c.text;
        if (c.span.start < prev_end) return "children overlap: " + c.text;
        prev_end = c.span.end;
        if (auto v = span_violation(c, src); !v.empty()) return v;
    }
    return {};
}

}  // namespace testing
