#pragma once

#include "hamlift/common.hpp"

#include <charconv>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace hamlift::io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("not a number: '" + std::string(s) + "'");
    return v;
}

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

std::string base64_encode(const double* data, std::size_t count);
std::vector<double> base64_decode_doubles(const std::string& text);

}  // namespace hamlift::io
