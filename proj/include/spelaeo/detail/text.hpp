#pragma once

// Internal text helpers: locale-free number formatting/parsing and simple
// CSV-ish line handling. Doubles are written in shortest round-trip form so
// serialize -> parse is exact and output is deterministic.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <spelaeo/errors.hpp>

namespace spelaeo::detail {

inline std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_fixed(double v, int precision) {
    char buf[64];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline double parse_double(std::string_view field, std::size_t line,
                           std::string_view what) {
    field = trim(field);
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field.front() == '+') ++first;  // from_chars rejects '+'
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || field.empty()) {
        throw ParseError(line, "invalid number for " + std::string(what) + ": '" +
                                   std::string(field) + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError(line, "non-finite value for " + std::string(what));
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

// Calls fn(line_number, content) for every non-blank, non-comment line.
// Line numbers are 1-based over the raw text; '#' starts a comment line.
template <typename Fn>
void for_each_data_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        const std::string_view raw = text.substr(pos, end - pos);
        const std::string_view line = trim(raw);
        if (!line.empty() && line.front() != '#') {
            fn(line_no, line);
        }
        pos = end + 1;
        if (end == text.size()) break;
    }
}

}  // namespace spelaeo::detail
