#pragma once

// Minimal sectioned key-value configuration files:
//
//   [section]
//   key = value        # comment
//
// Values are raw strings; typed getters parse on demand. Unknown keys are
// rejected by the consumer via check_keys, so typos fail loudly.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <spelaeo/detail/text.hpp>
#include <spelaeo/errors.hpp>

namespace spelaeo::config {

class Config {
public:
    static Config parse(std::string_view text) {
        Config cfg;
        std::string section;
        spelaeo::detail::for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
            // Strip trailing comment.
            const std::size_t hash = line.find('#');
            if (hash != std::string_view::npos) {
                line = spelaeo::detail::trim(line.substr(0, hash));
                if (line.empty()) return;
            }
            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3) {
                    throw ParseError(line_no, "malformed section header");
                }
                section = std::string(spelaeo::detail::trim(line.substr(1, line.size() - 2)));
                if (section.empty()) {
                    throw ParseError(line_no, "empty section name");
                }
                cfg.sections_.try_emplace(section);
                return;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(line_no, "expected 'key = value'");
            }
            if (section.empty()) {
                throw ParseError(line_no, "key outside of any [section]");
            }
            const std::string key(spelaeo::detail::trim(line.substr(0, eq)));
            std::string_view value = spelaeo::detail::trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ParseError(line_no, "empty key");
            }
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
                value = value.substr(1, value.size() - 2);
            }
            auto [it, inserted] = cfg.sections_[section].emplace(key, Entry{std::string(value), line_no});
            if (!inserted) {
                throw ParseError(line_no, "duplicate key '" + key + "' in [" + section + "]");
            }
        });
        return cfg;
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw ValidationError("cannot open config file: " + path.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end() || !s->second.count(key)) {
            throw ValidationError("config: missing [" + section + "] " + key);
        }
        return s->second.at(key).value;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        return has(section, key) ? get_string(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return parse_number(section, key, get_string(section, key));
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    long long get_int(const std::string& section, const std::string& key, long long fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get_string(section, key);
        long long out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
            throw ValidationError("config: [" + section + "] " + key + " is not an integer: '" +
                                  v + "'");
        }
        return out;
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key) const {
        const std::string raw = get_string(section, key);
        std::vector<double> out;
        for (std::string_view field : spelaeo::detail::split(raw, ',')) {
            out.push_back(parse_number(section, key, std::string(field)));
        }
        return out;
    }

    // Every key in `section` must appear in `allowed`.
    void check_keys(const std::string& section,
                    std::initializer_list<std::string_view> allowed) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return;
        for (const auto& [key, entry] : s->second) {
            bool ok = false;
            for (std::string_view a : allowed) {
                if (key == a) {
                    ok = true;
                    break;
                }
            }
            if (!ok) {
                throw ValidationError("config: unknown key '" + key + "' in [" + section +
                                      "] (line " + std::to_string(entry.line) + ")");
            }
        }
    }

    void check_sections(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [name, entries] : sections_) {
            bool ok = false;
            for (std::string_view a : allowed) {
                if (name == a) {
                    ok = true;
                    break;
                }
            }
            if (!ok) {
                throw ValidationError("config: unknown section [" + name + "]");
            }
        }
    }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    double parse_number(const std::string& section, const std::string& key,
                        const std::string& v) const {
        try {
            return spelaeo::detail::parse_double(v, 0, key);
        } catch (const ParseError&) {
            throw ValidationError("config: [" + section + "] " + key + " is not a number: '" + v +
                                  "'");
        }
    }

    std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace spelaeo::config
