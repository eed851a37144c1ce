#pragma once

// Line-oriented logging with level prefixes on stderr. Verbosity comes from
// the SPELAEO_LOG environment variable (error|warn|info|debug) and can be
// lowered by the CLI's --quiet flag.

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace spelaeo::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level level_from_env() {
    const char* env = std::getenv("SPELAEO_LOG");
    if (!env) return Level::info;
    const std::string_view v(env);
    if (v == "error") return Level::error;
    if (v == "warn") return Level::warn;
    if (v == "debug") return Level::debug;
    return Level::info;
}

inline Level& threshold() {
    static Level level = level_from_env();
    return level;
}

inline void write(Level level, std::string_view msg) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    const char* prefix = "[info] ";
    switch (level) {
        case Level::error: prefix = "[error] "; break;
        case Level::warn: prefix = "[warn] "; break;
        case Level::info: prefix = "[info] "; break;
        case Level::debug: prefix = "[debug] "; break;
    }
    std::cerr << prefix << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::error, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void debug(std::string_view msg) { write(Level::debug, msg); }

}  // namespace spelaeo::log
