#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "biaslab/error.hpp"

namespace biaslab {

using TimePoint = std::chrono::sys_time<std::chrono::milliseconds>;

inline TimePoint now_utc() {
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t count, int &out) {
    if (pos + count > s.size()) {
        return false;
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (s[i] < '0' || s[i] > '9') {
            return false;
        }
        value = value * 10 + (s[i] - '0');
    }
    out = value;
    return true;
}

}  // namespace detail

/// Parses `YYYY-MM-DD`; returns nullopt for malformed or impossible dates.
inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::parse_digits(s, 0, 4, y) ||
        !detail::parse_digits(s, 5, 2, m) || !detail::parse_digits(s, 8, 2, d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return ymd;
}

inline std::string format_date(const std::chrono::year_month_day &ymd) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// RFC 3339 in UTC. Milliseconds are printed only when non-zero so that
/// second-resolution inputs survive a parse/format round trip unchanged.
inline std::string format_rfc3339(TimePoint t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{t - day};
    char buf[40];
    const auto ms = hms.subseconds().count();
    if (ms != 0) {
        std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d.%03dZ", format_date(ymd).c_str(),
                      static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                      static_cast<int>(hms.seconds().count()), static_cast<int>(ms));
    } else {
        std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(ymd).c_str(),
                      static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                      static_cast<int>(hms.seconds().count()));
    }
    return buf;
}

/// Accepts `YYYY-MM-DDTHH:MM:SS[.fff]Z` (also `+00:00` as the zone).
inline TimePoint parse_rfc3339(std::string_view s) {
    const auto bad = [&] { fail(ErrorKind::invalid, "malformed RFC 3339 timestamp '" + std::string(s) + "'"); };
    if (s.size() < 20) {
        bad();
    }
    const auto date = parse_date(s.substr(0, 10));
    int hh = 0, mm = 0, ss = 0;
    if (!date || (s[10] != 'T' && s[10] != 't') || s[13] != ':' || s[16] != ':' ||
        !detail::parse_digits(s, 11, 2, hh) || !detail::parse_digits(s, 14, 2, mm) ||
        !detail::parse_digits(s, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60) {
        bad();
    }
    std::size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int scale = 100;
        std::size_t digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) {
                millis += (s[pos] - '0') * scale;
                scale /= 10;
            }
            ++digits;
            ++pos;
        }
        if (digits == 0) {
            bad();
        }
    }
    const std::string_view zone = s.substr(pos);
    if (zone != "Z" && zone != "z" && zone != "+00:00") {
        bad();
    }
    return TimePoint{std::chrono::sys_days{*date}} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
           std::chrono::seconds{ss} + std::chrono::milliseconds{millis};
}

}  // namespace biaslab
