#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <random>
#include <string>

namespace convosim {

// Time-ordered unique identifier: 26-char Crockford base32, 48-bit millisecond
// timestamp followed by 80 random bits. Lexicographic order follows creation
// time at millisecond granularity.
inline std::string new_id() {
    static constexpr char kAlphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
    const std::uint64_t ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::string out(26, '0');
    std::uint64_t t = ms;
    for (int i = 9; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kAlphabet[t & 31];
        t >>= 5;
    }
    std::uint64_t r = rng();
    for (int i = 10; i < 26; ++i) {
        if (i == 18) r = rng();
        out[static_cast<std::size_t>(i)] = kAlphabet[r & 31];
        r >>= 5;
    }
    return out;
}

inline std::string new_simulation_id() { return new_id(); }
inline std::string new_batch_id() { return new_id(); }

// UTC timestamp with millisecond precision, e.g. "2026-08-11T08:15:30.123Z".
inline std::string format_utc_ms(std::chrono::system_clock::time_point tp) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        tp.time_since_epoch());
    const std::time_t secs = static_cast<std::time_t>(ms.count() / 1000);
    std::tm tm{};
#if defined(_WIN32)
    gmtime_s(&tm, &secs);
#else
    gmtime_r(&secs, &tm);
#endif
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec, static_cast<int>(ms.count() % 1000));
    return buf;
}

inline std::string utc_now_ms() {
    return format_utc_ms(std::chrono::system_clock::now());
}

}  // namespace convosim
