#include "flowprompt/rounding.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace flowprompt {

namespace {

constexpr std::array<double, 13> kPow10 = {
    1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12,
};

// Half-to-even on the scaled value; long double gives headroom on the
// fractional comparison. Returns the scaled integral result.
long double scaled_half_even(double value, int decimals) {
    if (decimals < 0) decimals = 0;
    if (decimals > 12) decimals = 12;
    const long double scaled = static_cast<long double>(value) * kPow10[static_cast<size_t>(decimals)];
    const long double fl = std::floor(scaled);
    const long double frac = scaled - fl;
    if (frac > 0.5L) return fl + 1.0L;
    if (frac < 0.5L) return fl;
    // exact tie: round to even
    const long double half = fl / 2.0L;
    return (half == std::floor(half)) ? fl : fl + 1.0L;
}

} // namespace

double round_half_even(double value, int decimals) {
    if (!std::isfinite(value)) return value;
    if (decimals < 0) decimals = 0;
    if (decimals > 12) decimals = 12;
    return static_cast<double>(scaled_half_even(value, decimals) / kPow10[static_cast<size_t>(decimals)]);
}

std::string format_fixed(double value, int decimals) {
    if (decimals < 0) decimals = 0;
    if (decimals > 12) decimals = 12;
    if (!std::isfinite(value)) return "nan";

    long double scaled = scaled_half_even(value, decimals);
    bool negative = scaled < 0.0L;
    if (negative) scaled = -scaled;

    // Beyond exact integer range of int64 fall back to printf; network
    // telemetry never gets there in practice.
    if (scaled >= 9.0e18L) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
        return buf;
    }

    const std::uint64_t units = static_cast<std::uint64_t>(scaled);
    std::string digits = std::to_string(units);
    std::string out;
    if (negative && units != 0) out.push_back('-');
    if (decimals == 0) {
        out += digits;
        return out;
    }
    if (digits.size() <= static_cast<size_t>(decimals)) {
        out += "0.";
        out.append(static_cast<size_t>(decimals) - digits.size(), '0');
        out += digits;
    } else {
        out.append(digits, 0, digits.size() - static_cast<size_t>(decimals));
        out.push_back('.');
        out.append(digits, digits.size() - static_cast<size_t>(decimals), static_cast<size_t>(decimals));
    }
    return out;
}

std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace flowprompt
