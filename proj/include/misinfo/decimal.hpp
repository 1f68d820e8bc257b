#pragma once

#include <cctype>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace misinfo {

inline constexpr int kSignificantDigits = 12;

// Round to `digits` significant decimal digits, ties to even.
inline double round_sig(double v, int digits = kSignificantDigits) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double mag = std::floor(std::log10(std::fabs(v)));
    const double scale = std::pow(10.0, digits - 1 - mag);
    return std::nearbyint(v * scale) / scale;
}

inline double round_places(double v, int places) {
    const double scale = std::pow(10.0, places);
    return std::nearbyint(v * scale) / scale;
}

// Fixed-notation rendering at up to kSignificantDigits significant digits,
// trailing zeros stripped. Never emits scientific notation.
inline std::string format_decimal(double v) {
    if (!std::isfinite(v)) return std::to_string(v);
    if (v == 0.0) return "0";
    const double r = round_sig(v);
    const double mag = std::floor(std::log10(std::fabs(r)));
    int places = kSignificantDigits - 1 - static_cast<int>(mag);
    if (places < 0) places = 0;
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%.*f", places, r);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

// Fixed number of decimal places, zeros kept ("3.50" stays two places wide).
inline std::string format_places(double v, int places) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%.*f", places, round_places(v, places));
    std::string s(buf);
    if (s == "-0" || s == "-0.00" || (s.size() > 1 && s[0] == '-' &&
                                      s.find_first_not_of("0.", 1) == std::string::npos)) {
        s.erase(s.begin());
    }
    return s;
}

// Number of digits after the decimal point in a numeral string; 0 for integers.
inline int decimal_places_of(const std::string& numeral) {
    const auto dot = numeral.find('.');
    if (dot == std::string::npos) return 0;
    return static_cast<int>(numeral.size() - dot - 1);
}

inline bool nearly_equal(double a, double b, double eps = 1e-9) {
    return std::fabs(a - b) <= eps * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace misinfo
