// Deterministic number formatting helpers: shortest round-trip form for
// data files (parse(format(x)) == x bit-exactly) and fixed precision for
// report tables.

#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace metawise {

inline std::string format_double(double x) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

inline std::string format_fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

// Strict full-field double parse; returns false on any trailing garbage.
inline bool parse_double(std::string_view text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace metawise
