#include "hjlab/numfmt.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "hjlab/errors.hpp"

namespace hjlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

double parse_double(std::string_view token) {
    token = trim(token);
    if (token == "nan") return std::nan("");
    if (token == "inf") return INFINITY;
    if (token == "-inf") return -INFINITY;
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw PreconditionError("not a number: '" + std::string(token) + "'");
    return v;
}

long long parse_int(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    long long v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw PreconditionError("not an integer: '" + std::string(token) + "'");
    return v;
}

}  // namespace hjlab
