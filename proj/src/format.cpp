#include "geomrec/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

#include "geomrec/errors.hpp"

namespace geomrec {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

double require_double(std::string_view text) {
    auto v = parse_double(text);
    if (!v) {
        throw ParseError("not a number: '" + std::string(text) + "'");
    }
    return *v;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(text);
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string format_optional(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string{};
}

std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (text.empty()) {
        return std::nullopt;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

std::vector<double> parse_grid(std::string_view text) {
    text = trim(text);
    if (text.empty()) {
        return {};
    }
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) {
            throw ParseError("grid must be start:end:step, got '" + std::string(text) + "'");
        }
        const double start = require_double(parts[0]);
        const double end = require_double(parts[1]);
        const double step = require_double(parts[2]);
        if (!(step > 0.0) || end < start) {
            throw ParseError("grid needs step > 0 and end >= start");
        }
        const double span = (end - start) / step;
        const auto count = static_cast<long>(std::floor(span + 1e-9)) + 1;
        std::vector<double> grid;
        grid.reserve(static_cast<std::size_t>(count));
        for (long i = 0; i < count; ++i) {
            const double raw = start + static_cast<double>(i) * step;
            grid.push_back(std::round(raw * 1e12) / 1e12);
        }
        return grid;
    }
    std::vector<double> values;
    for (auto part : split(text, ',')) {
        values.push_back(require_double(part));
    }
    return values;
}

std::vector<int> parse_int_list(std::string_view text) {
    text = trim(text);
    std::vector<int> values;
    if (text.empty()) {
        return values;
    }
    for (auto part : split(text, ',')) {
        int v = 0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
        if (res.ec != std::errc{} || res.ptr != part.data() + part.size()) {
            throw ParseError("not an integer: '" + std::string(part) + "'");
        }
        values.push_back(v);
    }
    return values;
}

}  // namespace geomrec
