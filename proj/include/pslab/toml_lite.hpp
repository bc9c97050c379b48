#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pslab::toml {

// Minimal TOML subset: [section] headers, key = value lines, # comments.
// Values: booleans, integers, floats, double-quoted strings, and flat arrays
// of numbers or strings. Enough for scenario files; unsupported syntax is a
// parse error, not a silent skip.
struct Value {
    std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                 std::vector<std::string>>
        data;

    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_number() const { return is_int() || std::holds_alternative<double>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_number_array() const { return std::holds_alternative<std::vector<double>>(data); }

    bool as_bool() const;
    std::int64_t as_int() const;
    double as_double() const;
    const std::string& as_string() const;
    const std::vector<double>& as_number_array() const;
};

using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;

Document parse(const std::string& text);
Document parse_file(const std::string& path);

}  // namespace pslab::toml
