#include "pslab/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pslab::toml {

bool Value::as_bool() const {
    if (!is_bool()) throw std::runtime_error("toml: expected a boolean");
    return std::get<bool>(data);
}

std::int64_t Value::as_int() const {
    if (is_int()) return std::get<std::int64_t>(data);
    throw std::runtime_error("toml: expected an integer");
}

double Value::as_double() const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(data));
    if (std::holds_alternative<double>(data)) return std::get<double>(data);
    throw std::runtime_error("toml: expected a number");
}

const std::string& Value::as_string() const {
    if (!is_string()) throw std::runtime_error("toml: expected a string");
    return std::get<std::string>(data);
}

const std::vector<double>& Value::as_number_array() const {
    if (!is_number_array()) throw std::runtime_error("toml: expected an array of numbers");
    return std::get<std::vector<double>>(data);
}

namespace {

std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Removes a trailing comment, honoring double-quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

Value parse_scalar(const std::string& raw, int line_no) {
    const std::string token = strip(raw);
    if (token.empty()) throw std::runtime_error("toml: empty value at line " + std::to_string(line_no));
    if (token == "true") return Value{true};
    if (token == "false") return Value{false};
    if (token.front() == '"') {
        if (token.size() < 2 || token.back() != '"')
            throw std::runtime_error("toml: unterminated string at line " + std::to_string(line_no));
        return Value{token.substr(1, token.size() - 2)};
    }
    // Integer first, then float.
    {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec == std::errc() && ptr == token.data() + token.size()) return Value{v};
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used == token.size()) return Value{v};
    } catch (...) {
    }
    throw std::runtime_error("toml: cannot parse value '" + token + "' at line " +
                             std::to_string(line_no));
}

Value parse_value(const std::string& raw, int line_no) {
    const std::string token = strip(raw);
    if (!token.empty() && token.front() == '[') {
        if (token.back() != ']')
            throw std::runtime_error("toml: unterminated array at line " + std::to_string(line_no));
        const std::string inner = token.substr(1, token.size() - 2);
        std::vector<std::string> items;
        std::string current;
        bool in_string = false;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                items.push_back(current);
                current.clear();
            } else {
                current += c;
            }
        }
        if (!strip(current).empty()) items.push_back(current);

        std::vector<double> numbers;
        std::vector<std::string> strings;
        bool numeric = true;
        for (const auto& item : items) {
            const Value v = parse_scalar(item, line_no);
            if (v.is_number()) {
                numbers.push_back(v.as_double());
            } else if (v.is_string()) {
                numeric = false;
                strings.push_back(v.as_string());
            } else {
                throw std::runtime_error("toml: unsupported array element at line " +
                                         std::to_string(line_no));
            }
        }
        if (!numeric && !numbers.empty())
            throw std::runtime_error("toml: mixed array at line " + std::to_string(line_no));
        if (numeric) return Value{numbers};
        return Value{strings};
    }
    return parse_scalar(token, line_no);
}

}  // namespace

Document parse(const std::string& text) {
    Document doc;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = strip(strip_comment(line));
        if (content.empty()) continue;
        if (content.front() == '[') {
            if (content.back() != ']')
                throw std::runtime_error("toml: bad section header at line " +
                                         std::to_string(line_no));
            section = strip(content.substr(1, content.size() - 2));
            if (section.empty())
                throw std::runtime_error("toml: empty section name at line " +
                                         std::to_string(line_no));
            doc[section];
            continue;
        }
        const std::size_t eq = content.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value at line " +
                                     std::to_string(line_no));
        const std::string key = strip(content.substr(0, eq));
        if (key.empty())
            throw std::runtime_error("toml: empty key at line " + std::to_string(line_no));
        doc[section][key] = parse_value(content.substr(eq + 1), line_no);
    }
    return doc;
}

Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("toml: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

}  // namespace pslab::toml
