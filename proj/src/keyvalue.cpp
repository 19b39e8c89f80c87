#include "freebnd/keyvalue.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "freebnd/error.hpp"

namespace freebnd {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin) {
    std::vector<KeyValue> out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(ErrorKind::invalid_input, fmt::format("{}:{}: unterminated section header", origin, lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::invalid_input, fmt::format("{}:{}: expected key = value", origin, lineno));
        KeyValue kv{lineno, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
        if (kv.key.empty()) fail(ErrorKind::invalid_input, fmt::format("{}:{}: empty key", origin, lineno));
        out.push_back(std::move(kv));
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::invalid_input, fmt::format("cannot open {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double parse_double(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno != 0 || !std::isfinite(v))
        fail(ErrorKind::invalid_input, fmt::format("{}: '{}' is not a finite number", what, s));
    return v;
}

long parse_int(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno != 0)
        fail(ErrorKind::invalid_input, fmt::format("{}: '{}' is not an integer", what, s));
    return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
    if (out.empty()) fail(ErrorKind::invalid_input, fmt::format("{}: empty list", what));
    return out;
}

}  // namespace freebnd
