#pragma once

#include <string>
#include <vector>

namespace freebnd {

struct KeyValue {
    int line = 0;
    std::string section;
    std::string key;
    std::string value;
};

// Flat `key = value` text with optional [section] headers and # comments.
// Malformed lines raise invalid_input with the line number.
std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin);
std::string read_text_file(const std::string& path);
double parse_double(const std::string& s, const std::string& what);
long parse_int(const std::string& s, const std::string& what);
std::vector<double> parse_double_list(const std::string& s, const std::string& what);

}  // namespace freebnd
