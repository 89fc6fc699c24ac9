#pragma once

// Internal helpers for the "key: value" text format used by schedule and
// problem files: '#' starts a comment, values may be scalars or bracketed
// comma/space-separated numeric lists.

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sforge::kv {

inline bool parse_line(const std::string& line, std::string& key, std::string& value) {
    std::string s = line;
    auto hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    s.erase(0, b);
    if (s.empty()) return false;
    auto colon = s.find(':');
    if (colon == std::string::npos)
        throw std::runtime_error("malformed line (expected 'key: value'): " + line);
    key = s.substr(0, colon);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    value = s.substr(colon + 1);
    b = 0;
    while (b < value.size() && std::isspace(static_cast<unsigned char>(value[b]))) ++b;
    value.erase(0, b);
    return true;
}

inline std::vector<double> number_list(const std::string& v, const std::string& key) {
    std::string s = v;
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw std::runtime_error(key + ": expected a bracketed list, got '" + v + "'");
    s = s.substr(1, s.size() - 2);
    for (char& c : s)
        if (c == ',') c = ' ';
    std::vector<double> out;
    std::istringstream in(s);
    double x;
    while (in >> x) out.push_back(x);
    if (!in.eof())
        throw std::runtime_error(key + ": trailing garbage in list '" + v + "'");
    return out;
}

inline std::vector<int> int_list(const std::string& v, const std::string& key) {
    auto nums = number_list(v, key);
    std::vector<int> out;
    out.reserve(nums.size());
    for (double x : nums) out.push_back(static_cast<int>(x));
    return out;
}

} // namespace sforge::kv
