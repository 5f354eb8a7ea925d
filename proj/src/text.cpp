#include "planchat/text.hpp"

#include <cctype>
#include <cmath>

#include <fmt/format.h>

namespace planchat::text {

std::string format_number(double v) {
    if (!std::isfinite(v)) return fmt::format("{}", v);
    auto s = fmt::format("{:.2f}", v);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string normalize_phrase(std::string_view s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (c == '_' || c == '-' || std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
    auto h = " " + fmt::format("{}", fmt::join(words(haystack), " ")) + " ";
    auto n = fmt::format("{}", fmt::join(words(needle), " "));
    if (n.empty()) return false;
    return h.find(" " + n + " ") != std::string::npos;
}

}  // namespace planchat::text
