#include "mhrag/regex_util.hpp"

#include "mhrag/errors.hpp"

namespace mhrag::regex_util {

std::regex compile(const std::string& pattern) {
    for (std::size_t i = 0; i + 1 < pattern.size(); ++i) {
        if (pattern[i] == '\\') {
            char n = pattern[i + 1];
            if (n >= '1' && n <= '9') throw InputError("backreferences are not allowed: " + pattern);
            ++i;
            continue;
        }
        if (pattern[i] == '(' && pattern[i + 1] == '?' && i + 2 < pattern.size() && pattern[i + 2] != ':')
            throw InputError("lookaround groups are not allowed: " + pattern);
    }
    try {
        return std::regex(pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& e) {
        throw InputError("invalid pattern '" + pattern + "': " + e.what());
    }
}

std::string escape(std::string_view literal) {
    static constexpr std::string_view kSpecial = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : literal) {
        if (kSpecial.find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

bool search(std::string_view text, const std::regex& re) {
    return std::regex_search(text.begin(), text.end(), re);
}

std::vector<Match> find_all(std::string_view text, const std::regex& re) {
    std::vector<Match> out;
    using It = std::regex_iterator<std::string_view::const_iterator>;
    for (It it(text.begin(), text.end(), re), end; it != end; ++it) {
        const auto& m = *it;
        out.push_back({static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0))});
    }
    return out;
}

}  // namespace mhrag::regex_util
