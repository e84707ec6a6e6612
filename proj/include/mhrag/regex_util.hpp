#pragma once

#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace mhrag::regex_util {

struct Match {
    std::size_t start;
    std::size_t length;
};

/// Compiles a case-insensitive pattern from the portable subset (classes,
/// alternation, \b, \s, quantifiers). Backreferences and lookaround are
/// rejected. Throws InputError.
std::regex compile(const std::string& pattern);

std::string escape(std::string_view literal);

bool search(std::string_view text, const std::regex& re);

/// All non-overlapping matches, left to right.
std::vector<Match> find_all(std::string_view text, const std::regex& re);

}  // namespace mhrag::regex_util
