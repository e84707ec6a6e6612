#pragma once

#include "mhrag/errors.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace mhrag::lang {

enum class LanguageTag { En, Hi, As, Und };

std::string_view to_string(LanguageTag t);
std::optional<LanguageTag> parse_language_tag(std::string_view s);

/// Per-script letter counts used by the detector.
struct ScriptHistogram {
    std::size_t latin = 0;
    std::size_t devanagari = 0;
    std::size_t bengali = 0;
    std::size_t other = 0;

    std::size_t letters() const { return latin + devanagari + bengali + other; }
};

ScriptHistogram script_histogram(std::string_view text);

/// Script-majority detector. Devanagari -> hi, Bengali/Assamese -> as,
/// Latin -> en; ties go to en. Returns und when the text has no letters or
/// the three known scripts hold less than `min_share` of them.
/// Throws InputError on empty text.
LanguageTag detect_language(std::string_view text, double min_share = 0.5);

/// Raised when translation fails. Carries the untouched original query so
/// the caller can continue with original-language processing only.
class TranslationError : public ProviderError {
public:
    TranslationError(std::string original, const std::string& why)
        : ProviderError("translation failed: " + why), original_(std::move(original)) {}
    const std::string& original_query() const noexcept { return original_; }

private:
    std::string original_;
};

class TranslatorProvider {
public:
    virtual ~TranslatorProvider() = default;
    /// Implementations must return English input unchanged.
    virtual std::string translate(std::string_view text, std::string_view target = "en") const = 0;
    virtual bool deterministic() const { return true; }
};

/// Test double backed by a {source: english} JSON object. Unknown inputs fail.
class LookupTranslator final : public TranslatorProvider {
public:
    LookupTranslator() = default;
    explicit LookupTranslator(std::map<std::string, std::string> table) : table_(std::move(table)) {}
    static LookupTranslator from_file(const std::filesystem::path& path);

    std::string translate(std::string_view text, std::string_view target = "en") const override;

private:
    std::map<std::string, std::string> table_;
};

/// English view of a query: the query itself when lang is en, otherwise the
/// translator's output. Any translator failure surfaces as TranslationError.
std::string english_view(const std::string& query, LanguageTag lang, const TranslatorProvider& translator);

}  // namespace mhrag::lang
