#include "mhrag/lang.hpp"

#include "mhrag/jsonl.hpp"
#include "mhrag/text.hpp"

namespace mhrag::lang {

std::string_view to_string(LanguageTag t) {
    switch (t) {
        case LanguageTag::En: return "en";
        case LanguageTag::Hi: return "hi";
        case LanguageTag::As: return "as";
        case LanguageTag::Und: return "und";
    }
    return "und";
}

std::optional<LanguageTag> parse_language_tag(std::string_view s) {
    if (s == "en") return LanguageTag::En;
    if (s == "hi") return LanguageTag::Hi;
    if (s == "as") return LanguageTag::As;
    if (s == "und") return LanguageTag::Und;
    return std::nullopt;
}

ScriptHistogram script_histogram(std::string_view text) {
    ScriptHistogram h;
    for (const auto& cp : text::decode_utf8(text)) {
        char32_t v = cp.value;
        if ((v >= 'a' && v <= 'z') || (v >= 'A' && v <= 'Z') || (v >= 0xC0 && v <= 0x24F && v != 0xD7 && v != 0xF7)) {
            ++h.latin;
        } else if (v >= 0x0900 && v <= 0x097F) {
            if (v != 0x0964 && v != 0x0965) ++h.devanagari;
        } else if (v >= 0x0980 && v <= 0x09FF) {
            ++h.bengali;
        } else if (v >= 0x80 && text::is_word_char(v) && v != 0x200C && v != 0x200D) {
            ++h.other;
        }
    }
    return h;
}

LanguageTag detect_language(std::string_view text, double min_share) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw InputError("detect_language: empty text");
    auto h = script_histogram(text);
    std::size_t known = h.latin + h.devanagari + h.bengali;
    if (known == 0) return LanguageTag::Und;
    if (static_cast<double>(known) < min_share * static_cast<double>(h.letters())) return LanguageTag::Und;
    if (h.latin >= h.devanagari && h.latin >= h.bengali) return LanguageTag::En;
    if (h.devanagari >= h.bengali) return LanguageTag::Hi;
    return LanguageTag::As;
}

LookupTranslator LookupTranslator::from_file(const std::filesystem::path& path) {
    auto doc = jsonl::Json::parse(jsonl::read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw InputError(path.string() + ": expected a JSON object");
    std::map<std::string, std::string> table;
    for (auto& [k, v] : doc.items()) {
        if (!v.is_string()) throw InputError(path.string() + ": translation for '" + k + "' is not a string");
        table.emplace(k, v.get<std::string>());
    }
    return LookupTranslator(std::move(table));
}

std::string LookupTranslator::translate(std::string_view text, std::string_view target) const {
    if (target != "en") throw ProviderError("lookup translator only supports target 'en'");
    auto it = table_.find(std::string(text));
    if (it != table_.end()) return it->second;
    // identity on text that is already English
    if (detect_language(text) == LanguageTag::En) return std::string(text);
    throw ProviderError("no lookup entry for query");
}

std::string english_view(const std::string& query, LanguageTag lang, const TranslatorProvider& translator) {
    if (lang == LanguageTag::En) return query;
    try {
        return translator.translate(query, "en");
    } catch (const TranslationError&) {
        throw;
    } catch (const std::exception& e) {
        throw TranslationError(query, e.what());
    }
}

}  // namespace mhrag::lang
