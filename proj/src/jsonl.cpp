#include "mhrag/jsonl.hpp"

#include "mhrag/errors.hpp"

#include <fstream>
#include <sstream>

namespace mhrag::jsonl {

void for_each_record(std::istream& in, const std::string& source,
                     const std::function<void(const Json&, std::size_t)>& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(source, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!rec.is_object()) throw ParseError(source, lineno, "record is not a JSON object");
        fn(rec, lineno);
    }
    if (in.bad()) throw InputError("read failure on " + source);
}

void for_each_record(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open " + path.string());
    for_each_record(in, path.string(), fn);
}

std::string require_string(const Json& rec, std::string_view key, const std::string& source, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string())
        throw ParseError(source, line, "missing or non-string field '" + std::string(key) + "'");
    return it->get<std::string>();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failure on " + path.string());
}

}  // namespace mhrag::jsonl
