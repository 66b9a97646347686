#pragma once

#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace mwp {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Streams a JSON-lines file, calling fn(line_number, parsed_object) for every
// non-blank line. Line numbers are 1-based.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(size_t, const nlohmann::json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON line");
        fn(lineno, j);
    }
}

}  // namespace mwp
