#pragma once

// Shared helpers for test fixtures.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "personagen/persona.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
    return std::string(PERSONAGEN_FIXTURE_DIR) + "/" + name;
}

inline std::string config_path(const std::string& name) {
    return std::string(PERSONAGEN_CONFIG_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline personagen::Persona load_sample_persona() {
    const auto lines = read_lines(fixture_path("sample_persona.jsonl"));
    auto result = personagen::parse_persona(lines.at(0));
    if (!result.ok()) throw std::runtime_error("sample persona fixture does not parse");
    return *result.persona;
}

}  // namespace testsupport
