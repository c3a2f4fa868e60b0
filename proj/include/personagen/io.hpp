#pragma once

// Corpus and report file I/O. All final outputs are written atomically
// (temp file in the target directory, then rename) so an interrupted stage
// never leaves a truncated file at the final path.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "personagen/persona.hpp"
#include "personagen/schedule.hpp"

namespace personagen {

inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CorpusLoad {
    std::vector<Persona> personas;
    std::vector<std::pair<std::size_t, ParseError>> errors;  // (line number, error)
};

inline CorpusLoad load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus: " + path);
    CorpusLoad out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto parsed = parse_persona(line);
        if (parsed.ok()) out.personas.push_back(std::move(*parsed.persona));
        else out.errors.emplace_back(lineno, *parsed.error);
    }
    return out;
}

inline void write_corpus(const std::string& path, const std::vector<Persona>& personas) {
    std::string buffer;
    for (const auto& p : personas) {
        buffer += serialize_persona(p);
        buffer.push_back('\n');
    }
    atomic_write_file(path, buffer);
}

inline std::vector<Slot> load_plan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open plan: " + path);
    std::vector<Slot> slots;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        slots.push_back(slot_from_line(line));
    }
    return slots;
}

inline void write_plan(const std::string& path, const Schedule& schedule) {
    std::string buffer;
    for (const auto& s : schedule.slots) {
        buffer += slot_to_line(s);
        buffer.push_back('\n');
    }
    atomic_write_file(path, buffer);
}

}  // namespace personagen
