#pragma once

// Minimal TOML-subset reader for the pipeline's config surfaces (targets,
// column maps, construct/region/item files). Supported grammar: comments,
// [table] / [[array-of-tables]] headers with dotted names, and `key = value`
// pairs where value is a string, integer, float, boolean, or a (possibly
// multi-line) array of scalars. That subset covers every shipped config.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "personagen/util.hpp"

namespace personagen {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TomlValue {
    std::variant<std::string, std::int64_t, double, bool, std::vector<TomlValue>> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_float() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<std::vector<TomlValue>>(data); }

    const std::string& as_string() const {
        if (!is_string()) throw ConfigError("config value is not a string");
        return std::get<std::string>(data);
    }
    std::int64_t as_int() const {
        if (is_int()) return std::get<std::int64_t>(data);
        throw ConfigError("config value is not an integer");
    }
    double as_double() const {
        if (is_float()) return std::get<double>(data);
        if (is_int()) return static_cast<double>(std::get<std::int64_t>(data));
        throw ConfigError("config value is not a number");
    }
    bool as_bool() const {
        if (!is_bool()) throw ConfigError("config value is not a boolean");
        return std::get<bool>(data);
    }
    const std::vector<TomlValue>& as_array() const {
        if (!is_array()) throw ConfigError("config value is not an array");
        return std::get<std::vector<TomlValue>>(data);
    }
};

struct TomlTable {
    std::map<std::string, TomlValue> values;
    std::map<std::string, TomlTable> tables;
    std::map<std::string, std::vector<TomlTable>> table_arrays;

    bool has(const std::string& key) const { return values.count(key) > 0; }

    const TomlValue* find(const std::string& key) const {
        auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    }

    const TomlValue& at(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    const TomlTable* find_table(const std::string& key) const {
        auto it = tables.find(key);
        return it == tables.end() ? nullptr : &it->second;
    }

    const TomlTable& table(const std::string& key) const {
        auto it = tables.find(key);
        if (it == tables.end()) throw ConfigError("missing config table: " + key);
        return it->second;
    }

    const std::vector<TomlTable>& array_of_tables(const std::string& key) const {
        auto it = table_arrays.find(key);
        if (it == table_arrays.end()) throw ConfigError("missing config table array: " + key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto* v = find(key);
        return v ? v->as_string() : fallback;
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto* v = find(key);
        return v ? v->as_int() : fallback;
    }
    double get_double(const std::string& key, double fallback) const {
        auto* v = find(key);
        return v ? v->as_double() : fallback;
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto* v = find(key);
        return v ? v->as_bool() : fallback;
    }
    std::vector<std::string> get_string_array(const std::string& key) const {
        std::vector<std::string> out;
        auto* v = find(key);
        if (!v) return out;
        for (const auto& e : v->as_array()) out.push_back(e.as_string());
        return out;
    }
    std::vector<double> get_double_array(const std::string& key) const {
        std::vector<double> out;
        auto* v = find(key);
        if (!v) return out;
        for (const auto& e : v->as_array()) out.push_back(e.as_double());
        return out;
    }
};

namespace detail {

class TomlParser {
public:
    explicit TomlParser(std::string text) : text_(std::move(text)) {}

    TomlTable parse() {
        TomlTable root;
        TomlTable* current = &root;
        while (!eof()) {
            skip_ws_and_comments();
            if (eof()) break;
            if (peek() == '[') {
                current = parse_header(root);
            } else {
                parse_key_value(*current);
            }
        }
        return root;
    }

private:
    std::string text_;
    std::size_t pos_ = 0;
    int line_ = 1;

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config parse error at line " + std::to_string(line_) + ": " + msg);
    }

    void skip_ws_and_comments() {
        while (!eof()) {
            char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) advance();
    }

    std::string parse_bare_or_quoted_key() {
        skip_inline_ws();
        if (eof()) fail("expected key");
        if (peek() == '"') return parse_basic_string();
        std::string key;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                key.push_back(advance());
            } else {
                break;
            }
        }
        if (key.empty()) fail("empty key");
        return key;
    }

    TomlTable* parse_header(TomlTable& root) {
        advance();  // '['
        bool array = false;
        if (!eof() && peek() == '[') {
            array = true;
            advance();
        }
        std::vector<std::string> path;
        while (true) {
            path.push_back(parse_bare_or_quoted_key());
            skip_inline_ws();
            if (!eof() && peek() == '.') {
                advance();
                continue;
            }
            break;
        }
        if (eof() || advance() != ']') fail("unterminated table header");
        if (array) {
            if (eof() || advance() != ']') fail("expected ']]' for table array");
        }
        TomlTable* t = &root;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) t = &t->tables[path[i]];
        const std::string& leaf = path.back();
        if (array) {
            t->table_arrays[leaf].emplace_back();
            return &t->table_arrays[leaf].back();
        }
        return &t->tables[leaf];
    }

    void parse_key_value(TomlTable& table) {
        const std::string key = parse_bare_or_quoted_key();
        skip_inline_ws();
        if (eof() || advance() != '=') fail("expected '=' after key " + key);
        skip_inline_ws();
        if (table.values.count(key)) fail("duplicate key: " + key);
        table.values.emplace(key, parse_value());
    }

    TomlValue parse_value() {
        skip_ws_and_comments();
        if (eof()) fail("expected value");
        char c = peek();
        if (c == '"') return TomlValue{parse_basic_string()};
        if (c == '[') return parse_array();
        // bare token: number, bool
        std::string tok;
        while (!eof()) {
            char t = peek();
            if (t == ',' || t == ']' || t == '\n' || t == '#') break;
            tok.push_back(advance());
        }
        tok = trim(tok);
        if (tok == "true") return TomlValue{true};
        if (tok == "false") return TomlValue{false};
        if (tok.empty()) fail("empty value");
        if (tok.find_first_of(".eE") != std::string::npos &&
            tok.find_first_not_of("+-0123456789.eE_") == std::string::npos) {
            try {
                return TomlValue{std::stod(strip_underscores(tok))};
            } catch (...) {
                fail("bad float: " + tok);
            }
        }
        if (tok.find_first_not_of("+-0123456789_") == std::string::npos) {
            try {
                return TomlValue{static_cast<std::int64_t>(std::stoll(strip_underscores(tok)))};
            } catch (...) {
                fail("bad integer: " + tok);
            }
        }
        fail("unrecognized value: " + tok);
    }

    static std::string strip_underscores(const std::string& s) {
        std::string out;
        for (char c : s)
            if (c != '_') out.push_back(c);
        return out;
    }

    std::string parse_basic_string() {
        if (advance() != '"') fail("expected string");
        std::string out;
        while (true) {
            if (eof()) fail("unterminated string");
            char c = advance();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("dangling escape");
                char e = advance();
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    TomlValue parse_array() {
        advance();  // '['
        std::vector<TomlValue> items;
        while (true) {
            skip_ws_and_comments();
            if (eof()) fail("unterminated array");
            if (peek() == ']') {
                advance();
                break;
            }
            items.push_back(parse_value());
            skip_ws_and_comments();
            if (!eof() && peek() == ',') {
                advance();
                continue;
            }
        }
        return TomlValue{std::move(items)};
    }
};

}  // namespace detail

inline TomlTable parse_toml(const std::string& text) {
    return detail::TomlParser(text).parse();
}

inline TomlTable load_toml_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str());
}

}  // namespace personagen
