#include <catch2/catch_amalgamated.hpp>

#include "personagen/config.hpp"
#include "personagen/csv.hpp"

using namespace personagen;

TEST_CASE("toml subset: scalars, tables, arrays, comments") {
    const char* text = R"(
# run targets
count = 1000
seed = 42
ratio = 0.25
flag = true
name = "uniform run"

[targets]
grade = [0.5, 0.5]
labels = ["a", "b"]

[targets.nested]
x = -3
)";
    auto t = parse_toml(text);
    CHECK(t.at("count").as_int() == 1000);
    CHECK(t.at("ratio").as_double() == Catch::Approx(0.25));
    CHECK(t.at("flag").as_bool());
    CHECK(t.at("name").as_string() == "uniform run");
    auto grades = t.table("targets").get_double_array("grade");
    REQUIRE(grades.size() == 2);
    CHECK(grades[0] == 0.5);
    CHECK(t.table("targets").get_string_array("labels") == std::vector<std::string>{"a", "b"});
    CHECK(t.table("targets").table("nested").at("x").as_int() == -3);
}

TEST_CASE("toml subset: array of tables and multiline arrays") {
    const char* text = R"(
[[items]]
id = "w2b02"
codes = [
  1, 2,
  3, 4,
]

[[items]]
id = "w2b04"
codes = [1]
)";
    auto t = parse_toml(text);
    const auto& items = t.array_of_tables("items");
    REQUIRE(items.size() == 2);
    CHECK(items[0].at("id").as_string() == "w2b02");
    CHECK(items[0].at("codes").as_array().size() == 4);
    CHECK(items[1].at("id").as_string() == "w2b04");
}

TEST_CASE("toml subset rejects malformed input") {
    CHECK_THROWS_AS(parse_toml("key \"no equals\""), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = \"unterminated"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = 1\na = 2"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[unclosed\na = 1"), ConfigError);
}

TEST_CASE("csv parses quoted fields and embedded separators") {
    auto rows = parse_csv("a,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\n2,\"line\nbreak\",z\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1][1] == "x,y");
    CHECK(rows[1][2] == "he said \"hi\"");
    CHECK(rows[2][1] == "line\nbreak");
}

TEST_CASE("csv writer round-trips through the parser") {
    std::vector<std::string> fields = {"plain", "with,comma", "with\"quote", "with\nnewline"};
    auto parsed = parse_csv(csv_row(fields));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == fields);
}
