#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "topoforge/text.hpp"

using namespace topoforge;

TEST_CASE("trim strips surrounding whitespace only") {
    CHECK(trim("  a b \t") == "a b");
    CHECK(trim("") == "");
    CHECK(trim(" \t\r\n ") == "");
    CHECK(trim("x") == "x");
}

TEST_CASE("case conversion is ASCII-only") {
    CHECK(to_lower("AbC_9") == "abc_9");
    CHECK(to_upper("AbC_9") == "ABC_9");
}

TEST_CASE("split_lines handles LF, CRLF and trailing newline") {
    auto lines = split_lines("a\nb\r\nc");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "a");
    CHECK(lines[1] == "b");
    CHECK(lines[2] == "c");

    CHECK(split_lines("a\n").size() == 1);
    CHECK(split_lines("").empty());
    auto with_blank = split_lines("a\n\nb");
    REQUIRE(with_blank.size() == 3);
    CHECK(with_blank[1] == "");
}

TEST_CASE("whitespace token count") {
    CHECK(whitespace_token_count("one two  three") == 3);
    CHECK(whitespace_token_count("  lead and trail  ") == 3);
    CHECK(whitespace_token_count("") == 0);
    CHECK(whitespace_token_count("   ") == 0);
    CHECK(whitespace_token_count("a\tb\nc") == 3);
}

TEST_CASE("normalize_free_text lowers, collapses and strips punctuation") {
    CHECK(normalize_free_text("  The   Answer. ") == "the answer");
    CHECK(normalize_free_text("YES!!") == "yes");
    CHECK(normalize_free_text("a,b") == "a,b");  // interior punctuation kept
    CHECK(normalize_free_text("x:") == "x");
}

TEST_CASE("parse_decimal accepts full numbers only") {
    CHECK(parse_decimal("42") == 42.0);
    CHECK(parse_decimal(" -3.5 ") == -3.5);
    CHECK(parse_decimal("1e3") == 1000.0);
    CHECK(parse_decimal(".5") == 0.5);
    CHECK_FALSE(parse_decimal("42 apples").has_value());
    CHECK_FALSE(parse_decimal("").has_value());
    CHECK_FALSE(parse_decimal("abc").has_value());
    CHECK_FALSE(parse_decimal("1.2.3").has_value());
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-9, 12345.6789}) {
        auto s = format_double(v);
        auto back = parse_decimal(s);
        REQUIRE(back.has_value());
        CHECK(*back == v);
    }
    CHECK(format_double(42.0) == "42");
}

TEST_CASE("fnv1a64 matches the reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("is_identifier") {
    CHECK(is_identifier("n1"));
    CHECK(is_identifier("A_b_9"));
    CHECK_FALSE(is_identifier(""));
    CHECK_FALSE(is_identifier("a b"));
    CHECK_FALSE(is_identifier("a-b"));
}
