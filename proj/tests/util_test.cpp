#include <doctest.h>

#include "evipath/errors.hpp"
#include "evipath/util.hpp"

#include <filesystem>
#include <fstream>

using namespace evipath;
namespace fs = std::filesystem;

TEST_CASE("fnv1a64 matches published vectors") {
    CHECK(util::fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(util::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(util::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("splitmix64 is deterministic per seed") {
    uint64_t s1 = 42, s2 = 42;
    for (int i = 0; i < 8; ++i) CHECK(util::splitmix64(s1) == util::splitmix64(s2));
    uint64_t s3 = 43;
    CHECK(util::splitmix64(s3) != [] { uint64_t s = 42; return util::splitmix64(s); }());
}

TEST_CASE("hex16") {
    CHECK(util::hex16(0) == "0000000000000000");
    CHECK(util::hex16(0xdeadbeefull) == "00000000deadbeef");
    CHECK(util::hex16(0xffffffffffffffffull) == "ffffffffffffffff");
}

TEST_CASE("trim family") {
    CHECK(util::trim("  a b \t") == "a b");
    CHECK(util::ltrim("\n x") == "x");
    CHECK(util::rtrim("x \r\n") == "x");
    CHECK(util::trim("") == "");
    CHECK(util::trim(" \t ") == "");
}

TEST_CASE("split_lines") {
    CHECK(util::split_lines("a\nb") == std::vector<std::string>{"a", "b"});
    CHECK(util::split_lines("a\nb\n") == std::vector<std::string>{"a", "b"});
    CHECK(util::split_lines("a\r\nb\r\n") == std::vector<std::string>{"a", "b"});
    CHECK(util::split_lines("") == std::vector<std::string>{});
    CHECK(util::split_lines("\n") == std::vector<std::string>{""});
    CHECK(util::split_lines("a\n\nb") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("join") {
    CHECK(util::join({"a", "b", "c"}, ", ") == "a, b, c");
    CHECK(util::join({}, ",") == "");
    CHECK(util::join({"x"}, ",") == "x");
}

TEST_CASE("read/write round trip and IoError") {
    fs::path dir = fs::temp_directory_path() / "evipath_util_test";
    fs::remove_all(dir);
    fs::path p = dir / "sub" / "f.txt";
    util::write_file(p, "hello\nworld");
    CHECK(util::read_file(p) == "hello\nworld");
    CHECK_THROWS_AS((void)util::read_file(dir / "missing.txt"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("for_each_jsonl skips blanks, reports 1-based line on bad JSON") {
    fs::path dir = fs::temp_directory_path() / "evipath_util_test2";
    fs::remove_all(dir);
    fs::path p = dir / "rows.jsonl";
    util::write_file(p, "{\"a\":1}\n\n{\"a\":2}\n");
    std::vector<size_t> lines;
    std::vector<int> values;
    util::for_each_jsonl(p, [&](size_t line_no, const nlohmann::ordered_json& doc) {
        lines.push_back(line_no);
        values.push_back(doc.at("a").get<int>());
    });
    CHECK(lines == std::vector<size_t>{1, 3});
    CHECK(values == std::vector<int>{1, 2});

    util::write_file(p, "{\"a\":1}\nnot json\n");
    try {
        util::for_each_jsonl(p, [](size_t, const nlohmann::ordered_json&) {});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
    fs::remove_all(dir);
}
