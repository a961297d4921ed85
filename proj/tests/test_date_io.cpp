#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "peersel/date.hpp"
#include "peersel/errors.hpp"
#include "peersel/io.hpp"
#include "test_support.hpp"

using namespace peersel;
using testsup::TempDir;
using testsup::error_category;

TEST_CASE("date: known serials and ordering") {
    CHECK(parse_date("1970-01-01").serial == 0);
    CHECK(parse_date("1970-01-02").serial == 1);
    CHECK(parse_date("1969-12-31").serial == -1);
    // 30 years of 365 days plus leap days in 72,76,80,84,88,92,96.
    CHECK(parse_date("2000-01-01").serial == 10957);
    CHECK(parse_date("2000-03-01").serial ==
          parse_date("2000-02-29").serial + 1);  // 2000 is a leap year
    CHECK(parse_date("2021-03-01").serial ==
          parse_date("2021-02-28").serial + 1);  // 2021 is not
    CHECK(parse_date("2021-01-01") < parse_date("2021-01-02"));
    CHECK(Date{5}.plus_days(3).serial == 8);
    CHECK(Date{5}.plus_days(-6).serial == -1);
}

TEST_CASE("date: ISO round trip") {
    for (const char* s : {"1970-01-01", "1999-12-31", "2000-02-29", "2024-02-29",
                          "2038-01-19", "1969-07-20", "1900-03-01"}) {
        CHECK(to_iso(parse_date(s)) == s);
    }
}

TEST_CASE("date: malformed inputs are data errors") {
    for (const char* s : {"2021-02-30", "2021-02-29", "2021-13-01", "2021-00-10",
                          "2021-01-00", "2021-01-32", "2021-1-01", "20210101",
                          "2021/01/01", "abcd-ef-gh", "", "2021-01-01x"}) {
        CAPTURE(s);
        CHECK(error_category([&] { parse_date(s); }) == ErrorCategory::data);
    }
    // 1900 is not a leap year (century rule).
    CHECK(error_category([] { parse_date("1900-02-29"); }) == ErrorCategory::data);
}

TEST_CASE("io: CSV round trip and failure modes") {
    TempDir dir;
    const std::string path = dir.file("t.csv");

    SUBCASE("happy path") {
        atomic_write(path, "date,a,b\n2020-01-01,1.5,-2\n2020-01-02,0,3e-1\n");
        CsvTable t = read_csv(path);
        REQUIRE(t.columns == std::vector<std::string>{"a", "b"});
        REQUIRE(t.stamps.size() == 2);
        CHECK(t.stamps[0] == parse_date("2020-01-01"));
        CHECK(t.values[0] == std::vector<double>{1.5, 0.0});
        CHECK(t.values[1] == std::vector<double>{-2.0, 0.3});
    }
    SUBCASE("blank lines are skipped, CR tolerated") {
        atomic_write(path, "date,a\r\n2020-01-01,1\r\n\r\n2020-01-02,0\r\n");
        CsvTable t = read_csv(path);
        CHECK(t.stamps.size() == 2);
    }
    SUBCASE("missing file is an io error") {
        CHECK(error_category([&] { read_csv(dir.file("absent.csv")); }) ==
              ErrorCategory::io);
    }
    SUBCASE("empty file is a data error") {
        atomic_write(path, "");
        CHECK(error_category([&] { read_csv(path); }) == ErrorCategory::data);
    }
    SUBCASE("header without series is a data error") {
        atomic_write(path, "date\n2020-01-01\n");
        CHECK(error_category([&] { read_csv(path); }) == ErrorCategory::data);
    }
    SUBCASE("ragged row is a data error") {
        atomic_write(path, "date,a,b\n2020-01-01,1\n");
        CHECK(error_category([&] { read_csv(path); }) == ErrorCategory::data);
    }
    SUBCASE("non-numeric cell is a data error") {
        atomic_write(path, "date,a\n2020-01-01,oops\n");
        CHECK(error_category([&] { read_csv(path); }) == ErrorCategory::data);
    }
    SUBCASE("trailing garbage after a number is a data error") {
        atomic_write(path, "date,a\n2020-01-01,1.5x\n");
        CHECK(error_category([&] { read_csv(path); }) == ErrorCategory::data);
    }
    SUBCASE("bad date cell propagates the date error") {
        atomic_write(path, "date,a\n2020-02-30,1\n");
        CHECK(error_category([&] { read_csv(path); }) == ErrorCategory::data);
    }
}

TEST_CASE("io: atomic_write replaces content and leaves no temp files") {
    TempDir dir;
    const std::string path = dir.file("out.txt");
    atomic_write(path, "first");
    atomic_write(path, "second");
    CHECK(read_text_file(path) == "second");
    std::size_t entries = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.path)) {
        ++entries;
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
    }
    CHECK(entries == 1);

    // Parent directories are created on demand.
    const std::string nested = dir.file("a/b/c.txt");
    atomic_write(nested, "x");
    CHECK(read_text_file(nested) == "x");
}

TEST_CASE("io: format_double round-trips exactly") {
    for (double v : {0.0, -0.0, 0.5, 1.0 / 3.0, 0.1, -1.25e-7, 6.02214076e23,
                     1e300, -4.9406564584124654e-324}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
}
