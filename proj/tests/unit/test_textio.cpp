#include <cmath>
#include <filesystem>
#include <limits>

#include "ctbpnet/textio.hpp"
#include "doctest.h"

using namespace ctbpnet;
namespace fs = std::filesystem;

TEST_CASE("doubles round-trip through text") {
    for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 1.7976931348623157e308})
        CHECK(textio::parse_double(textio::format_double(x)) == x);
    CHECK(textio::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(std::isinf(textio::parse_double("inf")));
}

TEST_CASE("strict parsing rejects junk") {
    CHECK_THROWS_AS(textio::parse_double("1.5x"), std::invalid_argument);
    CHECK_THROWS_AS(textio::parse_double(""), std::invalid_argument);
    CHECK_THROWS_AS(textio::parse_int("3.0"), std::invalid_argument);
    CHECK(textio::parse_int("-17") == -17);
}

TEST_CASE("fields are split and trimmed") {
    const auto f = textio::split_fields(" a, b ,c,,");
    REQUIRE(f.size() == 5);
    CHECK(f[0] == "a");
    CHECK(f[1] == "b");
    CHECK(f[3].empty());
}

TEST_CASE("plain and gzip files round-trip") {
    const fs::path dir = fs::path(CTBPNET_TEST_TMP) / "textio";
    fs::create_directories(dir);
    const std::string body = "x,y\n1,2\r\n\n3,4\n";
    for (const char* name : {"t.csv", "t.csv.gz"}) {
        textio::write_file_atomic(dir / name, body);
        CHECK(textio::read_file(dir / name) == body);
    }
    CHECK(fs::file_size(dir / "t.csv.gz") != body.size());
    const auto ls = textio::lines(body);
    REQUIRE(ls.size() == 3);
    CHECK(ls[1] == "1,2");
}
