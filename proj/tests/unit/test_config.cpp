#include <doctest.h>

#include <sstream>

#include "vp/config.hpp"

using namespace vp;

TEST_CASE("sections and values are parsed") {
    std::istringstream in("# comment\n[grid]\nn = 24\nL = 6.5\n[data]\namplitude = 0.1  # trailing\n"
                          "q_center = 1, -2\n[run]\nseed = 9\n");
    const auto c = parse_config(in);
    CHECK(c.n == 24);
    CHECK(c.L == 6.5);
    CHECK(c.data.present);
    CHECK(c.data.amplitude == 0.1);
    CHECK(c.data.q_center[1] == -2.0);
    CHECK(c.seed == 9u);
}

TEST_CASE("unknown key names the key and the line") {
    std::istringstream in("[grid]\nn = 24\nwidth = 3\n");
    try {
        parse_config(in);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(e.key == "grid.width");
    }
}

TEST_CASE("malformed values and out-of-range parameters are rejected") {
    std::istringstream bad_num("[grid]\nn = 2x\n");
    CHECK_THROWS_AS(parse_config(bad_num), ConfigError);
    std::istringstream no_eq("[grid]\nn 24\n");
    CHECK_THROWS_AS(parse_config(no_eq), ConfigError);
    std::istringstream range("[solver]\nlambda = 2\n");
    CHECK_THROWS_AS(parse_config(range), ConfigError);
}

TEST_CASE("a config without data is empty") {
    std::istringstream in("[grid]\nn = 16\n");
    CHECK_FALSE(parse_config(in).data.present);
}
