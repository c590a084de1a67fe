#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include "copoprice/cli.hpp"
#include "test_util.hpp"
TEST_CASE("placeholder pricing") { CHECK(true); }
