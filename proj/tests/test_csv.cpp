#include "carleman/csv.hpp"
#include "carleman/errors.hpp"

#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace carleman;

TEST_CASE("format_double re-parses bit-exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
    std::uniform_int_distribution<int> exponent(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(mantissa(rng), exponent(rng));
        const double y = std::stod(format_double(x));
        CHECK(std::memcmp(&x, &y, sizeof x) == 0);
    }
    CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("tables survive a text round trip") {
    CsvTable t;
    t.header = {"h", "norm", "label"};
    t.rows = {{format_double(0.1), format_double(1.0 / 3.0), "a"}, {format_double(1e-300), format_double(-2.5), "b"}};
    const CsvTable back = parse_csv(to_csv_string(t));
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(back.column("norm")[0] == 1.0 / 3.0);
    CHECK_THROWS_AS(back.column_index("missing"), InvalidInput);
}

TEST_CASE("write_file_atomic replaces the target and leaves no temporary") {
    const auto dir = std::filesystem::temp_directory_path() / "carleman_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    write_file_atomic(path, "a,b\n1,2\n");
    write_file_atomic(path, "a,b\n3,4\n");
    std::ifstream f(path);
    std::stringstream s;
    s << f.rdbuf();
    CHECK(s.str() == "a,b\n3,4\n");
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
}
