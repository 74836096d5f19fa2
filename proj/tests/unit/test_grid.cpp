#include <cmath>
#include <filesystem>
#include <algorithm>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "error.hpp"
#include "grid.hpp"

using namespace charstrip;
using Catch::Matchers::WithinAbs;

TEST_CASE("periodic grid locates with wrap-around") {
    TimeGrid g(Periodic{2.0 * M_PI}, 64);
    CHECK(g.periodic());
    CHECK(g.contains(-100.0));
    auto l = g.locate(2.0 * M_PI - 0.5 * g.step());
    CHECK(l.k0 == 63);
    CHECK(l.k1 == 0);
    CHECK_THAT(l.w, WithinAbs(0.5, 1e-12));
    auto l2 = g.locate(-0.5 * g.step());
    CHECK(l2.k0 == 63);
    CHECK(l2.k1 == 0);
}

TEST_CASE("window grid is inclusive and clamps") {
    TimeGrid g(Window{0.0, 1.0, 0.25}, 11);
    CHECK_FALSE(g.periodic());
    CHECK_THAT(g.t_hi(), WithinAbs(1.0, 1e-15));
    CHECK(g.contains(0.5));
    CHECK_FALSE(g.contains(1.5));
    auto l = g.locate(-1.0);
    CHECK(l.k0 == 0);
    CHECK(l.w == 0.0);
}

TEST_CASE("cubic interpolation is exact on cubics") {
    TimeGrid g(Window{0.0, 2.0, 0.0}, 41);
    std::vector<double> f(41);
    auto p = [](double t) { return 1.0 - t + 0.5 * t * t - 0.25 * t * t * t; };
    for (int k = 0; k < 41; ++k) f[k] = p(g.time(k));
    for (double t : {0.013, 0.5, 1.237, 1.99}) CHECK_THAT(interp_cubic(f, g.locate_cubic(t)), WithinAbs(p(t), 1e-13));
}

TEST_CASE("periodic cubic interpolation of a trigonometric signal") {
    TimeGrid g(Periodic{2.0 * M_PI}, 256);
    std::vector<double> f(256);
    for (int k = 0; k < 256; ++k) f[k] = std::sin(g.time(k));
    for (double t : {-0.3, 0.01, 3.0, 6.27}) CHECK_THAT(interp_cubic(f, g.locate_cubic(t)), WithinAbs(std::sin(t), 1e-7));
}

TEST_CASE("bilinear field lookup") {
    Grid grid(8, TimeGrid(Periodic{1.0}, 16));
    GridField f(1, grid);
    for (int i = 0; i <= 8; ++i)
        for (int k = 0; k < 16; ++k) f(0, i, k) = 2.0 * grid.x(i) + 3.0 * grid.time.time(k);
    CHECK_THAT(f.at(0, 0.3, 0.41), WithinAbs(0.6 + 1.23, 1e-12));
    CHECK(f.sup_norm() > 0.0);
    CHECK(f.all_finite());
}

TEST_CASE("checkpoint round trip") {
    Grid grid(8, TimeGrid(Window{-1.0, 2.0, 0.5}, 13));
    GridField f(2, grid);
    for (std::size_t p = 0; p < f.data().size(); ++p) f.data()[p] = std::sin(double(p));
    auto bytes = field_to_checkpoint(f);
    GridField g = field_from_checkpoint(bytes);
    CHECK(g.grid() == f.grid());
    CHECK(g.data() == f.data());
    auto truncated = bytes;
    truncated.resize(bytes.size() - 8);
    bytes[7] = '9';
    for (const auto* b : {&bytes, &truncated}) {
        try {
            field_from_checkpoint(*b);
            FAIL("accepted a damaged checkpoint");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IoError);
        }
    }
}

TEST_CASE("csv output and atomic writes") {
    Grid grid(8, TimeGrid(Periodic{1.0}, 8));
    GridField f(1, grid, 1.5);
    std::string csv = field_to_csv(f, {"u1"});
    CHECK(csv.rfind("x,t,u1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9 * 8);
    auto dir = std::filesystem::temp_directory_path() / "charstrip_grid_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "f.csv").string();
    write_file_atomic(path, csv);
    std::ifstream in(path);
    std::string back((std::istreambuf_iterator<char>(in)), {});
    CHECK(back == csv);
    std::filesystem::remove_all(dir);
}
