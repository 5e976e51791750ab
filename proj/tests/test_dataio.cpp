#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "plasmode/csv.hpp"
#include "plasmode/dataset.hpp"
#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"

using namespace plasmode;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / ("plasmode_dataio_" + std::to_string(++counter));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Dataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed, bool with_y) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    std::optional<Eigen::VectorXd> y;
    if (with_y) {
        Eigen::VectorXd yy(n);
        for (Eigen::Index i = 0; i < n; ++i) yy(i) = rng.normal() * 1e3 + 0.1234567890123;
        y = yy;
    }
    return make_dataset(X, names, {}, y, with_y ? "out" : "");
}

}  // namespace

TEST_CASE("csv round-trip reproduces every double bit for bit") {
    const fs::path dir = temp_dir();
    const Dataset ds = random_dataset(37, 5, 99, true);
    write_csv(ds, dir / "a.csv");
    LoadOptions opts;
    opts.outcome_column = "out";
    opts.first_column_is_id = true;
    const Dataset back = load_csv(dir / "a.csv", opts);

    REQUIRE(back.n() == ds.n());
    REQUIRE(back.p() == ds.p());
    CHECK(back.column_names == ds.column_names);
    CHECK(back.row_ids == ds.row_ids);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.p(); ++j) CHECK(back.X(i, j) == ds.X(i, j));
        CHECK((*back.y)(i) == (*ds.y)(i));
    }

    // A second write of the reloaded data is byte-identical.
    write_csv(back, dir / "b.csv");
    CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
}

TEST_CASE("format_double survives a parse round-trip on awkward values") {
    // strtod rather than std::stod: libstdc++ stod throws out_of_range on the
    // ERANGE underflow a denormal like 1e-308 raises, strtod just returns it.
    for (double v : {0.1, 1.0 / 3.0, 1e-308, 1.7976931348623157e308, -0.0, 123456789.123456789,
                     2.2250738585072014e-308, 5e-324}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("denormal values survive a csv round-trip") {
    const fs::path dir = temp_dir();
    Dataset ds;
    ds.column_names = {"x1"};
    ds.row_ids = {"r1", "r2"};
    ds.X.resize(2, 1);
    ds.X << 1e-308, 5e-324;
    write_csv(ds, dir / "d.csv");
    const Dataset back = load_csv(dir / "d.csv", LoadOptions{.first_column_is_id = true});
    CHECK(back.X(0, 0) == 1e-308);
    CHECK(back.X(1, 0) == 5e-324);
}

TEST_CASE("quoted fields, escaped quotes and embedded separators parse") {
    const fs::path dir = temp_dir();
    write_file(dir / "q.csv",
               "id,\"a,b\",\"c\"\"d\"\ne1,1.5,2.5\n\"e,2\",3.5,\"4.5\"\n\"e\n3\",5.5,6.5\n");
    LoadOptions opts;
    opts.first_column_is_id = true;
    const Dataset ds = load_csv(dir / "q.csv", opts);
    REQUIRE(ds.n() == 3);
    REQUIRE(ds.p() == 2);
    CHECK(ds.column_names[0] == "a,b");
    CHECK(ds.column_names[1] == "c\"d");
    CHECK(ds.row_ids[1] == "e,2");
    CHECK(ds.row_ids[2] == "e\n3");
    CHECK(ds.X(2, 1) == 6.5);
}

TEST_CASE("crlf line endings are accepted") {
    const fs::path dir = temp_dir();
    write_file(dir / "crlf.csv", "a,b\r\n1,2\r\n3,4\r\n");
    const Dataset ds = load_csv(dir / "crlf.csv");
    REQUIRE(ds.n() == 2);
    CHECK(ds.X(1, 0) == 3.0);
}

TEST_CASE("a field that cannot parse reports its 1-based row and column") {
    const fs::path dir = temp_dir();
    write_file(dir / "bad.csv", "a,b\n1,2\n3,oops\n");
    try {
        load_csv(dir / "bad.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row == 3);
        CHECK(e.column == 2);
    }
}

TEST_CASE("non-finite cells are rejected with a position") {
    const fs::path dir = temp_dir();
    write_file(dir / "inf.csv", "a,b\n1,inf\n");
    CHECK_THROWS_AS(load_csv(dir / "inf.csv"), ParseError);
    write_file(dir / "nan.csv", "a,b\nnan,1\n");
    CHECK_THROWS_AS(load_csv(dir / "nan.csv"), ParseError);
}

TEST_CASE("ragged rows are parse errors") {
    const fs::path dir = temp_dir();
    write_file(dir / "ragged.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(load_csv(dir / "ragged.csv"), ParseError);
}

TEST_CASE("duplicate header names are rejected") {
    const fs::path dir = temp_dir();
    write_file(dir / "dup.csv", "a,a\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv(dir / "dup.csv"), InvalidArgument);
}

TEST_CASE("a missing input file raises IoError") {
    CHECK_THROWS_AS(load_csv("/nonexistent/nowhere.csv"), IoError);
}

TEST_CASE("an unknown outcome column is rejected") {
    const fs::path dir = temp_dir();
    write_file(dir / "d.csv", "a,b\n1,2\n3,4\n");
    LoadOptions opts;
    opts.outcome_column = "z";
    CHECK_THROWS_AS(load_csv(dir / "d.csv", opts), InvalidArgument);
}

TEST_CASE("the outcome column moves from X to y") {
    const fs::path dir = temp_dir();
    write_file(dir / "d.csv", "a,b,c\n1,2,3\n4,5,6\n");
    LoadOptions opts;
    opts.outcome_column = "b";
    const Dataset ds = load_csv(dir / "d.csv", opts);
    REQUIRE(ds.p() == 2);
    CHECK(ds.column_names == std::vector<std::string>{"a", "c"});
    REQUIRE(ds.y.has_value());
    CHECK((*ds.y)(0) == 2.0);
    CHECK((*ds.y)(1) == 5.0);
    CHECK(ds.outcome_name == "b");
}

TEST_CASE("synthetic row ids are assigned when no id column exists") {
    const fs::path dir = temp_dir();
    write_file(dir / "d.csv", "a\n1\n2\n");
    const Dataset ds = load_csv(dir / "d.csv");
    CHECK(ds.row_ids[0] == "r000001");
    CHECK(ds.row_ids[1] == "r000002");
}

TEST_CASE("dataset invariants are enforced") {
    Eigen::MatrixXd X(2, 1);
    X << 1.0, 2.0;
    CHECK_THROWS_AS(make_dataset(Eigen::MatrixXd(1, 1), {"a"}), InvalidArgument);  // n < 2
    CHECK_THROWS_AS(make_dataset(X, {"a", "b"}), InvalidArgument);  // name count mismatch
    Eigen::MatrixXd bad = X;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_dataset(bad, {"a"}), InvalidArgument);
    Eigen::MatrixXd two(2, 2);
    two << 1, 2, 3, 4;
    CHECK_THROWS_AS(make_dataset(two, {"a", "a"}), InvalidArgument);  // duplicate names
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    CHECK_THROWS_AS(make_dataset(X, {"a"}, {}, y, "out"), InvalidArgument);  // y length
}

TEST_CASE("train/test split: sizes, disjointness, order, determinism") {
    const Dataset ds = random_dataset(1098, 3, 4, true);
    const SplitResult split = split_train_test(ds, {2, 1}, 17);
    CHECK(split.train.n() == 732);
    CHECK(split.test.n() == 366);

    // Disjoint and exhaustive by row id.
    std::set<std::string> seen;
    for (const auto& id : split.train.row_ids) seen.insert(id);
    for (const auto& id : split.test.row_ids) CHECK(seen.insert(id).second);
    CHECK(seen.size() == 1098);

    // Original order preserved inside each part.
    for (std::size_t i = 1; i < split.train.row_ids.size(); ++i)
        CHECK(split.train.row_ids[i - 1] < split.train.row_ids[i]);
    for (std::size_t i = 1; i < split.test.row_ids.size(); ++i)
        CHECK(split.test.row_ids[i - 1] < split.test.row_ids[i]);

    // The outcome rides along with its row.
    REQUIRE(split.train.y.has_value());
    CHECK(split.train.y->size() == 732);

    const SplitResult again = split_train_test(ds, {2, 1}, 17);
    CHECK(again.train.row_ids == split.train.row_ids);
    const SplitResult other = split_train_test(ds, {2, 1}, 18);
    CHECK(other.train.row_ids != split.train.row_ids);
}

TEST_CASE("split rejects a dataset smaller than the ratio total") {
    const Dataset ds = random_dataset(2, 1, 1, false);
    CHECK_THROWS_AS(split_train_test(ds, {2, 1}, 0), InvalidArgument);
}

TEST_CASE("column selection keeps k columns in original relative order") {
    const Dataset ds = random_dataset(20, 10, 8, true);
    const Dataset sub = select_columns(ds, 4, 123);
    REQUIRE(sub.p() == 4);
    CHECK(sub.n() == ds.n());
    // Relative order preserved means every adjacent pair appears in the
    // original order.
    std::vector<std::size_t> pos;
    for (const auto& name : sub.column_names) {
        auto it = std::find(ds.column_names.begin(), ds.column_names.end(), name);
        REQUIRE(it != ds.column_names.end());
        pos.push_back(static_cast<std::size_t>(it - ds.column_names.begin()));
    }
    for (std::size_t i = 1; i < pos.size(); ++i) CHECK(pos[i - 1] < pos[i]);
    // Values ride along.
    for (Eigen::Index i = 0; i < sub.n(); ++i)
        CHECK(sub.X(i, 0) == ds.X(i, static_cast<Eigen::Index>(pos[0])));
    // Outcome preserved.
    REQUIRE(sub.y.has_value());
    CHECK((*sub.y)(3) == (*ds.y)(3));

    CHECK(select_columns(ds, 4, 123).column_names == sub.column_names);
    CHECK_THROWS_AS(select_columns(ds, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(select_columns(ds, 11, 1), InvalidArgument);
}

TEST_CASE("write_csv without an outcome omits the outcome column") {
    const fs::path dir = temp_dir();
    const Dataset ds = random_dataset(5, 2, 3, false);
    write_csv(ds, dir / "noy.csv");
    const std::string text = read_file(dir / "noy.csv");
    CHECK(text.substr(0, text.find('\n')) == "id,x1,x2");
}

TEST_CASE("write_csv to an unwritable location raises IoError") {
    const Dataset ds = random_dataset(3, 1, 5, false);
    CHECK_THROWS_AS(write_csv(ds, "/nonexistent_dir_zzz/x.csv"), IoError);
}

TEST_CASE("read_csv_table returns raw cells") {
    const fs::path dir = temp_dir();
    write_file(dir / "t.csv", "h1,h2\nalpha,1.5\n\"x,y\",2\n");
    const CsvTable t = read_csv_table(dir / "t.csv");
    CHECK(t.header == std::vector<std::string>{"h1", "h2"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][0] == "x,y");
}
