#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include <balans/io.hpp>
#include <balans/random.hpp>

using namespace balans;

TEST(FormatDouble, RoundTrips) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.normal() * std::pow(10.0, rng.normal() * 10);
        EXPECT_EQ(*parse_double(format_double(x)), x);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(-2), "-2");
    EXPECT_EQ(*parse_double(format_double(std::numeric_limits<double>::denorm_min())), std::numeric_limits<double>::denorm_min());
}

TEST(ParseDouble, AcceptsAndRejects) {
    EXPECT_EQ(*parse_double(" 1.5\r"), 1.5);
    EXPECT_EQ(*parse_double("+3e2"), 300);
    EXPECT_FALSE(parse_double(""));
    EXPECT_FALSE(parse_double("1.5x"));
    EXPECT_FALSE(parse_double("abc"));
}

TEST(Csv, SplitAndQuote) {
    EXPECT_EQ(split_csv_line("a,\"b,c\",\"say \"\"hi\"\"\",\r"), (std::vector<std::string>{"a", "b,c", "say \"hi\"", ""}));
    EXPECT_EQ(quote_csv("plain"), "plain");
    EXPECT_EQ(quote_csv("a,b"), "\"a,b\"");
    EXPECT_EQ(split_csv_line(quote_csv("x\"y,z")), (std::vector<std::string>{"x\"y,z"}));
}

TEST(Csv, ReadSplitsTextAndFeatures) {
    std::istringstream in("g1,batch,g2\n1,a,2\n3,\"b,c\",4\n\n");
    const auto t = read_profile_csv(in, {"batch"});
    EXPECT_EQ(t.header, (std::vector<std::string>{"g1", "batch", "g2"}));
    EXPECT_EQ(t.feature_positions, (std::vector<std::size_t>{0, 2}));
    Matrix expected(2, 2);
    expected << 1, 2, 3, 4;
    EXPECT_EQ(t.features, expected);
    EXPECT_EQ(t.column("batch"), (std::vector<std::string>{"a", "b,c"}));
    EXPECT_THROW(t.column("g1"), InputError);
}

TEST(Csv, RoundTripThroughWriter) {
    Rng rng(2);
    Matrix X(5, 2);
    for (Eigen::Index i = 0; i < 5; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = rng.normal() * 1e-7;
    }
    std::vector<std::vector<std::string>> strings{{"x", "y,z", "w", "\"q\"", "v"}};
    std::ostringstream out;
    write_csv(out, {{"f0", true, 0}, {"batch", false, 0}, {"f1", true, 1}}, X, strings);
    std::istringstream in(out.str());
    const auto t = read_profile_csv(in, {"batch"});
    EXPECT_EQ(t.features, X);
    EXPECT_EQ(t.column("batch"), strings[0]);
}

TEST(Csv, ErrorsNameThePlace) {
    auto message = [](const std::string& text, std::vector<std::string> cols) {
        std::istringstream in(text);
        try {
            read_profile_csv(in, cols);
        } catch (const InputError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("a,b\n1,2\n", {"batch"}).find("'batch'"), std::string::npos);
    const auto bad = message("a,b\n1,2\n3,oops\n", {});
    EXPECT_NE(bad.find("row 2"), std::string::npos);
    EXPECT_NE(bad.find("'b'"), std::string::npos);
    EXPECT_NE(message("a,b\n1\n", {}).find("fields"), std::string::npos);
    EXPECT_NE(message("", {}).find("empty"), std::string::npos);
    EXPECT_NE(message("a\n", {}).find("no data"), std::string::npos);
    EXPECT_NE(message("a,b\nnan,1\n", {}).find("nan"), std::string::npos);
    EXPECT_THROW(read_profile_csv("/nonexistent/file.csv", {}), InputError);
}

TEST(Bala1, RoundTrip) {
    SparseAffinityRows rows(6);
    rows.push_row(2, SparseRow{{0, 2, 5}, {0.25, 1.0, 1e-300}});
    rows.push_row(4, SparseRow{{4}, {1.0}});
    std::stringstream buf;
    write_bala1(buf, rows);
    EXPECT_EQ(buf.str().substr(0, 5), "BALA1");
    EXPECT_EQ(buf.str().size(), 5 + 8 * (3 + 2 + 3 + 4 + 4));
    EXPECT_EQ(read_bala1(buf), rows);
}

TEST(Bala1, RejectsGarbage) {
    std::istringstream bad("BALA2xxxxxxxx");
    EXPECT_THROW(read_bala1(bad), InputError);
    std::istringstream truncated(std::string("BALA1\x06\0\0", 8));
    EXPECT_THROW(read_bala1(truncated), InputError);
}
