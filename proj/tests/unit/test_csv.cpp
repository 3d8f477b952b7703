#include <gtest/gtest.h>

#include <sstream>

#include "sagechain/csv.hpp"

using namespace sagechain;

namespace {
std::vector<std::vector<std::string>> read_all(const std::string& text) {
    std::istringstream in(text);
    CsvReader reader(in);
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> rec;
    while (reader.next(rec)) out.push_back(rec);
    return out;
}
}  // namespace

TEST(Csv, QuotedFieldsWithCommasQuotesAndNewlines) {
    const auto rows = read_all("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\n");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][0], "x, y");
    EXPECT_EQ(rows[1][1], "say \"hi\"");
    EXPECT_EQ(rows[2][0], "multi\nline");
    EXPECT_EQ(rows[2][1], "z");
}

TEST(Csv, SkipsBomAndBlankLines) {
    const auto rows = read_all("\xEF\xBB\xBFid,v\n\n1,2\n\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0][0], "id");
    EXPECT_EQ(rows[1][1], "2");
}

TEST(Csv, EmptyTrailingFieldIsKept) {
    const auto rows = read_all("a,b,\n");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].size(), 3u);
    EXPECT_EQ(rows[0][2], "");
}

TEST(Csv, EscapeRoundTrips) {
    const std::vector<std::string> fields{"plain", "a,b", "q\"q", "n\nl"};
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_escape(fields[i]);
    const auto rows = read_all(line + "\n");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0], fields);
    EXPECT_EQ(csv_escape("plain"), "plain");
}
