#include <gtest/gtest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>

#include "eivreg/csv.hpp"

using namespace eivreg;

TEST(Csv, RandomDoublesRoundTripExactly)
{
  std::mt19937_64 eng(20261018);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000000; ++i) {
    // arbitrary bit patterns cover subnormals and extreme exponents
    double x = std::bit_cast<double>(eng());
    if (!std::isfinite(x))
      x = std::ldexp(static_cast<double>(eng() >> 11), -53);
    const double back = parse_double(format_double(x));
    if (std::bit_cast<std::uint64_t>(back) != std::bit_cast<std::uint64_t>(x))
      ++mismatches;
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(Csv, SpecialValues)
{
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-0.0), "-0");
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
  EXPECT_EQ(parse_double(format_double(-INFINITY)), -INFINITY);
  EXPECT_EQ(parse_double("+2.5"), 2.5);
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min())),
            std::numeric_limits<double>::denorm_min());
}

TEST(Csv, ParseErrorsCarryLineNumbers)
{
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL() << "expected csv_error";
  } catch (const csv_error& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  const auto t = parse_csv("x,y\n1,2\n3,oops\n");
  try {
    numeric_column(t, "y");
    FAIL() << "expected csv_error";
  } catch (const csv_error& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_csv(""), csv_error);
  EXPECT_THROW(parse_csv("a\n\"open\n"), csv_error);
}

TEST(Csv, QuotedFieldsRoundTrip)
{
  CsvTable t;
  t.header = { "name", "formula" };
  t.rows = { { "plain", "n^{-1/2}, log" }, { "with \"quotes\"", "" } };
  const auto back = parse_csv(to_csv_string(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Csv, AtomicWriteAndRead)
{
  const auto dir = std::filesystem::temp_directory_path() / "eivreg_csv_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "sub" / "table.csv";
  CsvTable t;
  t.header = { "x", "y" };
  t.rows = { { "1", "2" }, { "3", "4" } };
  write_csv(path, t);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  const auto back = read_csv(path);
  EXPECT_EQ(numeric_column(back, "y"), (std::vector<double>{ 2.0, 4.0 }));
  EXPECT_THROW(back.column("z"), std::out_of_range);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_csv(path), std::runtime_error);
}
