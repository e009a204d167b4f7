#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "avse/core/checksum.h"
#include "avse/core/csv.h"
#include "avse/core/error.h"
#include "avse/core/kv_config.h"
#include "avse/core/parallel.h"
#include "avse/core/rng.h"
#include "avse/core/tensor.h"
#include "avse/core/tnsr.h"

namespace avse {
namespace {

std::filesystem::path TempPath(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "avse_core_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(Tensor, ShapeAndAccess) {
  Tensor t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  t.at(1, 2, 3) = 7.0f;
  EXPECT_EQ(t[23], 7.0f);
  EXPECT_EQ(t.ShapeString(), "2x3x4");
  EXPECT_EQ(t.row(1).size(), 12u);
}

TEST(Tensor, RejectsBadDims) {
  EXPECT_THROW(Tensor({2, 0}), Error);
  EXPECT_THROW(Tensor(Dims{2, 2}, std::vector<float>(3)), Error);
  Tensor t({2, 3});
  EXPECT_THROW(t.Reshape({4, 2}), Error);
  EXPECT_NO_THROW(t.Reshape({3, 2}));
}

TEST(Tensor, RequireFiniteNamesTheTensor) {
  Tensor t({2}, 0.0f);
  t[1] = std::numeric_limits<float>::quiet_NaN();
  try {
    RequireFinite(t, "weights");
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
}

TEST(Tnsr, ByteLayout) {
  Tensor t(Dims{2, 1}, std::vector<float>{1.0f, -2.0f});
  std::ostringstream os;
  WriteTnsr(os, t);
  const std::string b = os.str();
  ASSERT_EQ(b.size(), 8u + 2 * 4 + 2 * 4);
  EXPECT_EQ(b.substr(0, 4), "TNSR");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 2);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 2);
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 1);
  // 1.0f little-endian: 00 00 80 3f
  EXPECT_EQ(static_cast<unsigned char>(b[16 + 3]), 0x3f);
}

TEST(Tnsr, RoundTripAcrossSeeds) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Dims dims;
    int rank = static_cast<int>(rng.UniformInt(1, 4));
    for (int i = 0; i < rank; ++i) dims.push_back(static_cast<int>(rng.UniformInt(1, 6)));
    Tensor t(dims);
    for (auto& v : t.values()) v = static_cast<float>(rng.Normal());
    auto path = TempPath("t" + std::to_string(seed) + ".tnsr");
    WriteTnsrFile(path, t);
    EXPECT_EQ(ReadTnsrFile(path), t);
  }
}

TEST(Tnsr, RejectsCorruptInput) {
  std::istringstream bad_magic("XXXX\x01\x00\x01\x00");
  EXPECT_THROW(ReadTnsr(bad_magic), Error);
  Tensor t({4}, 1.0f);
  std::ostringstream os;
  WriteTnsr(os, t);
  std::string s = os.str();
  std::istringstream truncated(s.substr(0, s.size() - 3));
  EXPECT_THROW(ReadTnsr(truncated), Error);
}

TEST(KeyValueConfig, ParseOverrideAndTypes) {
  auto kv = KeyValueConfig::Parse(
      "# comment\n"
      "a = 1\n"
      "\n"
      "b=2.5\n"
      "flag = true\n"
      "list = 0.1, 1, 10\n"
      "a = 3\n");
  EXPECT_EQ(kv.GetInt("a", 0), 3);
  EXPECT_DOUBLE_EQ(kv.GetDouble("b", 0), 2.5);
  EXPECT_TRUE(kv.GetBool("flag", false));
  EXPECT_EQ(kv.GetDoubleList("list", {}), (std::vector<double>{0.1, 1, 10}));
  EXPECT_EQ(kv.GetString("missing", "x"), "x");
}

TEST(KeyValueConfig, Errors) {
  EXPECT_THROW(KeyValueConfig::Parse("novalue\n"), Error);
  auto kv = KeyValueConfig::Parse("a = abc\n");
  EXPECT_THROW(kv.GetInt("a", 0), Error);
  EXPECT_THROW(kv.GetDouble("a", 0), Error);
  EXPECT_THROW(kv.GetBool("a", false), Error);
}

TEST(KeyValueConfig, HashIgnoresOrderAndComments) {
  auto a = KeyValueConfig::Parse("x=1\ny=2\n");
  auto b = KeyValueConfig::Parse("# c\ny = 2\nx = 1\n");
  EXPECT_EQ(a.Hash(), b.Hash());
  auto c = KeyValueConfig::Parse("x=1\ny=3\n");
  EXPECT_NE(a.Hash(), c.Hash());
}

TEST(Csv, QuotingRoundTrip) {
  std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
  EXPECT_EQ(SplitCsvLine(JoinCsvLine(fields)), fields);
}

TEST(Csv, FileRoundTripKeepsLineNumbers) {
  auto path = TempPath("t.csv");
  {
    std::ofstream os(path);
    os << "a,b\n1,2\n\n3,4\n";
  }
  CsvTable t = ReadCsvFile(path);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.line_numbers[1], 4);
  EXPECT_EQ(t.Column("b"), 1);
  EXPECT_EQ(t.Column("c"), -1);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) EXPECT_EQ(std::stod(FormatDouble(v)), v);
}

TEST(Rng, DeterministicAndIndependentStreams) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
  EXPECT_NE(Rng::Derive(7, 1).NextU64(), Rng::Derive(7, 2).NextU64());
}

TEST(Rng, DistributionMoments) {
  Rng rng(3);
  const int n = 200000;
  double s = 0, s2 = 0, u = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.Normal();
    s += x;
    s2 += x * x;
    u += rng.Uniform();
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  EXPECT_NEAR(u / n, 0.5, 0.005);
  for (int i = 0; i < 1000; ++i) {
    auto k = rng.UniformInt(-2, 3);
    EXPECT_GE(k, -2);
    EXPECT_LE(k, 3);
  }
}

TEST(Checksum, KnownVector) {
  // FNV-1a 64 of "a".
  EXPECT_EQ(Fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(HexU64(0xabcULL), "0000000000000abc");
}

TEST(Parallel, ResultsIndependentOfJobs) {
  std::vector<int> one(100), four(100);
  ParallelFor(100, 1, [&](std::size_t i) { one[i] = static_cast<int>(i * i); });
  ParallelFor(100, 4, [&](std::size_t i) { four[i] = static_cast<int>(i * i); });
  EXPECT_EQ(one, four);
  EXPECT_THROW(ParallelFor(10, 3,
                           [](std::size_t i) {
                             if (i == 5) throw Error("boom");
                           }),
               Error);
}

}  // namespace
}  // namespace avse
