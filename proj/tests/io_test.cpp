#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qbmor/io.hpp"
#include "qbmor/models.hpp"
#include "support.hpp"

namespace qbmor {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

bool bit_equal(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const Matrix da(a), db(b);
  return (da.array() == db.array()).all();
}

TEST(MatrixMarket, RoundTripIsBitExact) {
  const auto dir = oracle::scratch_dir("mm");
  SparseMatrix m(3, 4);
  m.insert(0, 0) = 0.1;
  m.insert(2, 3) = -1.0 / 3.0;
  m.insert(1, 2) = 6.02214076e23;
  m.insert(2, 0) = 4.9406564584124654e-324;
  write_matrix_market(m, dir / "m.mtx");
  EXPECT_TRUE(bit_equal(read_matrix_market(dir / "m.mtx"), m));
}

TEST(MatrixMarket, SymmetricStorageIsExpanded) {
  const auto dir = oracle::scratch_dir("sym");
  spit(dir / "s.mtx", "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 -1\n");
  const Matrix m(read_matrix_market(dir / "s.mtx"));
  EXPECT_EQ(m(0, 1), -1.0);
  EXPECT_EQ(m(1, 0), -1.0);
  EXPECT_EQ(m(0, 0), 4.0);
}

TEST(MatrixMarket, MalformedInputIsReported) {
  const auto dir = oracle::scratch_dir("bad");
  spit(dir / "a.mtx", "%%MatrixMarket matrix array real general\n1 1\n1\n");
  EXPECT_THROW(read_matrix_market(dir / "a.mtx"), IoError);
  spit(dir / "b.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n");
  EXPECT_THROW(read_matrix_market(dir / "b.mtx"), IoError);
  spit(dir / "c.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
  EXPECT_THROW(read_matrix_market(dir / "c.mtx"), DimensionError);
  EXPECT_THROW(read_matrix_market(dir / "missing.mtx"), IoError);
}

TEST(TensorFile, RoundTripIsBitExact) {
  const auto dir = oracle::scratch_dir("t");
  SparseTensor3 h(4, {{0, 1, 2, 0.1}, {3, 3, 3, -2.5e-17}, {2, 0, 1, 1.0 / 7.0}});
  write_tensor(h, dir / "h.tns");
  EXPECT_EQ(read_tensor(dir / "h.tns"), h);
  spit(dir / "bad.tns", "%%qbtensor3 2 2\n1 1 1 1\n");
  EXPECT_THROW(read_tensor(dir / "bad.tns"), IoError);
}

TEST(SystemManifest, SaveLoadReproducesEveryMatrix) {
  const auto dir = oracle::scratch_dir("sys");
  const QBSystem s = build_fhn({.nbar = 12});
  const auto manifest = save_system(s, dir);
  const QBSystem r = load_system(manifest);
  EXPECT_TRUE(bit_equal(r.E, s.E));
  EXPECT_TRUE(bit_equal(r.A, s.A));
  ASSERT_EQ(r.N.size(), s.N.size());
  for (std::size_t k = 0; k < s.N.size(); ++k) EXPECT_TRUE(bit_equal(r.N[k], s.N[k]));
  EXPECT_EQ(r.H, s.H);
  EXPECT_TRUE(bit_equal(r.B, s.B));
  EXPECT_TRUE(bit_equal(r.C, s.C));
  EXPECT_EQ(r.labels, s.labels);
}

TEST(SystemManifest, DeclaredSizesMustMatchTheFiles) {
  const auto dir = oracle::scratch_dir("sys");
  const auto manifest = save_system(oracle::scalar_system(), dir);
  auto j = nlohmann::json::parse(slurp(manifest));
  j["n"] = 2;
  spit(manifest, j.dump());
  EXPECT_THROW(load_system(manifest), DimensionError);
}

TEST(Json, FloatsUseSeventeenSignificantDigitsAndNonFiniteBecomesNull) {
  nlohmann::json j = {{"a", 0.1}, {"b", std::numeric_limits<double>::infinity()}, {"c", 3}, {"d", {1.5, "x"}}};
  const std::string s = dump_json(j, -1);
  EXPECT_EQ(s, R"({"a":0.10000000000000001,"b":null,"c":3,"d":[1.5,"x"]})");
  EXPECT_EQ(nlohmann::json::parse(dump_json(j))["a"].get<double>(), 0.1);
}

TEST(AtomicWrite, ReplacesTheTargetAndLeavesNoTemporary) {
  const auto dir = oracle::scratch_dir("atomic");
  write_file_atomically(dir / "f.txt", "one");
  write_file_atomically(dir / "f.txt", "two");
  EXPECT_EQ(slurp(dir / "f.txt"), "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1);
}

TEST(FormatDouble, RoundTripsThroughText) {
  for (double v : {0.1, 1.0 / 3.0, -2.2250738585072014e-308, 1e300, 123456789.123456789}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

}  // namespace
}  // namespace qbmor
