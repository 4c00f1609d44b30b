#include "qbmor/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbmor/errors.hpp"

namespace qbmor {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void dump_value(const nlohmann::json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_value(v, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_value(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  dump_value(j, indent, 0, out);
  return out;
}

void write_file_atomically(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

void write_matrix_market(const SparseMatrix& m, const fs::path& path) {
  std::ostringstream os;
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  for (Index c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      os << it.row() + 1 << " " << it.col() + 1 << " " << format_double(it.value()) << "\n";
    }
  }
  write_file_atomically(path, os.str());
}

SparseMatrix read_matrix_market(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate") {
    throw IoError(path.string() + ": malformed Matrix Market header: " + line);
  }
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer" && field != "double") {
    throw IoError(path.string() + ": unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
    throw IoError(path.string() + ": unsupported symmetry '" + symmetry + "'");
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream size(line);
    if (!(size >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw IoError(path.string() + ": malformed size line: " + line);
    }
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (long e = 0; e < nnz; ++e) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": expected " + std::to_string(nnz) + " entries");
    if (!line.empty() && line[0] == '%') { --e; continue; }
    std::istringstream row(line);
    long i = 0, j = 0;
    std::string value;
    if (!(row >> i >> j >> value)) throw IoError(path.string() + ": malformed entry: " + line);
    if (i < 1 || j < 1 || i > rows || j > cols) {
      throw DimensionError(path.string() + ": entry index out of range: " + line);
    }
    const double v = std::strtod(value.c_str(), nullptr);
    t.emplace_back(i - 1, j - 1, v);
    if (symmetry != "general" && i != j) t.emplace_back(j - 1, i - 1, symmetry == "symmetric" ? v : -v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void write_tensor(const SparseTensor3& h, const fs::path& path) {
  std::ostringstream os;
  os << "%%qbtensor3 " << h.dim() << " " << h.nnz() << "\n";
  for (const auto& e : h.entries()) {
    os << e.i + 1 << " " << e.j + 1 << " " << e.k + 1 << " " << format_double(e.value) << "\n";
  }
  write_file_atomically(path, os.str());
}

SparseTensor3 read_tensor(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::istringstream header(line);
  std::string banner;
  long n = -1, nnz = -1;
  if (!(header >> banner >> n >> nnz) || banner != "%%qbtensor3" || n < 0 || nnz < 0) {
    throw IoError(path.string() + ": malformed tensor header: " + line);
  }
  std::vector<TensorEntry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  while (static_cast<long>(entries.size()) < nnz && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream row(line);
    long i = 0, j = 0, k = 0;
    std::string value;
    if (!(row >> i >> j >> k >> value)) throw IoError(path.string() + ": malformed entry: " + line);
    entries.push_back({i - 1, j - 1, k - 1, std::strtod(value.c_str(), nullptr)});
  }
  if (static_cast<long>(entries.size()) != nnz) {
    throw IoError(path.string() + ": expected " + std::to_string(nnz) + " entries, found " +
                  std::to_string(entries.size()));
  }
  return SparseTensor3(n, std::move(entries));
}

QBSystem load_system(const fs::path& manifest) {
  nlohmann::json j;
  {
    auto in = open_input(manifest);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError(manifest.string() + ": " + e.what());
    }
  }
  const fs::path base = manifest.parent_path();
  auto file = [&](const nlohmann::json& v) {
    fs::path p = base / v.get<std::string>();
    if (!fs::exists(p)) throw IoError("missing file referenced by manifest: " + p.string());
    return p;
  };
  QBSystem sys;
  try {
    sys.E = read_matrix_market(file(j.at("E")));
    sys.A = read_matrix_market(file(j.at("A")));
    for (const auto& nk : j.at("N")) sys.N.push_back(read_matrix_market(file(nk)));
    sys.H = read_tensor(file(j.at("H")));
    sys.B = read_matrix_market(file(j.at("B")));
    sys.C = read_matrix_market(file(j.at("C")));
    if (j.contains("labels")) {
      for (const auto& [k, v] : j.at("labels").items()) {
        sys.labels[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    const auto n = j.at("n").get<Index>();
    const auto m_in = j.at("m_in").get<Index>();
    const auto p_out = j.at("p_out").get<Index>();
    if (sys.order() != n || sys.inputs() != m_in || sys.outputs() != p_out) {
      throw DimensionError(manifest.string() + ": manifest declares n=" + std::to_string(n) +
                           ", m_in=" + std::to_string(m_in) + ", p_out=" + std::to_string(p_out) +
                           " but matrices have n=" + std::to_string(sys.order()) + ", m_in=" +
                           std::to_string(sys.inputs()) + ", p_out=" + std::to_string(sys.outputs()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest.string() + ": " + e.what());
  }
  sys.validate();
  return sys;
}

fs::path save_system(const QBSystem& sys, const fs::path& dir) {
  sys.validate();
  fs::create_directories(dir);
  nlohmann::json j;
  j["n"] = sys.order();
  j["m_in"] = sys.inputs();
  j["p_out"] = sys.outputs();
  write_matrix_market(sys.E, dir / "E.mtx");
  j["E"] = "E.mtx";
  write_matrix_market(sys.A, dir / "A.mtx");
  j["A"] = "A.mtx";
  j["N"] = nlohmann::json::array();
  for (std::size_t k = 0; k < sys.N.size(); ++k) {
    const std::string name = "N" + std::to_string(k + 1) + ".mtx";
    write_matrix_market(sys.N[k], dir / name);
    j["N"].push_back(name);
  }
  write_tensor(sys.H, dir / "H.qbt");
  j["H"] = "H.qbt";
  write_matrix_market(sys.B, dir / "B.mtx");
  j["B"] = "B.mtx";
  write_matrix_market(sys.C, dir / "C.mtx");
  j["C"] = "C.mtx";
  j["labels"] = nlohmann::json::object();
  for (const auto& [k, v] : sys.labels) j["labels"][k] = v;
  const fs::path manifest = dir / "system.json";
  write_file_atomically(manifest, dump_json(j) + "\n");
  return manifest;
}

}  // namespace qbmor
