#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "qbmor/system.hpp"

namespace qbmor {

// Matrix Market coordinate format, 1-based indices. Values are written with
// 17 significant digits so that a read reproduces them bit for bit.
void write_matrix_market(const SparseMatrix& m, const std::filesystem::path& path);
SparseMatrix read_matrix_market(const std::filesystem::path& path);

// Tensor file: header "%%qbtensor3 <n> <nnz>", then one "i j k value" row
// per entry (1-based). Lines starting with '%' after the header are comments.
void write_tensor(const SparseTensor3& h, const std::filesystem::path& path);
SparseTensor3 read_tensor(const std::filesystem::path& path);

// system.json manifest: {"n", "m_in", "p_out", "E", "A", "N": [...], "H", "B",
// "C", "labels"}; matrix entries are paths relative to the manifest.
QBSystem load_system(const std::filesystem::path& manifest);
std::filesystem::path save_system(const QBSystem& sys, const std::filesystem::path& dir);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

// printf("%.17g").
std::string format_double(double v);

// JSON text with every floating-point number written by format_double;
// non-finite values become null. Object keys keep nlohmann's sorted order,
// so equal documents dump to equal bytes.
std::string dump_json(const nlohmann::json& j, int indent = 2);

}  // namespace qbmor
