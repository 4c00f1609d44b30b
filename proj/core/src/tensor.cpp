#include "qbmor/tensor.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace qbmor {

SparseTensor3::SparseTensor3(Index n) : n_(n) {
  if (n < 0) throw DimensionError("tensor dimension must be non-negative");
}

SparseTensor3::SparseTensor3(Index n, std::vector<TensorEntry> entries)
    : n_(n), entries_(std::move(entries)) {
  if (n < 0) throw DimensionError("tensor dimension must be non-negative");
  for (const auto& e : entries_) {
    if (e.i < 0 || e.j < 0 || e.k < 0 || e.i >= n || e.j >= n || e.k >= n) {
      throw DimensionError("tensor entry (" + std::to_string(e.i) + "," +
                           std::to_string(e.j) + "," + std::to_string(e.k) +
                           ") out of range for n=" + std::to_string(n));
    }
  }
  auto key = [](const TensorEntry& e) { return std::tie(e.i, e.j, e.k); };
  std::stable_sort(entries_.begin(), entries_.end(),
                   [&](const TensorEntry& a, const TensorEntry& b) { return key(a) < key(b); });
  std::vector<TensorEntry> merged;
  merged.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (!merged.empty() && key(merged.back()) == key(e)) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const TensorEntry& e) { return e.value == 0.0; });
  entries_ = std::move(merged);
}

void SparseTensor3::check_dims(Index a, Index b) const {
  if (a != n_ || b != n_) {
    throw DimensionError("tensor contraction: expected vectors of length " +
                         std::to_string(n_) + ", got " + std::to_string(a) + " and " +
                         std::to_string(b));
  }
}

RowSparseMatrix SparseTensor3::mode1() const {
  std::vector<Triplet> t;
  t.reserve(entries_.size());
  for (const auto& e : entries_) t.emplace_back(e.i, e.j * n_ + e.k, e.value);
  RowSparseMatrix m(n_, n_ * n_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

RowSparseMatrix SparseTensor3::mode2() const {
  std::vector<Triplet> t;
  t.reserve(entries_.size());
  for (const auto& e : entries_) t.emplace_back(e.j, e.k * n_ + e.i, e.value);
  RowSparseMatrix m(n_, n_ * n_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix SparseTensor3::jacobian(const Vector& x) const {
  check_dims(x.size(), x.size());
  std::vector<Triplet> t;
  t.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    t.emplace_back(e.i, e.j, e.value * x[e.k]);
    t.emplace_back(e.i, e.k, e.value * x[e.j]);
  }
  SparseMatrix j(n_, n_);
  j.setFromTriplets(t.begin(), t.end());
  return j;
}

Matrix SparseTensor3::dense_jacobian(const Vector& x) const {
  check_dims(x.size(), x.size());
  Matrix j = Matrix::Zero(n_, n_);
  for (const auto& e : entries_) {
    j(e.i, e.j) += e.value * x[e.k];
    j(e.i, e.k) += e.value * x[e.j];
  }
  return j;
}

SparseTensor3 SparseTensor3::symmetrized() const {
  std::vector<TensorEntry> out;
  out.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    out.push_back({e.i, e.j, e.k, 0.5 * e.value});
    out.push_back({e.i, e.k, e.j, 0.5 * e.value});
  }
  return SparseTensor3(n_, std::move(out));
}

}  // namespace qbmor
