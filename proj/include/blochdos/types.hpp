#pragma once

#include <complex>
#include <cstddef>
#include <functional>

#include <Eigen/Core>

namespace blochdos {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

/// Strict lexicographic order on integer coordinate vectors of equal length.
inline bool lexicographic_less(const IntVector& a, const IntVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

struct IntVectorHash {
  std::size_t operator()(const IntVector& v) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      h ^= std::hash<int>{}(v[i]) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

struct IntVectorEqual {
  bool operator()(const IntVector& a, const IntVector& b) const noexcept {
    return a.size() == b.size() && a == b;
  }
};

}  // namespace blochdos
