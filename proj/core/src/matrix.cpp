#include "plr/matrix.hpp"

#include <cmath>
#include <string>

#include "plr/error.hpp"

namespace plr {

namespace {
std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}
}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ShapeError("from_rows: row " + std::to_string(i) + " has " +
                       std::to_string(row.size()) + " entries, expected " + std::to_string(c));
    }
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " and " + shape_str(b));
  }
  Matrix out(a.rows(), b.cols(), 0.0);
  // i-k-j order keeps the inner loop on contiguous rows of b and out.
  const std::size_t bc = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.data() + i * bc;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* b_row = b.data() + k * bc;
      for (std::size_t j = 0; j < bc; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

}  // namespace plr
