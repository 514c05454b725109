#include "resprect/tensor.hpp"

#include <cmath>
#include <sstream>

#include "resprect/errors.hpp"

namespace resprect {

std::size_t shape_numel(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : dims(std::move(shape)), data(shape_numel(dims), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape, float fill_value)
    : dims(std::move(shape)), data(shape_numel(dims), fill_value) {}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

namespace {

void require_matrix(const Tensor& t, const char* who) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(who) + ": expected rank-2 tensor, got " +
                         t.shape_str());
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dims[1] != b.dims[0]) {
    throw DimensionError("matmul: inner dims disagree, " + a.shape_str() +
                         " @ " + b.shape_str());
  }
  const std::size_t m = a.dims[0], k = a.dims[1], n = b.dims[1];
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = &a.data[i * k];
    float* orow = &out.data[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = &b.data[p * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_bt");
  require_matrix(b, "matmul_bt");
  if (a.dims[1] != b.dims[1]) {
    throw DimensionError("matmul_bt: inner dims disagree, " + a.shape_str() +
                         " @ " + b.shape_str() + "^T");
  }
  const std::size_t m = a.dims[0], k = a.dims[1], n = b.dims[0];
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = &a.data[i * k];
    float* orow = &out.data[i * n];
    for (std::size_t j = 0; j < n; ++j) {
      const float* brow = &b.data[j * k];
      float acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] = acc;
    }
  }
  return out;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_at");
  require_matrix(b, "matmul_at");
  if (a.dims[0] != b.dims[0]) {
    throw DimensionError("matmul_at: inner dims disagree, " + a.shape_str() +
                         "^T @ " + b.shape_str());
  }
  const std::size_t k = a.dims[0], m = a.dims[1], n = b.dims[1];
  Tensor out({m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const float* arow = &a.data[p * m];
    const float* brow = &b.data[p * n];
    for (std::size_t i = 0; i < m; ++i) {
      const float av = arow[i];
      float* orow = &out.data[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(who) + ": shape mismatch " +
                         a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace

void add_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "add_inplace");
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void sub_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "sub_inplace");
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] -= src.data[i];
}

void mul_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "mul_inplace");
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] *= src.data[i];
}

void scale_inplace(Tensor& dst, float s) {
  for (float& v : dst.data) v *= s;
}

void fill(Tensor& dst, float value) {
  for (float& v : dst.data) v = value;
}

void add_row_inplace(Tensor& dst, const Tensor& row) {
  if (dst.rank() != 2 || row.rank() != 1 || dst.dims[1] != row.dims[0]) {
    throw DimensionError("add_row_inplace: need [m,n] += [n], got " +
                         dst.shape_str() + " += " + row.shape_str());
  }
  const std::size_t m = dst.dims[0], n = dst.dims[1];
  for (std::size_t i = 0; i < m; ++i) {
    float* drow = &dst.data[i * n];
    for (std::size_t j = 0; j < n; ++j) drow[j] += row.data[j];
  }
}

Tensor concat_cols(const Tensor& left, const Tensor& right) {
  if (left.rank() != 2 || right.rank() != 2 || left.dims[0] != right.dims[0]) {
    throw DimensionError("concat_cols: need matching row counts, got " +
                         left.shape_str() + " ++ " + right.shape_str());
  }
  const std::size_t m = left.dims[0], a = left.dims[1], b = right.dims[1];
  Tensor out({m, a + b});
  for (std::size_t i = 0; i < m; ++i) {
    float* row = &out.data[i * (a + b)];
    const float* lrow = &left.data[i * a];
    const float* rrow = &right.data[i * b];
    for (std::size_t j = 0; j < a; ++j) row[j] = lrow[j];
    for (std::size_t j = 0; j < b; ++j) row[a + j] = rrow[j];
  }
  return out;
}

Tensor clip(const Tensor& t, float lo, float hi) {
  Tensor out = t;
  for (float& v : out.data) {
    if (v < lo) v = lo;
    if (v > hi) v = hi;
  }
  return out;
}

bool all_finite(const Tensor& t) {
  for (float v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const Tensor& t, const char* label) {
  if (!all_finite(t)) {
    throw NumericError(std::string("non-finite values in ") + label);
  }
}

}  // namespace resprect
