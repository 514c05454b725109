#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace resprect {

/// Dense row-major float32 tensor.  Rank is dims.size(); scalars are rank-0
/// tensors with one element.  All arithmetic in this project runs through
/// plain loops with a fixed summation order so results are reproducible
/// bit-for-bit across runs on the same platform.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, float fill);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return dims.size(); }

  float& at(std::size_t i) { return data[i]; }
  float at(std::size_t i) const { return data[i]; }
  /// 2-D accessors (row-major).
  float& at(std::size_t r, std::size_t c) { return data[r * dims[1] + c]; }
  float at(std::size_t r, std::size_t c) const { return data[r * dims[1] + c]; }

  bool same_shape(const Tensor& other) const { return dims == other.dims; }
  std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& dims);

/// y = A @ B for A:[m,k], B:[k,n] -> [m,n].  Throws DimensionError on
/// mismatch.  Inner loops are ordered i-k-j so the innermost walk is
/// contiguous in both B and the output.
Tensor matmul(const Tensor& a, const Tensor& b);

/// y = A @ B^T for A:[m,k], B:[n,k] -> [m,n].
Tensor matmul_bt(const Tensor& a, const Tensor& b);

/// y = A^T @ B for A:[k,m], B:[k,n] -> [m,n].
Tensor matmul_at(const Tensor& a, const Tensor& b);

/// Elementwise in-place ops; shapes must match exactly.
void add_inplace(Tensor& dst, const Tensor& src);
void sub_inplace(Tensor& dst, const Tensor& src);
void mul_inplace(Tensor& dst, const Tensor& src);
void scale_inplace(Tensor& dst, float s);
void fill(Tensor& dst, float value);

/// Adds a [n]-vector to every row of a [m,n] matrix.
void add_row_inplace(Tensor& dst, const Tensor& row);

/// [m,a] ++ [m,b] -> [m,a+b], rows side by side.
Tensor concat_cols(const Tensor& left, const Tensor& right);

/// Elementwise clamp to [lo, hi].
Tensor clip(const Tensor& t, float lo, float hi);

/// True if every element is finite.
bool all_finite(const Tensor& t);

/// Throws NumericError mentioning `label` if any element is non-finite.
void require_finite(const Tensor& t, const char* label);

}  // namespace resprect
