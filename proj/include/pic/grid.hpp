#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace pic {

struct Float3 {
  float x = 0;
  float y = 0;
  float z = 0;

  friend bool operator==(const Float3&, const Float3&) = default;
};

// Guard (ghost) cell counts. Linear interpolation plus Yee staggering plus the
// current deposit reach one cell below and two cells above the owner cell.
inline constexpr int kGuardLo = 1;
inline constexpr int kGuardHi = 2;

// Non-owning view of a guarded 2D grid of Float3. (0,0) is the first interior
// cell; valid indices run from -guard_lo to n + guard_hi - 1 on each axis.
template <typename T>
class BasicGridView {
 public:
  BasicGridView() = default;
  BasicGridView(T* origin, std::ptrdiff_t stride, int nx, int ny)
      : origin_(origin), stride_(stride), nx_(nx), ny_(ny) {}

  template <typename U>
  BasicGridView(const BasicGridView<U>& other)  // NOLINT: non-const to const
      : origin_(other.origin()), stride_(other.stride()), nx_(other.nx()), ny_(other.ny()) {}

  T& operator()(int i, int j) const { return origin_[i + j * stride_]; }
  T* row(int j) const { return origin_ + j * stride_; }

  // View of the same storage whose row 0 is this view's row `first`.
  BasicGridView rows_from(int first, int count) const {
    return BasicGridView(origin_ + first * stride_, stride_, nx_, count);
  }

  T* origin() const { return origin_; }
  std::ptrdiff_t stride() const { return stride_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

 private:
  T* origin_ = nullptr;
  std::ptrdiff_t stride_ = 0;
  int nx_ = 0;
  int ny_ = 0;
};

using GridView = BasicGridView<Float3>;
using ConstGridView = BasicGridView<const Float3>;

// Vector field over nx*ny interior cells plus fixed guard cells on every side,
// stored as an array of Float3 (x,y,z components interleaved per cell).
class VecGrid {
 public:
  VecGrid() = default;
  VecGrid(int nx, int ny, int gx_lo = kGuardLo, int gx_hi = kGuardHi, int gy_lo = kGuardLo,
          int gy_hi = kGuardHi)
      : nx_(nx),
        ny_(ny),
        gx_lo_(gx_lo),
        gx_hi_(gx_hi),
        gy_lo_(gy_lo),
        gy_hi_(gy_hi),
        data_(static_cast<std::size_t>(gx_lo + nx + gx_hi) * (gy_lo + ny + gy_hi)) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int gx_lo() const { return gx_lo_; }
  int gx_hi() const { return gx_hi_; }
  int gy_lo() const { return gy_lo_; }
  int gy_hi() const { return gy_hi_; }
  std::ptrdiff_t stride() const { return gx_lo_ + nx_ + gx_hi_; }
  int total_rows() const { return gy_lo_ + ny_ + gy_hi_; }

  Float3& operator()(int i, int j) { return data_[offset(i, j)]; }
  const Float3& operator()(int i, int j) const { return data_[offset(i, j)]; }

  Float3* row(int j) { return data_.data() + offset(0, j); }
  const Float3* row(int j) const { return data_.data() + offset(0, j); }

  GridView view() { return {data_.data() + offset(0, 0), stride(), nx_, ny_}; }
  ConstGridView view() const { return {data_.data() + offset(0, 0), stride(), nx_, ny_}; }

  void fill(Float3 v = {}) { std::fill(data_.begin(), data_.end(), v); }
  // Zeroes rows [j0, j1) including their x guard cells.
  void zero_rows(int j0, int j1);

  std::vector<Float3>& storage() { return data_; }
  const std::vector<Float3>& storage() const { return data_; }

 private:
  std::size_t offset(int i, int j) const {
    assert(i >= -gx_lo_ && i < nx_ + gx_hi_);
    assert(j >= -gy_lo_ && j < ny_ + gy_hi_);
    return static_cast<std::size_t>((i + gx_lo_) + (j + gy_lo_) * stride());
  }

  int nx_ = 0;
  int ny_ = 0;
  int gx_lo_ = kGuardLo;
  int gx_hi_ = kGuardHi;
  int gy_lo_ = kGuardLo;
  int gy_hi_ = kGuardHi;
  std::vector<Float3> data_;
};

inline void VecGrid::zero_rows(int j0, int j1) {
  for (int j = j0; j < j1; ++j) {
    Float3* r = row(j) - gx_lo_;
    std::fill(r, r + stride(), Float3{});
  }
}

// Yee mesh: Ex (i+1/2, j), Ey (i, j+1/2), Ez (i, j),
//           Bx (i, j+1/2), By (i+1/2, j), Bz (i+1/2, j+1/2).
struct EMFields {
  VecGrid e;
  VecGrid b;

  EMFields() = default;
  EMFields(int nx, int ny) : e(nx, ny), b(nx, ny) {}
};

struct CurrentDensity {
  VecGrid j;

  CurrentDensity() = default;
  CurrentDensity(int nx, int ny) : j(nx, ny) {}
};

}  // namespace pic
