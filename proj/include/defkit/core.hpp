#pragma once

// Shared value types for rasters, displacement fields and region masks.
//
// Conventions used everywhere in defkit:
//  * Grids are row-major, element (row r, col c) lives at index r * width + c.
//  * x is the column axis, y the row axis.
//  * A displacement field df = (u, v) maps pixel (x, y) of the second image
//    to (x + u(x, y), y + v(x, y)) in the first image. Units are pixels.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace defkit {

enum class ErrorKind {
  DimensionMismatch,
  OutOfRange,
  OutOfBounds,
  ImageTooSmall,
  EstimatorFailure,
  TooShort,
  LengthMismatch,
  ConfigInvalid,
  EmptyMask,
  InvalidValue,
  BadMagic,
  Truncated,
  TrailingData,
  DimensionOverflow,
  ComponentMismatch,
  LineOutOfBounds,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

template <typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Grid = GridT<double>;
using BoolGrid = GridT<bool>;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::ArrayBase<Derived>& a, const char* what) {
  if (!a.isFinite().all()) {
    throw Error(ErrorKind::InvalidValue, std::string(what) + " contains non-finite values");
  }
}

}  // namespace detail

/// Grayscale intensity grid. Values are nominally in [0, 1] but are not
/// clamped; only non-finite values are rejected.
template <typename Scalar>
class BasicRaster {
 public:
  using Data = GridT<Scalar>;

  BasicRaster() = default;
  BasicRaster(Eigen::Index height, Eigen::Index width) : data_(Data::Zero(height, width)) {}
  explicit BasicRaster(Data data) : data_(std::move(data)) { detail::require_finite(data_, "raster"); }

  Eigen::Index height() const { return data_.rows(); }
  Eigen::Index width() const { return data_.cols(); }

  Scalar operator()(Eigen::Index row, Eigen::Index col) const { return data_(row, col); }
  Scalar& operator()(Eigen::Index row, Eigen::Index col) { return data_(row, col); }

  const Data& data() const { return data_; }
  Data& data() { return data_; }

 private:
  Data data_;
};

/// Dense displacement field (u east-west along x, v north-south along y).
template <typename Scalar>
class BasicDisplacementField {
 public:
  using Data = GridT<Scalar>;

  BasicDisplacementField() = default;
  BasicDisplacementField(Eigen::Index height, Eigen::Index width)
      : u_(Data::Zero(height, width)), v_(Data::Zero(height, width)) {}
  BasicDisplacementField(Data u, Data v) : u_(std::move(u)), v_(std::move(v)) {
    if (u_.rows() != v_.rows() || u_.cols() != v_.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "u and v must share dimensions");
    }
    detail::require_finite(u_, "field u");
    detail::require_finite(v_, "field v");
  }

  static BasicDisplacementField constant(Eigen::Index height, Eigen::Index width, Scalar u, Scalar v) {
    return BasicDisplacementField(Data::Constant(height, width, u), Data::Constant(height, width, v));
  }

  Eigen::Index height() const { return u_.rows(); }
  Eigen::Index width() const { return u_.cols(); }

  const Data& u() const { return u_; }
  const Data& v() const { return v_; }
  Data& u() { return u_; }
  Data& v() { return v_; }

  BasicDisplacementField operator+(const BasicDisplacementField& o) const {
    return BasicDisplacementField(u_ + o.u_, v_ + o.v_);
  }
  BasicDisplacementField operator-(const BasicDisplacementField& o) const {
    return BasicDisplacementField(u_ - o.u_, v_ - o.v_);
  }
  BasicDisplacementField operator-() const { return BasicDisplacementField(-u_, -v_); }
  BasicDisplacementField operator*(Scalar s) const { return BasicDisplacementField(u_ * s, v_ * s); }

 private:
  Data u_;
  Data v_;
};

using Raster = BasicRaster<double>;
using DisplacementField = BasicDisplacementField<double>;

class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(Eigen::Index height, Eigen::Index width, bool value = false)
      : bits_(BoolGrid::Constant(height, width, value)) {}
  explicit RegionMask(BoolGrid bits) : bits_(std::move(bits)) {}

  Eigen::Index height() const { return bits_.rows(); }
  Eigen::Index width() const { return bits_.cols(); }

  bool operator()(Eigen::Index row, Eigen::Index col) const { return bits_(row, col); }
  bool& operator()(Eigen::Index row, Eigen::Index col) { return bits_(row, col); }

  const BoolGrid& bits() const { return bits_; }
  BoolGrid& bits() { return bits_; }
  Eigen::Index count() const { return bits_.count(); }

  RegionMask complement() const { return RegionMask(BoolGrid(!bits_)); }

 private:
  BoolGrid bits_;
};

enum class RangeBucket { VerySmall, Small, Medium };

const char* to_string(RangeBucket bucket);
RangeBucket parse_range_bucket(const std::string& name);

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
  return a.height() == b.height() && a.width() == b.width();
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* context) {
  if (!same_shape(a, b)) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(context) + ": " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                    " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

/// Largest per-pixel displacement norm sqrt(u^2 + v^2).
template <typename Scalar>
Scalar field_magnitude_max(const BasicDisplacementField<Scalar>& df) {
  if (df.u().size() == 0) return Scalar(0);
  return (df.u().square() + df.v().square()).sqrt().maxCoeff();
}

/// Per-pair range bucket from the maximum displacement magnitude:
/// [0, 1) VerySmall, [1, 5] Small, (5, 15] Medium; larger is OutOfRange.
RangeBucket classify_magnitude(double max_magnitude);
RangeBucket classify_range(const DisplacementField& df);

}  // namespace defkit
