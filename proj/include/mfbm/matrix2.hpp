#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace mfbm {

using Vec2 = Eigen::Vector2d;

// Symmetric 2x2 matrix stored by its upper triangle.
struct Sym2x2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static Sym2x2 from_matrix(const Eigen::Matrix2d& m) {
    return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)};
  }
  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d m;
    m << a11, a12, a12, a22;
    return m;
  }
  double determinant() const { return a11 * a22 - a12 * a12; }
  double entry(int i, int j) const { return (i == 0 && j == 0) ? a11 : (i == 1 && j == 1) ? a22 : a12; }

  friend Sym2x2 operator+(Sym2x2 a, const Sym2x2& b) { return {a.a11 + b.a11, a.a12 + b.a12, a.a22 + b.a22}; }
  friend Sym2x2 operator-(Sym2x2 a, const Sym2x2& b) { return {a.a11 - b.a11, a.a12 - b.a12, a.a22 - b.a22}; }
  friend Sym2x2 operator*(double s, const Sym2x2& a) { return {s * a.a11, s * a.a12, s * a.a22}; }
};

// Information matrix: symmetric with positive determinant at admissible parameters.
struct Fisher2x2 : Sym2x2 {
  Fisher2x2() = default;
  explicit Fisher2x2(const Sym2x2& s) : Sym2x2(s) {}
  Fisher2x2(double s11, double s12, double s22) : Sym2x2{s11, s12, s22} {}
  bool positive_definite() const { return a11 > 0.0 && determinant() > 0.0; }
};

// max_{ij} |a_ij - b_ij| / |b_ij|
inline double max_rel_entry_error(const Sym2x2& a, const Sym2x2& b) {
  auto rel = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
  double e = rel(a.a11, b.a11);
  e = std::max(e, rel(a.a12, b.a12));
  return std::max(e, rel(a.a22, b.a22));
}

}  // namespace mfbm
