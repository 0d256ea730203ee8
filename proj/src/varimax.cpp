#include <cmath>

#include "tfimpute/factors.hpp"

namespace tfimpute {

double varimax_criterion(const Matrix& loadings) {
  const double p = static_cast<double>(loadings.rows());
  double total = 0.0;
  for (Index c = 0; c < loadings.cols(); ++c) {
    const Vector sq = loadings.col(c).array().square();
    total += sq.squaredNorm() - sq.sum() * sq.sum() / p;
  }
  return total / p;
}

VarimaxResult varimax(const Matrix& q, double tol, int max_sweeps) {
  const Index p = q.rows();
  const Index r = q.cols();
  if (r < 1) throw InputError("varimax needs at least one column");
  VarimaxResult out{q, Matrix::Identity(r, r), 0};
  if (r == 1) return out;

  const double n = static_cast<double>(p);
  double previous = varimax_criterion(out.rotated);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    out.sweeps = sweep;
    for (Index a = 0; a < r - 1; ++a) {
      for (Index b = a + 1; b < r; ++b) {
        const Vector x = out.rotated.col(a);
        const Vector y = out.rotated.col(b);
        const Vector u = x.array().square() - y.array().square();
        const Vector v = 2.0 * x.array() * y.array();
        const double su = u.sum();
        const double sv = v.sum();
        const double num = 2.0 * (u.dot(v) - su * sv / n);
        const double den = (u.squaredNorm() - v.squaredNorm()) - (su * su - sv * sv) / n;
        const double phi = 0.25 * std::atan2(num, den);
        if (phi == 0.0) continue;
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        out.rotated.col(a) = c * x + s * y;
        out.rotated.col(b) = -s * x + c * y;
        const Vector ra = out.rotation.col(a);
        const Vector rb = out.rotation.col(b);
        out.rotation.col(a) = c * ra + s * rb;
        out.rotation.col(b) = -s * ra + c * rb;
      }
    }
    const double current = varimax_criterion(out.rotated);
    if (current - previous < tol) break;
    previous = current;
  }
  return out;
}

}  // namespace tfimpute
