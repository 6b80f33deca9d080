#pragma once

// Real polynomials in n variables over the graded-lex monomial basis,
// restriction to lines and Sturm-sequence root counting.

#include "pk/common.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace pk {

using MultiIndex = std::vector<int>;

std::uint64_t binomial(int n, int k);

/// Monomials of total degree <= d in n variables, ordered by degree and then
/// lexicographically descending within a degree: 1, x1, x2, x1^2, x1x2, x2^2, ...
std::vector<MultiIndex> monomial_basis(int n, int d);

/// Smallest d with C(n+d, d) - 1 >= r.
int stone_tukey_degree(int n, std::size_t r);

struct MonomialTable {
  int n = 0;
  int d = 0;
  Eigen::MatrixXi exponents;  // size() x n
  std::map<MultiIndex, std::size_t> position;

  std::size_t size() const { return static_cast<std::size_t>(exponents.rows()); }
  std::optional<std::size_t> index_of(const MultiIndex& alpha) const {
    auto it = position.find(alpha);
    if (it == position.end()) return std::nullopt;
    return it->second;
  }
};

/// Shared, immutable exponent table; cached per (n, d).
std::shared_ptr<const MonomialTable> monomial_table(int n, int d);

/// pw(i, k) = y_i^k for k <= d.
template <class Scalar, class Derived>
void fill_powers(const Eigen::MatrixBase<Derived>& y, int d, MatrixX<Scalar>& pw) {
  const auto n = y.size();
  pw.resize(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    pw(i, 0) = Scalar(1);
    for (int k = 1; k <= d; ++k) pw(i, k) = pw(i, k - 1) * static_cast<Scalar>(y[i]);
  }
}

/// Row of monomial values at chart coordinates y.
template <class Scalar, class Derived>
VectorX<Scalar> monomial_values(const MonomialTable& table, const Eigen::MatrixBase<Derived>& y) {
  MatrixX<Scalar> pw;
  fill_powers<Scalar>(y, table.d, pw);
  VectorX<Scalar> out(table.size());
  for (std::size_t m = 0; m < table.size(); ++m) {
    Scalar v(1);
    for (int i = 0; i < table.n; ++i) v *= pw(i, table.exponents(m, i));
    out[m] = v;
  }
  return out;
}

/// Affine chart: monomials are taken in y = (x - center) / scale. An empty
/// center means the origin.
template <class Scalar>
struct Chart {
  VectorX<Scalar> center;
  Scalar scale{1};
};

template <class Scalar>
class MultiPoly {
 public:
  using Vector = VectorX<Scalar>;

  MultiPoly() = default;

  MultiPoly(int n, int d)
      : table_(monomial_table(n, d)), coeffs_(Vector::Zero(static_cast<Eigen::Index>(table_->size()))) {}

  MultiPoly(int n, int d, Vector coeffs, Chart<Scalar> chart = {})
      : table_(monomial_table(n, d)), coeffs_(std::move(coeffs)), chart_(std::move(chart)) {
    if (static_cast<std::size_t>(coeffs_.size()) != table_->size())
      throw Error(ErrorKind::ValidationError, "coefficient vector length does not match C(n+d, d)");
    if (chart_.center.size() != 0 && chart_.center.size() != n)
      throw Error(ErrorKind::ValidationError, "chart center has wrong dimension");
    if (!(chart_.scale > Scalar(0))) throw Error(ErrorKind::ValidationError, "chart scale must be positive");
  }

  static MultiPoly from_terms(int n, int d, const std::vector<std::pair<MultiIndex, Scalar>>& terms,
                              Chart<Scalar> chart = {}) {
    MultiPoly p(n, d, Vector::Zero(static_cast<Eigen::Index>(monomial_table(n, d)->size())), std::move(chart));
    for (const auto& [alpha, value] : terms) p.set_coeff(alpha, p.coeff(alpha) + value);
    return p;
  }

  /// normal . x + offset
  static MultiPoly linear(const Vector& normal, Scalar offset) {
    const int n = static_cast<int>(normal.size());
    MultiPoly p(n, 1);
    p.coeffs_[0] = offset;
    p.coeffs_.tail(n) = normal;
    return p;
  }

  int dim() const { return table_ ? table_->n : 0; }
  int degree() const { return table_ ? table_->d : 0; }
  std::size_t size() const { return table_ ? table_->size() : 0; }
  const MonomialTable& basis() const { return *table_; }

  const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }

  Scalar coeff(const MultiIndex& alpha) const {
    auto idx = table_->index_of(alpha);
    return idx ? coeffs_[static_cast<Eigen::Index>(*idx)] : Scalar(0);
  }

  void set_coeff(const MultiIndex& alpha, Scalar value) {
    auto idx = table_->index_of(alpha);
    if (!idx) throw Error(ErrorKind::ValidationError, "multi-index outside the degree-d basis");
    coeffs_[static_cast<Eigen::Index>(*idx)] = value;
  }

  const Chart<Scalar>& chart() const { return chart_; }

  template <class Derived>
  Vector to_chart(const Eigen::MatrixBase<Derived>& x) const {
    Vector y = x.template cast<Scalar>();
    if (chart_.center.size() != 0) y -= chart_.center;
    return y / chart_.scale;
  }

  template <class Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    const Vector y = to_chart(x);
    MatrixX<Scalar> pw;
    fill_powers<Scalar>(y, degree(), pw);
    Scalar sum(0);
    const auto& e = table_->exponents;
    for (Eigen::Index m = 0; m < coeffs_.size(); ++m) {
      if (coeffs_[m] == Scalar(0)) continue;
      Scalar term = coeffs_[m];
      for (int i = 0; i < table_->n; ++i) term *= pw(i, e(m, i));
      sum += term;
    }
    return sum;
  }

  template <class Derived>
  Vector gradient(const Eigen::MatrixBase<Derived>& x) const {
    const int n = dim();
    const Vector y = to_chart(x);
    MatrixX<Scalar> pw;
    fill_powers<Scalar>(y, degree(), pw);
    Vector g = Vector::Zero(n);
    const auto& e = table_->exponents;
    for (Eigen::Index m = 0; m < coeffs_.size(); ++m) {
      if (coeffs_[m] == Scalar(0)) continue;
      for (int i = 0; i < n; ++i) {
        const int ei = e(m, i);
        if (ei == 0) continue;
        Scalar term = coeffs_[m] * Scalar(ei) * pw(i, ei - 1);
        for (int l = 0; l < n; ++l)
          if (l != i) term *= pw(l, e(m, l));
        g[i] += term;
      }
    }
    return g / chart_.scale;
  }

  Scalar max_abs_coeff() const { return coeffs_.size() ? coeffs_.cwiseAbs().maxCoeff() : Scalar(0); }

  /// Same zero set, unit coefficient norm.
  MultiPoly normalized() const {
    MultiPoly out = *this;
    const Scalar norm = coeffs_.norm();
    if (norm > Scalar(0)) out.coeffs_ /= norm;
    return out;
  }

  MultiPoly operator-() const {
    MultiPoly out = *this;
    out.coeffs_ = -out.coeffs_;
    return out;
  }

  friend MultiPoly operator*(Scalar s, const MultiPoly& p) {
    MultiPoly out = p;
    out.coeffs_ *= s;
    return out;
  }

 private:
  std::shared_ptr<const MonomialTable> table_;
  Vector coeffs_;
  Chart<Scalar> chart_;
};

/// Product of two polynomials sharing a chart.
template <class Scalar>
MultiPoly<Scalar> multiply(const MultiPoly<Scalar>& a, const MultiPoly<Scalar>& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::ValidationError, "dimension mismatch in product");
  const auto& ca = a.chart();
  const auto& cb = b.chart();
  const bool same_center = (ca.center.size() == 0 && cb.center.size() == 0) ||
                           (ca.center.size() == cb.center.size() && ca.center == cb.center);
  if (!same_center || ca.scale != cb.scale)
    throw Error(ErrorKind::ValidationError, "product requires a shared chart");
  const int n = a.dim();
  MultiPoly<Scalar> out(n, a.degree() + b.degree(),
                        VectorX<Scalar>::Zero(static_cast<Eigen::Index>(binomial(n + a.degree() + b.degree(), n))),
                        ca);
  const auto& ea = a.basis().exponents;
  const auto& eb = b.basis().exponents;
  MultiIndex alpha(n);
  for (Eigen::Index i = 0; i < a.coeffs().size(); ++i) {
    if (a.coeffs()[i] == Scalar(0)) continue;
    for (Eigen::Index j = 0; j < b.coeffs().size(); ++j) {
      if (b.coeffs()[j] == Scalar(0)) continue;
      for (int k = 0; k < n; ++k) alpha[k] = ea(i, k) + eb(j, k);
      const auto idx = *out.basis().index_of(alpha);
      out.coeffs()[static_cast<Eigen::Index>(idx)] += a.coeffs()[i] * b.coeffs()[j];
    }
  }
  return out;
}

/// Univariate polynomial, coefficients from the constant term upward. The
/// stored leading coefficient may be zero.
template <class Scalar>
class UniPoly {
 public:
  using Vector = VectorX<Scalar>;

  UniPoly() : coeffs_(Vector::Zero(1)) {}
  explicit UniPoly(Vector coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() == 0) coeffs_ = Vector::Zero(1);
  }
  UniPoly(std::initializer_list<Scalar> c) : coeffs_(static_cast<Eigen::Index>(c.size())) {
    Eigen::Index i = 0;
    for (Scalar v : c) coeffs_[i++] = v;
    if (coeffs_.size() == 0) coeffs_ = Vector::Zero(1);
  }

  const Vector& coeffs() const { return coeffs_; }
  Eigen::Index stored_degree() const { return coeffs_.size() - 1; }

  /// Index of the highest nonzero coefficient; -1 for the zero polynomial.
  Eigen::Index degree() const {
    for (Eigen::Index i = coeffs_.size() - 1; i >= 0; --i)
      if (coeffs_[i] != Scalar(0)) return i;
    return -1;
  }

  Scalar operator()(Scalar t) const {
    Scalar acc(0);
    for (Eigen::Index i = coeffs_.size() - 1; i >= 0; --i) acc = acc * t + coeffs_[i];
    return acc;
  }

  UniPoly derivative() const {
    if (coeffs_.size() <= 1) return UniPoly();
    Vector d(coeffs_.size() - 1);
    for (Eigen::Index i = 1; i < coeffs_.size(); ++i) d[i - 1] = Scalar(i) * coeffs_[i];
    return UniPoly(std::move(d));
  }

  /// q(offset + scale * s) as a polynomial in s.
  UniPoly compose_affine(Scalar offset, Scalar scale) const {
    const Eigen::Index m = coeffs_.size();
    Vector out = Vector::Zero(m);
    // Horner in polynomial arithmetic: out = out * (offset + scale s) + c_i
    Eigen::Index len = 0;
    for (Eigen::Index i = m - 1; i >= 0; --i) {
      for (Eigen::Index k = len; k >= 1; --k) out[k] = out[k] * offset + out[k - 1] * scale;
      out[0] = out[0] * offset + coeffs_[i];
      if (len < m - 1) ++len;
    }
    return UniPoly(std::move(out));
  }

 private:
  Vector coeffs_;
};

/// q(t) = P(p + t u). Coefficients come from expanding each monomial, so the
/// result is exact up to rounding. u need not be a unit vector.
template <class Scalar, class D1, class D2>
UniPoly<Scalar> restrict_to_line(const MultiPoly<Scalar>& P, const Eigen::MatrixBase<D1>& p,
                                 const Eigen::MatrixBase<D2>& u) {
  const int n = P.dim();
  const int d = P.degree();
  const VectorX<Scalar> a = P.to_chart(p);
  const VectorX<Scalar> b = u.template cast<Scalar>() / P.chart().scale;

  // rows: coefficients of (a_i + b_i t)^k, k = 0..d
  std::vector<MatrixX<Scalar>> pw(static_cast<std::size_t>(n), MatrixX<Scalar>::Zero(d + 1, d + 1));
  for (int i = 0; i < n; ++i) {
    auto& m = pw[static_cast<std::size_t>(i)];
    m(0, 0) = Scalar(1);
    for (int k = 1; k <= d; ++k) {
      m(k, 0) = m(k - 1, 0) * a[i];
      for (int j = 1; j <= k; ++j) m(k, j) = m(k - 1, j) * a[i] + m(k - 1, j - 1) * b[i];
    }
  }

  VectorX<Scalar> out = VectorX<Scalar>::Zero(d + 1);
  std::vector<Scalar> buf(static_cast<std::size_t>(d + 1)), next(static_cast<std::size_t>(d + 1));
  const auto& e = P.basis().exponents;
  const auto& c = P.coeffs();
  for (Eigen::Index m = 0; m < c.size(); ++m) {
    if (c[m] == Scalar(0)) continue;
    int len = e(m, 0);
    for (int j = 0; j <= len; ++j) buf[static_cast<std::size_t>(j)] = pw[0](len, j);
    for (int i = 1; i < n; ++i) {
      const int ei = e(m, i);
      if (ei == 0) continue;
      std::fill(next.begin(), next.begin() + len + ei + 1, Scalar(0));
      for (int j = 0; j <= len; ++j)
        for (int k = 0; k <= ei; ++k)
          next[static_cast<std::size_t>(j + k)] += buf[static_cast<std::size_t>(j)] * pw[static_cast<std::size_t>(i)](ei, k);
      len += ei;
      std::swap(buf, next);
    }
    for (int j = 0; j <= len; ++j) out[j] += c[m] * buf[static_cast<std::size_t>(j)];
  }
  return UniPoly<Scalar>(std::move(out));
}

namespace detail {

template <class Scalar>
Scalar max_abs(const VectorX<Scalar>& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : Scalar(0);
}

template <class Scalar>
VectorX<Scalar> trim_leading(const VectorX<Scalar>& c, Scalar rel) {
  const Scalar m = max_abs(c);
  Eigen::Index last = c.size() - 1;
  while (last > 0 && std::abs(c[last]) <= rel * m) --last;
  return c.head(last + 1);
}

/// Remainder of num / den (den leading coefficient nonzero).
template <class Scalar>
VectorX<Scalar> poly_rem(VectorX<Scalar> num, const VectorX<Scalar>& den) {
  const Eigen::Index dd = den.size() - 1;
  const Scalar lead = den[dd];
  for (Eigen::Index k = num.size() - 1; k >= dd; --k) {
    const Scalar f = num[k] / lead;
    if (f == Scalar(0)) continue;
    for (Eigen::Index j = 0; j <= dd; ++j) num[k - dd + j] -= f * den[j];
    num[k] = Scalar(0);
  }
  if (dd == 0) return VectorX<Scalar>::Zero(1);
  return num.head(dd);
}

template <class Scalar>
Scalar horner(const VectorX<Scalar>& c, Scalar s) {
  Scalar acc(0);
  for (Eigen::Index i = c.size() - 1; i >= 0; --i) acc = acc * s + c[i];
  return acc;
}

}  // namespace detail

/// Sturm sequence of q on (a, b]. The chain is built in the local variable
/// s = (t - mid) / half so that the interval maps to (-1, 1].
///
/// Distinct roots are counted once regardless of multiplicity; a tangential
/// contact of Z with a line is one intersection point.
template <class Scalar>
class SturmSequence {
 public:
  static constexpr Scalar kContainedTol = Scalar(1e-12);

  /// reference_scale: the magnitude q is judged against when deciding that it
  /// vanishes identically (the max coefficient of the polynomial it was
  /// restricted from). Zero means an absolute test.
  SturmSequence(const UniPoly<Scalar>& q, Scalar a, Scalar b, Scalar reference_scale = Scalar(0))
      : a_(a), b_(b), mid_((a + b) / 2), half_((b - a) / 2) {
    if (!(a < b)) throw Error(ErrorKind::ValidationError, "root interval requires a < b");
    const Scalar ref = reference_scale > Scalar(0) ? reference_scale : Scalar(1);
    if (detail::max_abs(q.coeffs()) < kContainedTol * ref) {
      contained_ = true;
      return;
    }
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    VectorX<Scalar> local = q.compose_affine(mid_, half_).coeffs();
    const Scalar scale = detail::max_abs(local);
    if (scale < kContainedTol * ref) {
      contained_ = true;
      return;
    }
    local = detail::trim_leading<Scalar>(local / scale, Scalar(64) * eps);
    chain_.push_back(local);
    if (local.size() <= 1) return;
    VectorX<Scalar> d(local.size() - 1);
    for (Eigen::Index i = 1; i < local.size(); ++i) d[i - 1] = Scalar(i) * local[i];
    d = detail::trim_leading<Scalar>(d / detail::max_abs(d), Scalar(64) * eps);
    chain_.push_back(d);
    const Scalar rem_tol = Scalar(1e3) * eps * Scalar(local.size());
    while (chain_.back().size() > 1) {
      VectorX<Scalar> r = detail::poly_rem<Scalar>(chain_[chain_.size() - 2], chain_.back());
      const Scalar rm = detail::max_abs(r);
      if (rm <= rem_tol) break;
      r = detail::trim_leading<Scalar>(-r / rm, Scalar(64) * eps);
      chain_.push_back(r);
    }
  }

  bool line_contained() const { return contained_; }

  /// Distinct roots in (a, b].
  int count() const { return count_local(Scalar(-1), Scalar(1)); }

  /// Distinct roots in (lo, hi], a <= lo < hi <= b.
  int count_in(Scalar lo, Scalar hi) const { return count_local(local(lo), local(hi)); }

  /// Distinct roots in (a, b], ascending.
  std::vector<Scalar> roots() const {
    std::vector<Scalar> out;
    if (contained_) return out;
    isolate(Scalar(-1), Scalar(1), count(), 0, out);
    for (auto& s : out) s = mid_ + half_ * s;
    return out;
  }

 private:
  Scalar local(Scalar t) const { return (t - mid_) / half_; }

  int variations(Scalar s) const {
    int changes = 0;
    int prev = 0;
    for (const auto& p : chain_) {
      const Scalar v = detail::horner(p, s);
      const Scalar mag = p.cwiseAbs().sum();
      if (std::abs(v) <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * mag) continue;
      const int sg = v > Scalar(0) ? 1 : -1;
      if (prev != 0 && sg != prev) ++changes;
      prev = sg;
    }
    return changes;
  }

  int count_local(Scalar lo, Scalar hi) const {
    if (contained_ || chain_.empty()) return 0;
    const int c = variations(lo) - variations(hi);
    return std::clamp(c, 0, static_cast<int>(chain_.front().size() - 1));
  }

  void isolate(Scalar lo, Scalar hi, int cnt, int depth, std::vector<Scalar>& out) const {
    if (cnt <= 0) return;
    const auto& p = chain_.front();
    if (cnt == 1) {
      const Scalar flo = detail::horner(p, lo);
      const Scalar fhi = detail::horner(p, hi);
      if (fhi == Scalar(0)) {
        out.push_back(hi);
        return;
      }
      if (flo * fhi < Scalar(0)) {
        Scalar l = lo, h = hi, fl = flo;
        for (int it = 0; it < 200 && h - l > Scalar(4) * std::numeric_limits<Scalar>::epsilon(); ++it) {
          const Scalar m = (l + h) / 2;
          const Scalar fm = detail::horner(p, m);
          if (fm == Scalar(0)) {
            l = h = m;
            break;
          }
          if ((fm < Scalar(0)) == (fl < Scalar(0))) {
            l = m;
            fl = fm;
          } else {
            h = m;
          }
        }
        out.push_back((l + h) / 2);
        return;
      }
    }
    if (depth > 60 || hi - lo < Scalar(1e-13)) {
      for (int i = 0; i < cnt; ++i) out.push_back((lo + hi) / 2);
      return;
    }
    const Scalar m = (lo + hi) / 2;
    const int left = std::clamp(count_local(lo, m), 0, cnt);
    isolate(lo, m, left, depth + 1, out);
    isolate(m, hi, cnt - left, depth + 1, out);
  }

  Scalar a_, b_, mid_, half_;
  bool contained_ = false;
  std::vector<VectorX<Scalar>> chain_;
};

/// Number of distinct real roots of q in (a, b]; nullopt when q vanishes
/// identically (the fiber lies in Z).
template <class Scalar>
std::optional<int> count_distinct_roots(const UniPoly<Scalar>& q, Scalar a, Scalar b,
                                        Scalar reference_scale = Scalar(0)) {
  SturmSequence<Scalar> s(q, a, b, reference_scale);
  if (s.line_contained()) return std::nullopt;
  return s.count();
}

template <class Scalar>
std::optional<std::vector<Scalar>> real_roots(const UniPoly<Scalar>& q, Scalar a, Scalar b,
                                              Scalar reference_scale = Scalar(0)) {
  SturmSequence<Scalar> s(q, a, b, reference_scale);
  if (s.line_contained()) return std::nullopt;
  return s.roots();
}

/// Zero set of a product of factors: Z = union of Z(P_i). Degree is the sum
/// of factor degrees. A single polynomial converts implicitly.
template <class Scalar>
class Hypersurface {
 public:
  Hypersurface() = default;
  Hypersurface(MultiPoly<Scalar> p) { factors_.push_back(std::move(p)); }  // NOLINT(implicit)
  explicit Hypersurface(std::vector<MultiPoly<Scalar>> factors) : factors_(std::move(factors)) {
    for (const auto& f : factors_)
      if (f.dim() != factors_.front().dim()) throw Error(ErrorKind::ValidationError, "factor dimension mismatch");
  }

  int dim() const { return factors_.empty() ? 0 : factors_.front().dim(); }
  int degree() const {
    int d = 0;
    for (const auto& f : factors_) d += f.degree();
    return d;
  }
  bool empty() const { return factors_.empty(); }
  const std::vector<MultiPoly<Scalar>>& factors() const { return factors_; }
  std::vector<MultiPoly<Scalar>>& factors() { return factors_; }

  void add_factor(MultiPoly<Scalar> p) {
    if (!factors_.empty() && p.dim() != dim()) throw Error(ErrorKind::ValidationError, "factor dimension mismatch");
    factors_.push_back(std::move(p));
  }

  template <class Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    Scalar v(1);
    for (const auto& f : factors_) v *= f(x);
    return v;
  }

  /// Expanded single polynomial; all factors must share a chart.
  MultiPoly<Scalar> expand() const {
    if (factors_.empty()) throw Error(ErrorKind::ValidationError, "cannot expand an empty product");
    MultiPoly<Scalar> out = factors_.front();
    for (std::size_t i = 1; i < factors_.size(); ++i) out = multiply(out, factors_[i]);
    return out;
  }

 private:
  std::vector<MultiPoly<Scalar>> factors_;
};

using Poly = MultiPoly<double>;
using UPoly = UniPoly<double>;
using Surface = Hypersurface<double>;

}  // namespace pk
