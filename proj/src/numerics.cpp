#include "esdlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "esdlab/error.hpp"

namespace esdlab {
namespace {

template <class T>
constexpr bool kIsComplex = !std::is_same_v<T, double>;

template <class T>
T cj(T x) {
  if constexpr (kIsComplex<T>) {
    return std::conj(x);
  } else {
    return x;
  }
}

template <class T>
double abs1(T x) {
  if constexpr (kIsComplex<T>) {
    return std::abs(x.real()) + std::abs(x.imag());
  } else {
    return std::abs(x);
  }
}

template <class T>
double abs2(T x) {
  if constexpr (kIsComplex<T>) {
    return x.real() * x.real() + x.imag() * x.imag();
  } else {
    return x * x;
  }
}

template <class T>
double real_part(T x) {
  if constexpr (kIsComplex<T>) {
    return x.real();
  } else {
    return x;
  }
}

// Dense square work matrix, row-major.
template <class T>
struct Work {
  std::size_t n;
  std::vector<T> a;
  T& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  T operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

template <class T>
std::vector<T> flat(const ComplexMatrix& m) {
  auto e = m.entries();
  std::vector<T> out(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    if constexpr (kIsComplex<T>) {
      out[k] = e[k];
    } else {
      out[k] = e[k].real();
    }
  }
  return out;
}

template <class T>
Work<T> load(const ComplexMatrix& m) {
  return Work<T>{m.rows(), flat<T>(m)};
}

// Parlett-Reinsch balancing with radix 2 (diagonal similarity only).
template <class T>
void balance(Work<T>& h) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  const std::size_t n = h.n;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += abs1(h(j, i));
        r += abs1(h(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double ginv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) h(i, j) *= ginv;
        for (std::size_t j = 0; j < n; ++j) h(j, i) *= f;
      }
    }
  }
}

// Householder vector for x (length m >= 1) with H^H x = beta e_1,
// H = I - tau v v^H, v_0 = 1. Returns false when no reflection is needed.
template <class T>
bool householder(std::span<const T> x, std::vector<T>& v, T& tau, double& beta) {
  const T alpha = x[0];
  double xnorm2 = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) xnorm2 += abs2(x[i]);
  if (xnorm2 == 0.0) {
    if constexpr (kIsComplex<T>) {
      if (alpha.imag() == 0.0) return false;
    } else {
      return false;
    }
  }
  const double mag = std::sqrt(abs2(alpha) + xnorm2);
  beta = real_part(alpha) >= 0.0 ? -mag : mag;
  tau = (T(beta) - alpha) / T(beta);
  const T scale = T(1.0) / (alpha - T(beta));
  v.assign(x.size(), T{});
  v[0] = T(1.0);
  for (std::size_t i = 1; i < x.size(); ++i) v[i] = x[i] * scale;
  return true;
}

// Unitary reduction to upper Hessenberg form.
template <class T>
void hessenberg(Work<T>& h) {
  const std::size_t n = h.n;
  if (n < 3) return;
  std::vector<T> x;
  std::vector<T> v;
  std::vector<T> w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    x.resize(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = h(k + 1 + i, k);
    T tau{};
    double beta = 0.0;
    if (!householder<T>(x, v, tau, beta)) continue;

    // Left: rows k+1.., columns k+1.. by (I - conj(tau) v v^H).
    std::fill(w.begin(), w.end(), T{});
    for (std::size_t i = 0; i < m; ++i) {
      const T vi = cj(v[i]);
      const T* row = &h.a[(k + 1 + i) * n];
      for (std::size_t j = k + 1; j < n; ++j) w[j] += vi * row[j];
    }
    const T ctau = cj(tau);
    for (std::size_t i = 0; i < m; ++i) {
      const T f = ctau * v[i];
      T* row = &h.a[(k + 1 + i) * n];
      for (std::size_t j = k + 1; j < n; ++j) row[j] -= f * w[j];
    }
    h(k + 1, k) = T(beta);
    for (std::size_t i = 1; i < m; ++i) h(k + 1 + i, k) = T{};

    // Right: all rows, columns k+1.. by (I - tau v v^H).
    for (std::size_t r = 0; r < n; ++r) {
      T* row = &h.a[r * n + k + 1];
      T s{};
      for (std::size_t i = 0; i < m; ++i) s += row[i] * v[i];
      s *= tau;
      for (std::size_t i = 0; i < m; ++i) row[i] -= s * cj(v[i]);
    }
  }
}

constexpr double kDeflation = 1e-14;
constexpr int kSweepBudget = 40;

// Rotation G = [c s; -conj(s) c] with G [x; y] = [r; 0].
void givens(cplx x, cplx y, double& c, cplx& s, cplx& r) {
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  if (ay == 0.0) {
    c = 1.0;
    s = 0.0;
    r = x;
    return;
  }
  if (ax == 0.0) {
    c = 0.0;
    s = std::conj(y) / ay;
    r = ay;
    return;
  }
  const double nu = std::hypot(ax, ay);
  const cplx phase = x / ax;
  c = ax / nu;
  s = phase * std::conj(y) / nu;
  r = phase * nu;
}

// Single-shift implicit QR on a complex Hessenberg matrix, eigenvalues only.
std::vector<cplx> hessenberg_qr(Work<cplx>& h) {
  const std::size_t n = h.n;
  std::vector<cplx> eig(n);
  double hnorm = 0.0;
  for (const auto& e : h.a) hnorm = std::max(hnorm, abs1(e));

  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  int its = 0;
  while (hi >= 0) {
    std::ptrdiff_t l = hi;
    for (; l > 0; --l) {
      double s = abs1(h(l - 1, l - 1)) + abs1(h(l, l));
      if (s == 0.0) s = hnorm;
      if (abs1(h(l, l - 1)) <= kDeflation * s) {
        h(l, l - 1) = 0.0;
        break;
      }
    }
    if (l == hi) {
      eig[hi] = h(hi, hi);
      --hi;
      its = 0;
      continue;
    }
    if (its >= kSweepBudget) {
      throw NumericalFailure("complex QR iteration did not converge; " + std::to_string(hi + 1) +
                                 " eigenvalues remain unreduced",
                             abs1(h(hi, hi - 1)));
    }
    ++its;

    cplx mu;
    if (its % 10 == 0) {
      mu = h(hi, hi) + 0.75 * abs1(h(hi, hi - 1));
    } else {
      const cplx a = h(hi - 1, hi - 1);
      const cplx b = h(hi - 1, hi);
      const cplx c = h(hi, hi - 1);
      const cplx d = h(hi, hi);
      const cplx half = 0.5 * (a - d);
      const cplx disc = std::sqrt(half * half + b * c);
      const cplx m1 = 0.5 * (a + d) + disc;
      const cplx m2 = 0.5 * (a + d) - disc;
      mu = std::abs(m1 - d) < std::abs(m2 - d) ? m1 : m2;
    }

    cplx x = h(l, l) - mu;
    cplx y = h(l + 1, l);
    for (std::ptrdiff_t k = l; k < hi; ++k) {
      if (k > l) {
        x = h(k, k - 1);
        y = h(k + 1, k - 1);
      }
      double c;
      cplx s;
      cplx r;
      givens(x, y, c, s, r);
      if (k > l) {
        h(k, k - 1) = r;
        h(k + 1, k - 1) = 0.0;
      }
      const cplx sc = std::conj(s);
      cplx* rk = &h.a[k * n];
      cplx* rk1 = &h.a[(k + 1) * n];
      for (std::ptrdiff_t j = k; j <= hi; ++j) {
        const cplx t1 = rk[j];
        const cplx t2 = rk1[j];
        rk[j] = c * t1 + s * t2;
        rk1[j] = c * t2 - sc * t1;
      }
      const std::ptrdiff_t last = std::min(k + 2, hi);
      for (std::ptrdiff_t i = l; i <= last; ++i) {
        cplx* ri = &h.a[i * n];
        const cplx t1 = ri[k];
        const cplx t2 = ri[k + 1];
        ri[k] = c * t1 + sc * t2;
        ri[k + 1] = c * t2 - s * t1;
      }
    }
  }
  return eig;
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on a real Hessenberg matrix, eigenvalues only.
std::vector<cplx> hessenberg_qr(Work<double>& a) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.n);
  std::vector<cplx> eig(a.n);
  double anorm = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  }

  std::ptrdiff_t nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    std::ptrdiff_t l;
    do {
      for (l = nn; l >= 1; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= kDeflation * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        eig[nn] = x + t;
        --nn;
        continue;
      }
      double y = a(nn - 1, nn - 1);
      double w = a(nn, nn - 1) * a(nn - 1, nn);
      if (l == nn - 1) {
        const double p = 0.5 * (y - x);
        const double q = p * p + w;
        double z = std::sqrt(std::abs(q));
        x += t;
        if (q >= 0.0) {
          z = p + sign_of(z, p);
          eig[nn - 1] = eig[nn] = x + z;
          if (z != 0.0) eig[nn] = x - w / z;
        } else {
          eig[nn - 1] = cplx(x + p, z);
          eig[nn] = cplx(x + p, -z);
        }
        nn -= 2;
        continue;
      }
      if (its >= kSweepBudget) {
        throw NumericalFailure("real QR iteration did not converge; " + std::to_string(nn + 1) +
                                   " eigenvalues remain unreduced",
                               std::abs(a(nn, nn - 1)));
      }
      if (its == 10 || its == 20 || its == 30) {
        t += x;
        for (std::ptrdiff_t i = 0; i <= nn; ++i) a(i, i) -= x;
        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
        y = x = 0.75 * s;
        w = -0.4375 * s * s;
      }
      ++its;

      double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
      std::ptrdiff_t m;
      for (m = nn - 2; m >= l; --m) {
        z = a(m, m);
        r = x - z;
        double s = y - z;
        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
        q = a(m + 1, m + 1) - z - r - s;
        r = a(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
        if (u <= std::numeric_limits<double>::epsilon() * v) break;
      }
      for (std::ptrdiff_t i = m + 2; i <= nn; ++i) {
        a(i, i - 2) = 0.0;
        if (i != m + 2) a(i, i - 3) = 0.0;
      }
      for (std::ptrdiff_t k = m; k <= nn - 1; ++k) {
        if (k != m) {
          p = a(k, k - 1);
          q = a(k + 1, k - 1);
          r = 0.0;
          if (k != nn - 1) r = a(k + 2, k - 1);
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x != 0.0) {
            p /= x;
            q /= x;
            r /= x;
          }
        }
        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
        if (s == 0.0) continue;
        if (k == m) {
          if (l != m) a(k, k - 1) = -a(k, k - 1);
        } else {
          a(k, k - 1) = -s * x;
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;
        double* rk = &a.a[k * n];
        double* rk1 = &a.a[(k + 1) * n];
        double* rk2 = k != nn - 1 ? &a.a[(k + 2) * n] : nullptr;
        for (std::ptrdiff_t j = k; j <= nn; ++j) {
          p = rk[j] + q * rk1[j];
          if (rk2) {
            p += r * rk2[j];
            rk2[j] -= p * z;
          }
          rk1[j] -= p * y;
          rk[j] -= p * x;
        }
        const std::ptrdiff_t mmin = nn < k + 3 ? nn : k + 3;
        for (std::ptrdiff_t i = l; i <= mmin; ++i) {
          double* ri = &a.a[i * n];
          p = x * ri[k] + y * ri[k + 1];
          if (rk2) {
            p += z * ri[k + 2];
            ri[k + 2] -= p * r;
          }
          ri[k + 1] -= p * q;
          ri[k] -= p;
        }
      }
    } while (l < nn - 1);
  }
  return eig;
}

// Householder tridiagonalization of a Hermitian matrix followed by implicit
// QL on the real symmetric tridiagonal |e| form. Returns ascending values.
template <class T>
std::vector<double> hermitian_eigen(Work<T>& a) {
  const std::size_t n = a.n;
  std::vector<double> d(n);
  std::vector<double> e(n, 0.0);
  std::vector<T> x;
  std::vector<T> v;
  std::vector<T> p(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    const std::size_t o = k + 1;
    x.resize(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = a(o + i, k);
    T tau{};
    double beta = 0.0;
    if (!householder<T>(x, v, tau, beta)) {
      e[k] = std::sqrt(abs2(x[0]));
      continue;
    }
    e[k] = std::abs(beta);
    // p = A v on the trailing block.
    double gamma = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const T* row = &a.a[(o + i) * n + o];
      T s{};
      for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
      p[i] = s;
      gamma += real_part(cj(v[i]) * s);
    }
    // w = tau p - |tau|^2 gamma / 2 v ; A -= w v^H + v w^H.
    const double half = 0.5 * abs2(tau) * gamma;
    for (std::size_t i = 0; i < m; ++i) p[i] = tau * p[i] - half * v[i];
    for (std::size_t i = 0; i < m; ++i) {
      T* row = &a.a[(o + i) * n + o];
      const T wi = p[i];
      const T vi = v[i];
      for (std::size_t j = 0; j < m; ++j) row[j] -= wi * cj(v[j]) + vi * cj(p[j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = real_part(a(i, i));
  if (n >= 2) e[n - 2] = std::sqrt(abs2(a(n - 1, n - 2)));
  e[n - 1] = 0.0;

  // Implicit QL with Wilkinson-type shift (eigenvalues only).
  const double eps = std::numeric_limits<double>::epsilon();
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t l = 0; l < nn; ++l) {
    int iter = 0;
    std::ptrdiff_t m;
    do {
      for (m = l; m < nn - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw NumericalFailure("tridiagonal QL did not converge", std::abs(e[l]));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + sign_of(r, g));
        double s = 1.0, c = 1.0, pp = 0.0;
        std::ptrdiff_t i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= pp;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - pp;
          r = (d[i] - g) * s + 2.0 * c * b;
          pp = s * r;
          d[i + 1] = g + pp;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= pp;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

template <class T>
Work<T> gram(const ComplexMatrix& m) {
  // Smaller Gram matrix: A A* when rows <= cols, else A* A.
  const bool by_rows = m.rows() <= m.cols();
  const std::size_t k = by_rows ? m.rows() : m.cols();
  const std::size_t len = by_rows ? m.cols() : m.rows();
  // k x len row-major copy whose rows span the Gram matrix.
  const std::vector<T> src = flat<T>(by_rows ? m : m.adjoint());
  Work<T> g{k, std::vector<T>(k * k)};
  for (std::size_t i = 0; i < k; ++i) {
    const T* ri = &src[i * len];
    for (std::size_t j = 0; j <= i; ++j) {
      const T* rj = &src[j * len];
      T s{};
      for (std::size_t t = 0; t < len; ++t) s += ri[t] * cj(rj[t]);
      g(i, j) = s;
      g(j, i) = cj(s);
    }
  }
  return g;
}

}  // namespace

EigenSpectrum eigenvalues(const ComplexMatrix& a) {
  if (!a.is_square() || a.rows() == 0) throw ConfigError("eigenvalues require a non-empty square matrix");
  if (a.is_real()) {
    auto h = load<double>(a);
    balance(h);
    hessenberg(h);
    return {hessenberg_qr(h)};
  }
  auto h = load<cplx>(a);
  balance(h);
  hessenberg(h);
  return {hessenberg_qr(h)};
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h) {
  if (!h.is_square()) throw ConfigError("Hermitian eigenvalues require a square matrix");
  if (h.rows() == 0) return {};
  // Symmetrize from the lower triangle.
  ComplexMatrix s = h;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    s(i, i) = s(i, i).real();
    for (std::size_t j = 0; j < i; ++j) s(j, i) = std::conj(s(i, j));
  }
  if (s.is_real()) {
    auto w = load<double>(s);
    return hermitian_eigen(w);
  }
  auto w = load<cplx>(s);
  return hermitian_eigen(w);
}

std::vector<double> gram_eigenvalues(const ComplexMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return {};
  std::vector<double> ev;
  if (a.is_real()) {
    auto g = gram<double>(a);
    ev = hermitian_eigen(g);
  } else {
    auto g = gram<cplx>(a);
    ev = hermitian_eigen(g);
  }
  for (auto& x : ev) x = std::max(x, 0.0);
  std::reverse(ev.begin(), ev.end());
  return ev;
}

namespace {

// One-sided (Hestenes) Jacobi on the columns of the taller orientation.
// Small singular values keep full relative accuracy, unlike the Gram route.
std::vector<double> jacobi_singular_values(const ComplexMatrix& a) {
  const bool by_rows = a.cols() > a.rows();
  const std::size_t m = by_rows ? a.cols() : a.rows();
  const std::size_t k = by_rows ? a.rows() : a.cols();
  std::vector<std::vector<cplx>> col(k, std::vector<cplx>(m));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (by_rows) col[i][j] = std::conj(a(i, j));
      else col[j][i] = a(i, j);
    }
  }
  auto norm2 = [&](const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
  };
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        auto& bp = col[p];
        auto& bq = col[q];
        const double alpha = norm2(bp), beta = norm2(bq);
        cplx gamma{};
        for (std::size_t i = 0; i < m; ++i) gamma += std::conj(bp[i]) * bq[i];
        const double g = std::abs(gamma);
        if (!(g > 1e-15 * std::sqrt(alpha * beta))) continue;
        rotated = true;
        const cplx phase = std::conj(gamma) / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const cplx x = bp[i], y = bq[i] * phase;
          bp[i] = c * x - s * y;
          bq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(k);
  for (std::size_t j = 0; j < k; ++j) sv[j] = std::sqrt(norm2(col[j]));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

}  // namespace

SingularSpectrum singular_values(const ComplexMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return {};
  if (std::min(a.rows(), a.cols()) <= 128) return {jacobi_singular_values(a)};
  auto ev = gram_eigenvalues(a);
  for (auto& x : ev) x = std::sqrt(x);
  return {std::move(ev)};
}

double OrthonormalRows::project_out(std::vector<cplx>& r) const {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : basis_) {
      cplx c{};
      for (std::size_t i = 0; i < dim_; ++i) c += std::conj(q[i]) * r[i];
      for (std::size_t i = 0; i < dim_; ++i) r[i] -= c * q[i];
    }
  }
  double s = 0.0;
  for (const auto& x : r) s += std::norm(x);
  return std::sqrt(s);
}

double OrthonormalRows::distance(std::span<const cplx> v) const {
  if (v.size() != dim_) throw ConfigError("vector length does not match basis dimension");
  std::vector<cplx> r(v.begin(), v.end());
  return project_out(r);
}

double OrthonormalRows::add(std::span<const cplx> v) {
  if (v.size() != dim_) throw ConfigError("vector length does not match basis dimension");
  std::vector<cplx> r(v.begin(), v.end());
  double vnorm = 0.0;
  for (const auto& x : r) vnorm += std::norm(x);
  vnorm = std::sqrt(vnorm);
  const double d = project_out(r);
  if (d > 1e-14 * vnorm && d > 0.0 && basis_.size() < dim_) {
    for (auto& x : r) x /= d;
    basis_.push_back(std::move(r));
  }
  return d;
}

std::vector<double> row_distances(const ComplexMatrix& a) {
  OrthonormalRows basis(a.cols());
  std::vector<double> d(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) d[i] = basis.add(a.row(i));
  return d;
}

std::vector<double> leave_one_out_distances(const ComplexMatrix& a) {
  const std::size_t rows = a.rows();
  if (rows == 0 || rows > a.cols()) {
    throw ConfigError("leave-one-out distances need 1 <= rows <= cols");
  }
  const auto sv = singular_values(a).values;
  if (!(sv.back() > 1e-10 * sv.front())) {
    throw DegenerateError("matrix is not full rank (sigma_min <= 1e-10 sigma_1)");
  }
  std::vector<double> out(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    OrthonormalRows basis(a.cols());
    for (std::size_t i = 0; i < rows; ++i) {
      if (i != j) basis.add(a.row(i));
    }
    out[j] = basis.distance(a.row(j));
  }
  return out;
}

double LogMagnitude::value() const {
  if (minus_infinity_) throw std::logic_error("log|det| is MinusInfinity");
  return value_;
}

LogMagnitude sum_of_logs(std::span<const double> values) {
  if (values.empty()) return LogMagnitude::finite(0.0);
  const double top = *std::max_element(values.begin(), values.end());
  if (!(top > 0.0)) return LogMagnitude::minus_infinity();
  double s = 0.0;
  for (double v : values) {
    if (v < 1e-300 * top) return LogMagnitude::minus_infinity();
    s += std::log(v);
  }
  return LogMagnitude::finite(s);
}

LogMagnitude log_abs_det(const ComplexMatrix& a, LogDetMethod method) {
  if (!a.is_square()) throw ConfigError("log|det| requires a square matrix");
  if (method == LogDetMethod::via_singular) return sum_of_logs(singular_values(a).values);
  return sum_of_logs(row_distances(a));
}

double hs_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& x : a.entries()) s += std::norm(x);
  return std::sqrt(s);
}

InequalityReport verify_interlacing(const ComplexMatrix& a, std::size_t k) {
  const std::size_t n = a.rows();
  if (!a.is_square() || k < 1 || k >= n) throw ConfigError("interlacing needs square A and 1 <= k < n");
  const auto s = singular_values(a).values;
  const auto sp = singular_values(a.row_block(0, n - k)).values;
  const double slack = 1e-9 * s.front();
  InequalityReport rep;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n - k; ++i) {
    for (double gap : {sp[i] - s[i], s[i + k] - sp[i]}) {
      ++rep.checks;
      rep.worst_violation = std::max(rep.worst_violation, gap);
      if (gap > slack) ++rep.violations;
    }
  }
  return rep;
}

WeylReport verify_weyl(const ComplexMatrix& a) {
  if (!a.is_square()) throw ConfigError("Weyl comparison needs a square matrix");
  const std::size_t n = a.rows();
  const auto lam = eigenvalues(a).values;
  auto sig = singular_values(a).values;
  std::vector<double> mod(n);
  for (std::size_t i = 0; i < n; ++i) mod[i] = std::abs(lam[i]);
  std::sort(mod.begin(), mod.end());

  WeylReport rep;
  double lam2 = 0.0;
  for (double m : mod) lam2 += m * m;
  const double hs2 = std::pow(hs_norm(a), 2);
  rep.second_moment.checks = 1;
  rep.second_moment.worst_violation = lam2 - hs2;
  rep.second_moment_gap = hs2 > 0.0 ? (hs2 - lam2) / hs2 : 0.0;
  if (lam2 - hs2 > 1e-8 * hs2) rep.second_moment.violations = 1;

  // A kernel of dimension r forces at least r zero eigenvalues. Computed ones
  // sit at eps^(1/k) for a k-long Jordan chain, so they are zeroed here.
  const double floor = 1e-12 * (sig.empty() ? 0.0 : sig.front());
  const auto rank_loss = static_cast<std::size_t>(std::count_if(sig.begin(), sig.end(), [&](double s) { return s <= floor; }));
  for (std::size_t i = 0; i < rank_loss; ++i) {
    mod[i] = 0.0;
    sig[n - 1 - i] = 0.0;
  }
  auto logv = [](double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); };
  const double slack = 1e-8 * static_cast<double>(n);
  auto compare = [&](double lhs, double rhs) {
    ++rep.products.checks;
    if (lhs == -std::numeric_limits<double>::infinity()) return;
    const double gap = lhs - rhs;
    if (!(gap <= rep.products.worst_violation)) rep.products.worst_violation = gap;
    if (!(gap <= slack)) ++rep.products.violations;
  };
  rep.products.worst_violation = -std::numeric_limits<double>::infinity();
  // Leading products: prod_{j<=J} |lambda_j| <= prod_{j<=J} sigma_j.
  double pl = 0.0, ps = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    pl += logv(mod[j]);
    ps += logv(sig[j]);
    compare(pl, ps);
  }
  // Trailing products: prod_{j>=J} sigma_j <= prod_{j>=J} |lambda_j|.
  pl = 0.0;
  ps = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    pl += logv(mod[j]);
    ps += logv(sig[j]);
    compare(ps, pl);
  }
  return rep;
}

}  // namespace esdlab
