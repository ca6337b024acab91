#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltbf/covariance.hpp"
#include "ltbf/rng.hpp"
#include "ltbf/types.hpp"

namespace ltbf {

/// Monomial coefficients of p(x) = sum_k beta[k] x^k, fitted so that
/// p(x) tracks x^{-1/2} on [1, B] in the weighted minimax sense.
struct PolyCoeffs {
  std::vector<double> beta;
  double B = 1.0;
  double minimax_error = 0.0;    // max over [1,B] of |sqrt(x) p(x) - 1|
  double quadratic_error = 0.0;  // max over [1,B] of |x p(x)^2 - 1|

  int d() const { return static_cast<int>(beta.size()); }
};

/// Grid error bounds versus measured matrix norms for one (poly, matrix) pair.
struct ErrorCertificate {
  double eps1_bound = 0.0;           // grid max of |x p(x)^2 - 1|
  double eps2_bound = 0.0;           // grid max of |p(x) - x^{-1/2}|
  double eps2_bound_weighted = 0.0;  // grid max of |x p(x) - x^{-1/2}|
  double eps1_measured = 0.0;        // ||P Q P - I||_2
  double eps2_measured = 0.0;        // ||P - Q^{-1/2}||_2
  int grid_size = 0;
  bool out_of_interval = false;      // some eigenvalue of Q left [1, B]
};

class RemezFailure : public std::runtime_error {
 public:
  RemezFailure(const std::string& what, PolyCoeffs best_iterate)
      : std::runtime_error(what), best(std::move(best_iterate)) {}
  PolyCoeffs best;
};

inline double eval_poly_scalar(const PolyCoeffs& c, double x) {
  double p = 0.0;
  for (auto it = c.beta.rbegin(); it != c.beta.rend(); ++it) p = p * x + *it;
  return p;
}

namespace detail {

// Scan [lo, hi] and return the maximum of f, sharpening every local maximum
// of the scan with golden-section so grid bounds dominate values attained at
// arbitrary points of the interval.
template <typename F>
double refined_max(const F& f, double lo, double hi, int n_grid) {
  if (hi <= lo) return f(lo);
  std::vector<double> vals(n_grid);
  const double step = (hi - lo) / (n_grid - 1);
  for (int i = 0; i < n_grid; ++i) vals[i] = f(lo + i * step);
  double best = *std::max_element(vals.begin(), vals.end());

  constexpr double invphi = 0.6180339887498949;
  auto golden = [&](double a, double b) {
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + invphi * (b - a); f2 = f(x2);
      } else {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - invphi * (b - a); f1 = f(x1);
      }
    }
    return std::max(f1, f2);
  };
  for (int i = 1; i + 1 < n_grid; ++i) {
    if (vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1]) {
      best = std::max(best, golden(lo + (i - 1) * step, lo + (i + 1) * step));
    }
  }
  return best;
}

inline double clenshaw(std::span<const double> cheb, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = cheb.size(); k-- > 1;) {
    const double b0 = 2.0 * t * b1 - b2 + cheb[k];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + (cheb.empty() ? 0.0 : cheb[0]);
}

// Chebyshev series on [1, B] -> monomial coefficients in x.
inline std::vector<double> cheb_to_monomial(std::span<const double> cheb, double B) {
  const double a = -(B + 1.0) / (B - 1.0);  // t = a + b*x
  const double b = 2.0 / (B - 1.0);
  const std::size_t d = cheb.size();
  std::vector<double> beta(d, 0.0);
  std::vector<double> tk_prev{1.0};          // T_0
  std::vector<double> tk{a, b};              // T_1
  beta[0] += cheb[0];
  if (d > 1) {
    for (std::size_t i = 0; i < tk.size(); ++i) beta[i] += cheb[1] * tk[i];
  }
  for (std::size_t k = 2; k < d; ++k) {
    // T_k = 2(a + b x) T_{k-1} - T_{k-2}
    std::vector<double> next(k + 1, 0.0);
    for (std::size_t i = 0; i < tk.size(); ++i) {
      next[i] += 2.0 * a * tk[i];
      next[i + 1] += 2.0 * b * tk[i];
    }
    for (std::size_t i = 0; i < tk_prev.size(); ++i) next[i] -= tk_prev[i];
    for (std::size_t i = 0; i <= k; ++i) beta[i] += cheb[k] * next[i];
    tk_prev = std::move(tk);
    tk = std::move(next);
  }
  return beta;
}

struct Extremum {
  double x;
  double e;
};

}  // namespace detail

/// Weighted minimax fit of p(x) ~ x^{-1/2} on [1, B] via Remez exchange:
/// minimizes max |sqrt(x) p(x) - 1|, so the residual equioscillates at
/// d+1 points. Throws RemezFailure (carrying the best iterate) if the
/// exchange has not leveled after max_iter rounds.
inline PolyCoeffs fit_inv_sqrt_poly(int d, double B, int max_iter = 100,
                                    double rel_tol = 1e-10) {
  if (d < 1) throw std::invalid_argument("fit_inv_sqrt_poly: d must be >= 1");
  if (B < 1.0) throw std::invalid_argument("fit_inv_sqrt_poly: B must be >= 1");
  if (B <= 1.0 + 1e-12) {
    // Degenerate interval: p(1) = 1 is exact.
    PolyCoeffs c;
    c.beta.assign(static_cast<std::size_t>(d), 0.0);
    c.beta[0] = 1.0;
    c.B = B;
    return c;
  }

  const double mid = 0.5 * (1.0 + B);
  const double half = 0.5 * (B - 1.0);
  auto to_t = [&](double x) { return (x - mid) / half; };

  // Reference set at the Chebyshev extrema of [1, B].
  std::vector<double> ref(static_cast<std::size_t>(d) + 1);
  for (int i = 0; i <= d; ++i) ref[i] = mid - half * std::cos(kPi * i / d);

  std::vector<double> cheb(static_cast<std::size_t>(d), 0.0);
  auto residual = [&](double x) {
    return std::sqrt(x) * detail::clenshaw(cheb, to_t(x)) - 1.0;
  };

  double best_err = std::numeric_limits<double>::infinity();
  std::vector<double> best_cheb = cheb;
  double level = 0.0;
  bool converged = false;

  // Scan grid uniform in the Chebyshev angle, which clusters points where
  // the equioscillation extrema live.
  const int n_scan = std::max(4096, 64 * (d + 1));
  std::vector<double> scan_x(n_scan);
  for (int j = 0; j < n_scan; ++j) {
    scan_x[j] = mid - half * std::cos(kPi * j / (n_scan - 1));
  }

  for (int iter = 0; iter < max_iter; ++iter) {
    // Level the residual on the current reference: for i = 0..d,
    // sqrt(x_i) p(x_i) - 1 = (-1)^i h.
    RMat sys(d + 1, d + 1);
    RVec rhs(d + 1);
    for (int i = 0; i <= d; ++i) {
      const double t = to_t(ref[i]);
      double tkm1 = 1.0, tk = t;
      for (int k = 0; k < d; ++k) {
        if (k == 0) {
          sys(i, k) = 1.0;
        } else if (k == 1) {
          sys(i, k) = t;
        } else {
          const double tkp1 = 2.0 * t * tk - tkm1;
          tkm1 = tk;
          tk = tkp1;
          sys(i, k) = tk;
        }
      }
      const double w = std::sqrt(ref[i]);
      sys(i, d) = -((i % 2 == 0) ? 1.0 : -1.0) / w;
      rhs(i) = 1.0 / w;
    }
    RVec sol = sys.colPivHouseholderQr().solve(rhs);
    for (int k = 0; k < d; ++k) cheb[static_cast<std::size_t>(k)] = sol(k);
    level = std::abs(sol(d));

    // Locate the extrema of the residual.
    std::vector<detail::Extremum> cands;
    std::vector<double> ev(n_scan);
    for (int j = 0; j < n_scan; ++j) ev[j] = residual(scan_x[j]);
    constexpr double invphi = 0.6180339887498949;
    auto refine = [&](double a, double b, double sign) {
      double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
      double f1 = sign * residual(x1), f2 = sign * residual(x2);
      for (int it = 0; it < 30; ++it) {
        if (f1 < f2) {
          a = x1; x1 = x2; f1 = f2;
          x2 = a + invphi * (b - a); f2 = sign * residual(x2);
        } else {
          b = x2; x2 = x1; f2 = f1;
          x1 = b - invphi * (b - a); f1 = sign * residual(x1);
        }
      }
      const double x = f1 > f2 ? x1 : x2;
      return detail::Extremum{x, residual(x)};
    };
    cands.push_back({scan_x[0], ev[0]});
    for (int j = 1; j + 1 < n_scan; ++j) {
      const bool is_max = ev[j] >= ev[j - 1] && ev[j] >= ev[j + 1];
      const bool is_min = ev[j] <= ev[j - 1] && ev[j] <= ev[j + 1];
      if (is_max || is_min) {
        cands.push_back(refine(scan_x[j - 1], scan_x[j + 1], is_max ? 1.0 : -1.0));
      }
    }
    cands.push_back({scan_x[n_scan - 1], ev[n_scan - 1]});

    // Alternating subset: within a same-sign run keep the largest magnitude.
    std::vector<detail::Extremum> alt;
    for (const auto& c : cands) {
      if (!alt.empty() && (alt.back().e >= 0) == (c.e >= 0)) {
        if (std::abs(c.e) > std::abs(alt.back().e)) alt.back() = c;
      } else {
        alt.push_back(c);
      }
    }
    double max_err = 0.0;
    for (const auto& c : alt) max_err = std::max(max_err, std::abs(c.e));
    if (max_err < best_err) {
      best_err = max_err;
      best_cheb = cheb;
    }
    if (max_err - level <= rel_tol * std::max(max_err, 1e-300) || max_err < 1e-14) {
      converged = true;
      break;
    }
    if (static_cast<int>(alt.size()) < d + 1) break;  // exchange stalled
    while (static_cast<int>(alt.size()) > d + 1) {
      if (std::abs(alt.front().e) <= std::abs(alt.back().e)) {
        alt.erase(alt.begin());
      } else {
        alt.pop_back();
      }
    }
    for (int i = 0; i <= d; ++i) ref[i] = alt[static_cast<std::size_t>(i)].x;
  }

  PolyCoeffs out;
  out.B = B;
  out.beta = detail::cheb_to_monomial(converged ? cheb : best_cheb, B);
  out.minimax_error = detail::refined_max(
      [&](double x) { return std::abs(std::sqrt(x) * eval_poly_scalar(out, x) - 1.0); },
      1.0, B, 20001);
  out.quadratic_error = detail::refined_max(
      [&](double x) {
        const double p = eval_poly_scalar(out, x);
        return std::abs(x * p * p - 1.0);
      },
      1.0, B, 20001);
  if (!converged) {
    throw RemezFailure("fit_inv_sqrt_poly: Remez exchange did not converge", out);
  }
  return out;
}

/// P = sum_k beta[k] Q^k by Horner: exactly d-1 matrix-matrix multiplies,
/// reported through matmul_count when given.
inline CMat eval_poly_matrix(const PolyCoeffs& c, const CMat& q,
                             long* matmul_count = nullptr) {
  if (q.rows() != q.cols()) throw std::invalid_argument("eval_poly_matrix: square input");
  const Eigen::Index n = q.rows();
  long count = 0;
  CMat p = c.beta.back() * CMat::Identity(n, n);
  for (int k = c.d() - 2; k >= 0; --k) {
    p = (p * q).eval();
    ++count;
    p.diagonal().array() += c.beta[static_cast<std::size_t>(k)];
  }
  if (matmul_count) *matmul_count = count;
  return hermitize(p);
}

inline CMat eval_poly_matrix(const PolyCoeffs& c, const SpatialCovariance& qhat,
                             long* matmul_count = nullptr) {
  return eval_poly_matrix(c, qhat.matrix, matmul_count);
}

/// Grid bounds on [1, B] versus the measured matrix norms. The bounds
/// dominate the measured errors whenever spec(Q) stays inside [1, B];
/// otherwise the certificate is flagged out-of-interval.
inline ErrorCertificate certify(const PolyCoeffs& c, const SpatialCovariance& qhat,
                                int grid_size) {
  if (grid_size < 1000) throw std::invalid_argument("certify: grid_size must be >= 1000");
  ErrorCertificate cert;
  cert.grid_size = grid_size;

  auto p_of = [&](double x) { return eval_poly_scalar(c, x); };
  cert.eps1_bound = detail::refined_max(
      [&](double x) { const double p = p_of(x); return std::abs(x * p * p - 1.0); },
      1.0, c.B, grid_size);
  cert.eps2_bound = detail::refined_max(
      [&](double x) { return std::abs(p_of(x) - 1.0 / std::sqrt(x)); },
      1.0, c.B, grid_size);
  cert.eps2_bound_weighted = detail::refined_max(
      [&](double x) { return std::abs(x * p_of(x) - 1.0 / std::sqrt(x)); },
      1.0, c.B, grid_size);

  const CMat p = eval_poly_matrix(c, qhat.matrix);
  CMat t = hermitize(p * qhat.matrix * p);
  t.diagonal().array() -= 1.0;
  Eigen::SelfAdjointEigenSolver<CMat> eig_t(t, Eigen::EigenvaluesOnly);
  cert.eps1_measured = eig_t.eigenvalues().cwiseAbs().maxCoeff();

  Eigen::SelfAdjointEigenSolver<CMat> eig_q(qhat.matrix, Eigen::EigenvaluesOnly);
  double eps2 = 0.0;
  for (Eigen::Index i = 0; i < eig_q.eigenvalues().size(); ++i) {
    const double lam = eig_q.eigenvalues()[i];
    if (lam < 1.0 - 1e-9 || lam > c.B * (1.0 + 1e-12) + 1e-9) cert.out_of_interval = true;
    if (lam > 0.0) {
      eps2 = std::max(eps2, std::abs(p_of(lam) - 1.0 / std::sqrt(lam)));
    } else {
      eps2 = std::numeric_limits<double>::infinity();
      cert.out_of_interval = true;
    }
  }
  cert.eps2_measured = eps2;
  return cert;
}

namespace detail {

inline double power_iteration_lambda_max(const CMat& q, int iters = 30) {
  const Eigen::Index n = q.rows();
  if (n == 0) return 0.0;
  Rng rng(0x5EEDF00Dull, static_cast<std::uint64_t>(n));
  CVec v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = rng.cgaussian();
  v.normalize();
  for (int it = 0; it < iters; ++it) {
    CVec w = q * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return std::real(Complex(v.adjoint() * (q * v)));
}

}  // namespace detail

/// Spectral upper bound B >= lambda_max(Q): 30 power iterations with a 5%
/// safety factor, floored at 1.
inline double spectral_upper_bound(const SpatialCovariance& qhat) {
  return std::max(1.0, 1.05 * detail::power_iteration_lambda_max(qhat.matrix));
}

/// Aggregate variant: additionally floored at 1 + sum_j alpha_j * (per-user
/// lambda_max estimates), which dominates lambda_max(I + sum alpha_j Q_j).
inline double spectral_upper_bound(const SpatialCovariance& qhat,
                                   std::span<const SpatialCovariance> parts,
                                   std::span<const double> alphas) {
  if (parts.size() != alphas.size())
    throw std::invalid_argument("spectral_upper_bound: one alpha per part");
  double floor = 1.0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    floor += alphas[j] * 1.05 * detail::power_iteration_lambda_max(parts[j].matrix);
  }
  return std::max(spectral_upper_bound(qhat), floor);
}

}  // namespace ltbf
