// Copyright 2026 The jlsampler Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Noncentral chi-squared distribution as a Poisson mixture of central
// chi-squared laws:
//
//   F_{k,delta}(x) = sum_j Pois(j; delta/2) * P(k/2 + j, x/2)
//
// where P is the regularized lower incomplete gamma function. All series are
// summed outward from the modal Poisson index, with log-space weights, so
// large noncentralities neither underflow nor overflow.

#ifndef JLSAMPLER_NCX2_HPP
#define JLSAMPLER_NCX2_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "jlsampler/errors.hpp"

namespace jlsampler::ncx2 {

namespace detail {

inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

// log(n!) - log(sqrt(2 pi n) (n/e)^n), Loader's Stirling remainder.
inline double stirlerr(double n) {
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  if (n <= 15.0)
    return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - kLogSqrt2Pi;
  const double nn = n * n;
  if (n > 500.0) return (s0 - s1 / nn) / n;
  if (n > 80.0) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35.0) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// x log(x/np) + np - x, evaluated without cancellation when x ~ np.
inline double bd0(double x, double np) {
  if (std::abs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

}  // namespace detail

/// log(y^a e^{-y} / Gamma(a + 1)) for a > -1 and y >= 0. This is the log of
/// the Poisson-type term that links consecutive incomplete gamma values:
/// P(a + 1, y) = P(a, y) - t(a, y).
inline double log_gamma_term(double a, double y) {
  if (y == 0.0)
    return a == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (a < 16.0) return a * std::log(y) - y - std::lgamma(a + 1.0);
  return -detail::stirlerr(a) - detail::bd0(a, y) -
         0.5 * std::log(2.0 * std::numbers::pi * a);
}

/// Both regularized incomplete gamma ratios, P = gamma(s,x)/Gamma(s) and
/// Q = 1 - P, as logarithms. Each is computed on the branch where it is the
/// accurate one and the other follows by log1p, so tiny tails keep their
/// relative precision.
struct LogGammaRatios {
  double log_lower = -std::numeric_limits<double>::infinity();
  double log_upper = 0.0;
};

namespace detail {
inline double log1mexp(double a) {
  // log(1 - e^a) for a <= 0
  if (a > -0.693147180559945309) return std::log(-std::expm1(a));
  return std::log1p(-std::exp(a));
}
}  // namespace detail

inline LogGammaRatios log_incomplete_gamma_ratios(double s, double x) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!(s > 0.0) || !std::isfinite(s))
    throw ParameterError("incomplete gamma shape must be positive, got " +
                         std::to_string(s));
  if (!(x >= 0.0)) throw ParameterError("incomplete gamma argument must be >= 0");
  if (x == 0.0) return {kNegInf, 0.0};
  if (std::isinf(x)) return {0.0, kNegInf};

  const std::size_t max_iter =
      static_cast<std::size_t>(100.0 * std::sqrt(s + x)) + 10000;
  if (x < s + 1.0) {
    // P = t(s, x) * sum_{n>=0} x^n / ((s+1)...(s+n))
    double term = 1.0;
    double sum = 1.0;
    for (std::size_t n = 1; n < max_iter; ++n) {
      term *= x / (s + static_cast<double>(n));
      sum += term;
      if (term < sum * 1e-17) {
        const double log_lower =
            std::min(0.0, log_gamma_term(s, x) + std::log(sum));
        return {log_lower, detail::log1mexp(log_lower)};
      }
    }
    throw InternalError("incomplete gamma series did not converge");
  }
  // Q = s * t(s, x) * CF, modified Lentz.
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (std::size_t i = 1; i < max_iter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) {
      const double log_upper =
          std::min(0.0, std::log(s) + log_gamma_term(s, x) + std::log(h));
      return {detail::log1mexp(log_upper), log_upper};
    }
  }
  throw InternalError("incomplete gamma continued fraction did not converge");
}

/// Regularized lower incomplete gamma gamma(s, x) / Gamma(s).
inline double reg_lower_gamma(double s, double x) {
  return std::exp(log_incomplete_gamma_ratios(s, x).log_lower);
}

/// Regularized upper incomplete gamma Gamma(s, x) / Gamma(s).
inline double reg_upper_gamma(double s, double x) {
  return std::exp(log_incomplete_gamma_ratios(s, x).log_upper);
}

/// Everything the objective needs about chi^2_k(delta) at one argument,
/// gathered in a single pass over the Poisson mixture.
struct Expansion {
  double cdf = 0.0;     // F_{k,delta}(x)
  double sf = 1.0;      // 1 - F_{k,delta}(x), summed directly
  double pdf = 0.0;     // f_{k,delta}(x)
  double pdf_k2 = 0.0;  // f_{k+2,delta}(x)
  double pdf_k4 = 0.0;  // f_{k+4,delta}(x)
  double pdf_dx = 0.0;  // d/dx f_{k,delta}(x)
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.693147180559945309417232121458;
// Relative truncation target, and the log of the magnitude below which a
// whole quantity is treated as zero.
inline constexpr double kLogRelTol = -39.14394658089878;  // log(1e-17)
inline constexpr double kLogNegligible = -700.0;

inline void validate(double x, int k, double delta) {
  if (k < 1) throw ParameterError("degrees of freedom must be >= 1");
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw ParameterError("noncentrality must be finite and >= 0");
  if (std::isnan(x)) throw ParameterError("argument is NaN");
}

inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(e^a - e^b), or -inf when b >= a.
inline double log_sub(double a, double b) {
  if (b >= a) return kNegInf;
  return a + log1mexp(b - a);
}

// Chernoff exponent for one tail of chi^2_m(delta) at x: the log of an upper
// bound on P(X <= x) when x is below the mean, or on P(X >= x) above it.
inline double log_chernoff(double x, double m, double delta) {
  const double u = (m + std::sqrt(m * m + 4.0 * x * delta)) / (2.0 * x);
  if (x < m + delta) {
    const double s = 0.5 * (u - 1.0);
    return s * x - 0.5 * m * std::log(u) - delta * s / u;
  }
  const double s = 0.5 * (1.0 - u);
  return -s * x - 0.5 * m * std::log(u) + delta * s / u;
}

// Index of the six tracked sums.
enum Slot { kCdf, kSf, kPdf, kPdf2, kPdf4, kAux, kSlots };

// One mixture index in log form. a = k/2 + j; lt_* are log t(a-1), log t(a),
// log t(a+1) with t(b) = y^b e^{-y} / Gamma(b+1), so that w p_{2a}(x) =
// w t(a-1) / 2.
struct Term {
  double log_c[kSlots];
  double aux_sign = 1.0;
};

inline Term make_term(double lw, double a, double log_p, double log_q,
                      double lt_m1, double lt, double lt_p1, double log_x) {
  Term term;
  term.log_c[kCdf] = lw + log_p;
  term.log_c[kSf] = lw + log_q;
  term.log_c[kPdf] = lw + lt_m1 - kLn2;
  term.log_c[kPdf2] = lw + lt - kLn2;
  term.log_c[kPdf4] = lw + lt_p1 - kLn2;
  // p_{2a}(x) (2a - 2) / x, which equals p_{2a-2}(x) whenever 2a - 2 > 0.
  const double factor = 2.0 * a - 2.0;
  term.aux_sign = factor < 0.0 ? -1.0 : 1.0;
  term.log_c[kAux] = factor == 0.0
                         ? kNegInf
                         : term.log_c[kPdf] + std::log(std::abs(factor)) - log_x;
  return term;
}

struct Sums {
  double value[kSlots] = {0, 0, 0, 0, 0, 0};
  void add(const Term& t) {
    for (int s = 0; s < kSlots; ++s) {
      const double c = std::exp(t.log_c[s]);
      value[s] += s == kAux ? t.aux_sign * c : c;
    }
  }
};

// Every contribution sequence is log-concave in the mixture index, so once a
// sequence decreases with ratio r it keeps decreasing at least that fast and
// its remaining tail is at most c r / (1 - r).
inline bool direction_done(const Term& prev, const Term& cur, const Sums& sums) {
  for (int s = 0; s < kSlots; ++s) {
    const double c = cur.log_c[s];
    if (c == kNegInf) continue;
    const double step = c - prev.log_c[s];
    if (!(step < 0.0)) return false;
    const double log_tail = c + step - log1mexp(step);
    if (log_tail < kLogNegligible) continue;
    const double total = std::abs(sums.value[s]);
    if (total == 0.0 || log_tail > kLogRelTol + std::log(total)) return false;
  }
  return true;
}

}  // namespace detail

/// Single pass over the Poisson mixture for chi^2_k(delta) at x.
inline Expansion expand(double x, int k, double delta) {
  using detail::kNegInf;
  detail::validate(x, k, delta);
  Expansion out;
  if (x <= 0.0) return out;  // cdf 0, sf 1, densities 0 on the open support
  if (std::isinf(x)) {
    out.cdf = 1.0;
    out.sf = 0.0;
    return out;
  }

  // Far tails: every tracked quantity is bounded by a Chernoff bound of a
  // neighbouring degree of freedom (f_{m+2} = (F_m - F_{m+2}) / 2 and its
  // upper-tail mirror), so when that bound is below exp(-700) the lower-tail
  // quantities are exactly representable as zero.
  if (k >= 5 && x < (k - 4) + delta &&
      detail::log_chernoff(x, k - 4.0, delta) < detail::kLogNegligible) {
    return out;
  }
  // For k < 5 the terms j = 0, 1 are split off: their weights sum to
  // e^{-lambda} (1 + lambda) and, for x >= 1, each tracked quantity of them is
  // at most 8. The rest is a degree k + 4 mixture whose weights exceed the
  // shifted Poisson weights by at most lambda^2.
  if (k < 5 && delta > 2.0 && x >= 1.0 && x < k + delta) {
    const double lambda = 0.5 * delta;
    const double head = -lambda + std::log1p(lambda) + std::log(8.0);
    const double rest = detail::log_chernoff(x, k, delta) + 2.0 * std::log(lambda);
    if (std::max(head, rest) < detail::kLogNegligible) return out;
  }
  if (x > (k + 4) + delta &&
      detail::log_chernoff(x, k + 4.0, delta) < detail::kLogNegligible) {
    out.cdf = 1.0;
    out.sf = 0.0;
    return out;
  }

  const double y = 0.5 * x;
  const double log_x = std::log(x);
  const double log_y = std::log(y);
  const double lambda = 0.5 * delta;
  const double log_lambda = lambda > 0.0 ? std::log(lambda) : 0.0;
  const double a0 = 0.5 * k;
  auto log_weight = [&](double j) {
    return lambda > 0.0 ? log_gamma_term(j, lambda) : (j == 0.0 ? 0.0 : kNegInf);
  };

  const double j_mode = std::floor(lambda);
  const double a_mode = a0 + j_mode;
  const LogGammaRatios start = log_incomplete_gamma_ratios(a_mode, y);
  const double lw_mode = log_weight(j_mode);
  const double lt_mode_m1 = log_gamma_term(a_mode - 1.0, y);
  const double lt_mode = log_gamma_term(a_mode, y);
  const double lt_mode_p1 = log_gamma_term(a_mode + 1.0, y);

  detail::Sums sums;
  const detail::Term mode_term =
      detail::make_term(lw_mode, a_mode, start.log_lower, start.log_upper,
                        lt_mode_m1, lt_mode, lt_mode_p1, log_x);
  sums.add(mode_term);

  const std::size_t max_steps =
      static_cast<std::size_t>(80.0 * std::sqrt(lambda + 1.0)) + 4000;
  constexpr std::size_t kResync = 64;

  // Upward: P(a+1) = P(a) - t(a), Q(a+1) = Q(a) + t(a).
  if (lambda > 0.0) {
    double log_p = start.log_lower, log_q = start.log_upper;
    double lw = lw_mode;
    double lt_m1 = lt_mode_m1, lt = lt_mode, lt_p1 = lt_mode_p1;
    double j = j_mode;
    detail::Term prev = mode_term;
    for (std::size_t step = 1;; ++step) {
      log_p = detail::log_sub(log_p, lt);
      log_q = std::min(0.0, detail::log_add(log_q, lt));
      j += 1.0;
      const double a = a0 + j;
      if (step % kResync == 0) {
        lw = log_weight(j);
        lt_m1 = log_gamma_term(a - 1.0, y);
        lt = log_gamma_term(a, y);
      } else {
        lw += log_lambda - std::log(j);
        lt_m1 = lt;
        lt = lt_p1;
      }
      lt_p1 = lt + log_y - std::log(a + 1.0);
      const detail::Term cur =
          detail::make_term(lw, a, log_p, log_q, lt_m1, lt, lt_p1, log_x);
      sums.add(cur);
      if (detail::direction_done(prev, cur, sums)) break;
      if (step >= max_steps)
        throw InternalError("noncentral chi-squared series did not converge");
      prev = cur;
    }
  }

  // Downward: P(a-1) = P(a) + t(a-1), Q(a-1) = Q(a) - t(a-1).
  if (j_mode > 0.0) {
    double log_p = start.log_lower, log_q = start.log_upper;
    double lw = lw_mode;
    double lt_m1 = lt_mode_m1, lt = lt_mode, lt_p1 = lt_mode_p1;
    double j = j_mode;
    detail::Term prev = mode_term;
    for (std::size_t step = 1; j > 0.0; ++step) {  // at most j_mode steps
      log_p = std::min(0.0, detail::log_add(log_p, lt_m1));
      log_q = detail::log_sub(log_q, lt_m1);
      lw -= log_lambda - std::log(j);
      j -= 1.0;
      const double a = a0 + j;
      lt_p1 = lt;
      lt = lt_m1;
      const bool resync = step % kResync == 0;
      if (resync) {
        lw = log_weight(j);
        lt = log_gamma_term(a, y);
        lt_p1 = log_gamma_term(a + 1.0, y);
      }
      // t(a-1) = t(a) a / y; small shapes go through lgamma directly.
      lt_m1 = (!resync && a - 1.0 >= 16.0) ? lt + std::log(a) - log_y
                                           : log_gamma_term(a - 1.0, y);
      const detail::Term cur =
          detail::make_term(lw, a, log_p, log_q, lt_m1, lt, lt_p1, log_x);
      sums.add(cur);
      if (detail::direction_done(prev, cur, sums)) break;
      prev = cur;
    }
  }

  for (double v : sums.value)
    if (std::isnan(v)) throw InternalError("noncentral chi-squared series produced NaN");

  out.cdf = std::clamp(sums.value[detail::kCdf], 0.0, 1.0);
  out.sf = std::clamp(sums.value[detail::kSf], 0.0, 1.0);
  out.pdf = sums.value[detail::kPdf];
  out.pdf_k2 = sums.value[detail::kPdf2];
  out.pdf_k4 = sums.value[detail::kPdf4];
  out.pdf_dx = 0.5 * (sums.value[detail::kAux] - sums.value[detail::kPdf]);
  return out;
}

/// F_{k,delta}(x).
inline double cdf(double x, int k, double delta) {
  detail::validate(x, k, delta);
  if (x < 0.0) throw ParameterError("ncx2 cdf argument must be >= 0");
  return expand(x, k, delta).cdf;
}

/// 1 - F_{k,delta}(x), without forming the difference.
inline double sf(double x, int k, double delta) {
  detail::validate(x, k, delta);
  if (x < 0.0) throw ParameterError("ncx2 sf argument must be >= 0");
  return expand(x, k, delta).sf;
}

/// f_{k,delta}(x). Zero for x < 0; at x = 0 the limit of the density.
inline double pdf(double x, int k, double delta) {
  detail::validate(x, k, delta);
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (k == 1) return std::numeric_limits<double>::infinity();
    if (k == 2) return 0.5 * std::exp(-0.5 * delta);
    return 0.0;
  }
  return expand(x, k, delta).pdf;
}

/// dF_{k,delta}(x) / d delta = -F_{k,delta}(x)/2 + F_{k+2,delta}(x)/2.
/// Evaluated through the equivalent form -f_{k+2,delta}(x), which avoids
/// subtracting two CDFs that agree to many digits.
inline double cdf_ddelta(double x, int k, double delta) {
  detail::validate(x, k, delta);
  if (x < 0.0) throw ParameterError("ncx2 argument must be >= 0");
  if (x == 0.0) return 0.0;
  return -expand(x, k, delta).pdf_k2;
}

}  // namespace jlsampler::ncx2

#endif  // JLSAMPLER_NCX2_HPP
