//! Incomplete gamma and beta functions, chi-square and F quantiles.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, reflection below 0.5).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    // modified Lentz
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularised lower incomplete gamma `P(a, x)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_continued_fraction(a, x)
    }
}

/// Regularised upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, accurate in
/// the far tail.
pub fn regularized_upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_continued_fraction(a, x)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    // modified Lentz
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        for an in [
            m * (b - m) * x / ((a + m2 - 1.0) * (a + m2)),
            -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0)),
        ] {
            d = 1.0 + an * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = 1.0 + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularised incomplete beta `I_x(a, b)`.
pub fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Survival function of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf(x: f64, d1: u32, d2: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    regularized_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))
}

/// Upper-tail quantile of the F distribution: the `x` with `SF(x) = tail`.
pub fn f_quantile_upper(tail: f64, d1: u32, d2: u32) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::InvalidProbability(1.0 - tail));
    }
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidArgument("F degrees of freedom must be >= 1".into()));
    }
    // SF(x) = I_y(d2/2, d1/2) with y = d2 / (d2 + d1 x), increasing in y
    let (a, b) = (0.5 * d2 as f64, 0.5 * d1 as f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..1100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if regularized_beta(a, b, mid) < tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    Ok(d2 as f64 * (1.0 - y) / (d1 as f64 * y))
}

pub fn chi2_cdf(x: f64, df: u32) -> f64 {
    regularized_lower_gamma(0.5 * df as f64, 0.5 * x)
}

pub fn chi2_sf(x: f64, df: u32) -> f64 {
    regularized_upper_gamma(0.5 * df as f64, 0.5 * x)
}

fn chi2_pdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * df as f64;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Two-sided tail mass `P(|Z| > z)` of a standard normal, i.e. the
/// chi-square(1) survival function at `z²`.
pub fn two_sided_normal_tail(z: f64) -> f64 {
    chi2_sf(z * z, 1)
}

/// Quantile of the chi-square distribution: the `x` with `CDF(x) = prob`.
pub fn chi2_quantile(prob: f64, df: u32) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidProbability(prob));
    }
    if df == 0 {
        return Err(Error::InvalidArgument("chi-square df must be >= 1".into()));
    }
    if prob <= 0.5 {
        Ok(invert(df, |x| chi2_cdf(x, df) - prob))
    } else {
        Ok(invert(df, |x| (1.0 - prob) - chi2_sf(x, df)))
    }
}

/// Quantile addressed by its upper-tail mass: the `x` with `SF(x) = tail`.
/// Keeps full relative precision for tails far below machine epsilon of 1.
pub fn chi2_quantile_upper(tail: f64, df: u32) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::InvalidProbability(1.0 - tail));
    }
    if df == 0 {
        return Err(Error::InvalidArgument("chi-square df must be >= 1".into()));
    }
    Ok(invert(df, |x| tail - chi2_sf(x, df)))
}

// Shrinks geometrically while the bracket still touches zero so that roots
// near the origin (tiny lower-tail probabilities) are reached.
fn split(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        0.5 * (lo + hi)
    } else {
        hi / 16.0
    }
}

/// Root of an increasing function `f` on `[0, ∞)` whose derivative is
/// `chi2_pdf`. Bisection to a narrow bracket, then safeguarded Newton.
fn invert(df: u32, f: impl Fn(f64) -> f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = (df as f64).max(1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        if hi - lo <= 1e-4 * hi {
            break;
        }
        let mid = split(lo, hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let deriv = chi2_pdf(x, df);
        let mut next = if deriv > 0.0 { x - fx / deriv } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = split(lo, hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}
