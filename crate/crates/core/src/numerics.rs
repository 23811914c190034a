//! Special functions behind the χ² and F tail probabilities used by the
//! detector.
//!
//! The regularized incomplete gamma function is evaluated with the power
//! series below the `x < a + 1` crossover and with a Lentz continued fraction
//! above it; the regularized incomplete beta function uses the Lentz
//! continued fraction with the usual `x < (a + 1) / (a + b + 2)` reflection.

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Lanczos coefficients (g = 7, n = 9).
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// An upper-tail probability, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TailProbability(f64);

impl TailProbability {
    fn new(p: f64) -> Self {
        TailProbability(p.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<TailProbability> for f64 {
    fn from(p: TailProbability) -> f64 {
        p.0
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let g = 7.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + g + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_p requires a > 0");
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_q requires a > 0");
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta_inc requires a, b > 0");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Upper tail `P(X > x)` for `X ~ χ²(df)`.
pub fn chi2_sf(x: f64, df: u32) -> TailProbability {
    assert!(df >= 1, "chi2_sf requires df >= 1");
    if x <= 0.0 {
        return TailProbability::new(1.0);
    }
    if x.is_infinite() {
        return TailProbability::new(0.0);
    }
    TailProbability::new(gamma_q(df as f64 / 2.0, x / 2.0))
}

/// Lower tail `P(X <= x)` for `X ~ χ²(df)`.
pub fn chi2_cdf(x: f64, df: u32) -> f64 {
    assert!(df >= 1, "chi2_cdf requires df >= 1");
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma_p(df as f64 / 2.0, x / 2.0)
}

/// The `x` with `chi2_sf(x, df) == alpha`, by bisection to an absolute
/// tolerance of 1e-10.
pub fn chi2_critical(df: u32, alpha: f64) -> f64 {
    assert!(df >= 1, "chi2_critical requires df >= 1");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let mut lo = 0.0;
    let mut hi = df as f64 + 1.0;
    while chi2_sf(hi, df).value() > alpha {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid, df).value() > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper tail `P(X > x)` for `X ~ F(d1, d2)`.
pub fn f_sf(x: f64, d1: u32, d2: u32) -> TailProbability {
    assert!(
        d1 >= 1 && d2 >= 1,
        "f_sf requires positive degrees of freedom"
    );
    if x <= 0.0 {
        return TailProbability::new(1.0);
    }
    if x.is_infinite() {
        return TailProbability::new(0.0);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    let z = d2 / (d2 + d1 * x);
    TailProbability::new(beta_inc(d2 / 2.0, d1 / 2.0, z))
}

/// Lower tail `P(X <= x)` for `X ~ F(d1, d2)`.
pub fn f_cdf(x: f64, d1: u32, d2: u32) -> f64 {
    assert!(
        d1 >= 1 && d2 >= 1,
        "f_cdf requires positive degrees of freedom"
    );
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let (d1f, d2f) = (d1 as f64, d2 as f64);
    let w = d1f * x / (d1f * x + d2f);
    beta_inc(d1f / 2.0, d2f / 2.0, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20u32 {
            fact *= n as f64;
            let got = ln_gamma(n as f64 + 1.0);
            assert!(
                (got - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0),
                "n={n}"
            );
        }
        let half = ln_gamma(0.5);
        assert!((half - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn chi2_sf_endpoints() {
        assert_eq!(chi2_sf(0.0, 7).value(), 1.0);
        assert_eq!(chi2_sf(f64::INFINITY, 7).value(), 0.0);
        assert!(chi2_sf(500.0, 7).value() < 1e-90);
    }

    #[test]
    fn chi2_df2_is_exponential() {
        // χ²(2) tail is exp(-x/2)
        for &x in &[0.1, 1.0, 3.7, 12.0, 40.0] {
            let want = (-x / 2.0f64).exp();
            let got = chi2_sf(x, 2).value();
            assert!(((got - want) / want).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn critical_value_roundtrip() {
        let x = chi2_critical(7, 0.1);
        assert!((chi2_sf(x, 7).value() - 0.1).abs() < 1e-10);
    }

    #[test]
    fn f_sf_at_one_is_half_for_equal_dof() {
        for d in [1, 2, 5, 10, 30] {
            assert!((f_sf(1.0, d, d).value() - 0.5).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn f_sf_d1_1_d2_2_closed_form() {
        // F(1,2) tail: 1 - sqrt(x / (x + 2))
        for &x in &[0.3, 1.0, 5.0, 128.0] {
            let want = 1.0 - (x / (x + 2.0f64)).sqrt();
            let got = f_sf(x, 1, 2).value();
            assert!(((got - want) / want).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn complements_sum_to_one() {
        for &x in &[0.01, 0.5, 2.0, 9.0, 25.0] {
            for df in [1, 3, 7, 12] {
                let s = chi2_sf(x, df).value() + chi2_cdf(x, df);
                assert!((s - 1.0).abs() < 1e-12);
            }
            let s = f_sf(x, 3, 8).value() + f_cdf(x, 3, 8);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
