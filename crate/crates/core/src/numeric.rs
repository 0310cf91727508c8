//! Small special-function helpers shared by the kernel and the solver.

use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::ln_gamma;

/// Binomial coefficient `C(n, k)` as a float; zero outside `0 <= k <= n`.
///
/// Exact integer arithmetic is used while the value fits in `u128`, after
/// which the log-gamma form takes over.
pub fn binomial(n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k > n {
        return 0.0;
    }
    let (n, k) = (n as u64, k as u64);
    match exact_binomial(n, k) {
        Some(c) => c as f64,
        None => ln_binomial(n, k).exp(),
    }
}

fn exact_binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        // c * (n - k + i) is divisible by i at every step
        c = c.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    Some(c)
}

/// `P(X = x)` for `X` the number of tails before the `r`-th head of a fair coin.
pub fn fair_neg_binomial_pmf(x: u64, r: u64) -> f64 {
    if r == 0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    // the r-th head lands on flip x + r
    r as f64 / (x + r) as f64 * binomial_pmf(r, x + r, 0.5)
}

/// `P(Bin(n, prob) = k)`. Small `n` uses the exact coefficient; larger `n`
/// uses Loader's saddle-point expansion, accurate to a few ulps.
pub fn binomial_pmf(k: u64, n: u64, prob: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - prob;
    if prob == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        return (nf * (-prob).ln_1p()).exp();
    }
    if k == n {
        return (nf * prob.ln()).exp();
    }
    if n <= 60 {
        if let Some(c) = exact_binomial(n, k) {
            return c as f64 * prob.powi(k as i32) * q.powi((n - k) as i32);
        }
    }
    let (kf, rest) = (k as f64, (n - k) as f64);
    let lc = stirling_error(nf) - stirling_error(kf) - stirling_error(rest) - deviance(kf, nf * prob)
        - deviance(rest, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `ln(n!) - ln(sqrt(2 pi n) (n / e)^n)`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x / m) + m - x`, without cancellation when `x` is close to `m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                break;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `P(Bin(n, prob) <= m)`.
pub fn binomial_cdf(n: u64, m: i64, prob: f64) -> f64 {
    if m < 0 {
        return 0.0;
    }
    let m = m as u64;
    if m >= n {
        return 1.0;
    }
    if prob <= 0.0 {
        return 1.0;
    }
    if prob >= 1.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..=m {
        total += binomial_pmf(k, n, prob);
    }
    total.min(1.0)
}

/// `P(X > m)` for `X` the number of tails before the `r`-th head of a coin
/// whose head probability is `head_prob`: more than `m` tails precede the
/// `r`-th head iff the first `r + m` flips hold fewer than `r` heads.
pub fn neg_binomial_upper_tail(m: i64, r: u64, head_prob: f64) -> f64 {
    if m < 0 {
        return 1.0;
    }
    if r == 0 {
        return 0.0;
    }
    binomial_cdf(r + m as u64, r as i64 - 1, head_prob)
}

const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// `a^s * zeta(s, a) = sum_{k >= 0} (a / (a + k))^s` for `s > 1`, `a >= 1`.
///
/// Euler-Maclaurin after a short direct sum. The scaling keeps values of
/// order one when `a` is large.
pub fn scaled_hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0, "Hurwitz zeta diverges for s <= 1 (s = {s})");
    assert!(a >= 1.0);
    const DIRECT: usize = 24;
    let mut sum = 0.0;
    for k in (0..DIRECT).rev() {
        sum += (a / (a + k as f64)).powf(s);
    }
    let x = a + DIRECT as f64;
    let ratio_s = (a / x).powf(s);
    // x^{1-s} / (s-1) scaled by a^s
    sum += ratio_s * x / (s - 1.0);
    sum += 0.5 * ratio_s;
    let mut rising = s; // s (s+1) ... (s+2j-2)
    let mut fact = 2.0; // (2j)!
    let mut xpow = ratio_s / x; // a^s x^{-s-2j+1}
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let j = j + 1;
        sum += b / fact * rising * xpow;
        let (s2j, two_j) = (s + 2.0 * j as f64, 2.0 * j as f64);
        rising *= (s2j - 1.0) * s2j;
        fact *= (two_j + 1.0) * (two_j + 2.0);
        xpow /= x * x;
    }
    sum
}

/// Hurwitz zeta `sum_{k >= 0} (a + k)^{-s}`.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    scaled_hurwitz_zeta(s, a) * a.powf(-s)
}
