#![allow(dead_code)]

use num_rational::Ratio;

pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Ratio::new(n, d)
}

/// `P(j tails before head number i + 1)` by a forward pass over the flips:
/// `heads[h]` is the chance of `h` heads among the flips made so far.
pub fn brute_transition(p: &[f64], i: usize, j: usize) -> f64 {
    let head = |n: usize| if n < p.len() { p[n] } else { 0.5 };
    let flips = i + j;
    let mut heads = vec![0.0; flips + 2];
    heads[0] = 1.0;
    for n in 0..flips {
        let h = head(n);
        for k in (0..=n + 1).rev() {
            let from_tail = heads[k] * (1.0 - h);
            let from_head = if k > 0 { heads[k - 1] * h } else { 0.0 };
            heads[k] = from_tail + from_head;
        }
    }
    heads[i] * head(flips)
}

/// Exact speed interval for three cookies, in rationals.
pub struct ExactBounds {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub pi0_lower: Q,
    pub pi0_upper: Q,
    pub v_lower: Q,
    pub v_upper: Q,
}

pub fn exact_bounds(p1: Q, p2: Q, p3: Q) -> ExactBounds {
    let one = q(1, 1);
    let two = q(2, 1);
    let d2 = two * p2 - one;
    let d3 = two * p3 - one;
    let delta = two * (p1 + p2 + p3) - q(3, 1);
    let a = p1 * (d2 + d3) + p2 * d3 * (one - p1);
    let b = d3 * p1 * p2;
    let c = delta - one;
    let p11 = (one - p1) * p2 * p3 + p1 * (one - p2) * p3;
    let pi0_lower = c * p1 * p2 / (b * (one - p1) + a * p1 * p2);
    let pi0_upper = c / (b * (one - p1) * p2 / (one - p11) + a);
    let s = p1 + p2 + p3;
    let f1 = two * s - q(5, 1);
    let f2 = q(9, 1) + q(8, 1) * (p1 * p2 + p1 * p3 + p2 * p3) - q(10, 1) * s;
    let f3 = two * d3 * (p1 + p2 - q(3, 1) * p1 * p2);
    ExactBounds {
        a,
        b,
        c,
        pi0_lower,
        pi0_upper,
        v_lower: f1 / (f2 + f3 * pi0_lower),
        v_upper: f1 / (f2 + f3 * pi0_upper),
    }
}

pub fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}
