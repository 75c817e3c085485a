//! Special functions not provided by libm.

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Laguerre polynomial L_n(x) by the three-term recurrence
/// (k+1)L_{k+1} = (2k+1−x)L_k − k L_{k−1}. Stable where the explicit
/// factorial sum overflows (n≈50, x≈40).
pub fn laguerre(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

pub fn artanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}
