//! Least-squares line fits, mostly in log-log coordinates for exponents.

use alloc::format;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for an exact line or two points).
    pub slope_stderr: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::domain(format!("line fit needs ≥2 paired points, got {} and {}", n, ys.len())));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("line fit with all abscissae equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit { slope, intercept, slope_stderr, n })
}

/// Fit log y = a + s log x.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0) || !(**y > 0.0)) {
        return Err(Error::domain(format!("log-log fit needs positive data, got ({x}, {y})")));
    }
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}
