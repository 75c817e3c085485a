//! Driven-dissipative steady states.
//!
//! Three pieces: the mean-field Rabi model with photon loss, the Gaussian
//! covariance of the field in the lower spin manifold when both photon loss
//! (κ) and spin decay (Γ) act, and the cumulant-closed mean-field system of
//! the two-photon Dicke model with photon loss, spin decay Γ↓ and dephasing
//! Γφ.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DVector, Matrix2};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::gaussian::{qfi_one_mode_xp, OneModeQfi};
use crate::linalg::{self, RMat, C64};
use crate::ode;

/// Eigenvalues whose real part lies within this margin of zero are marginal.
pub const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationRates {
    pub kappa: f64,
    pub gamma_down: f64,
    pub gamma_phi: f64,
}

impl DissipationRates {
    pub fn new(kappa: f64, gamma_down: f64, gamma_phi: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !(gamma_down >= 0.0) || !(gamma_phi >= 0.0) {
            return Err(Error::domain(format!("rates must be ≥ 0; got κ={kappa}, Γ↓={gamma_down}, Γφ={gamma_phi}")));
        }
        Ok(DissipationRates { kappa, gamma_down, gamma_phi })
    }

    /// Γ' = 2Γφ + Γ↓/2, the transverse spin damping.
    pub fn gamma_prime(&self) -> f64 {
        2.0 * self.gamma_phi + 0.5 * self.gamma_down
    }
}

/// Spectrum of a linearisation and its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Stability {
    pub eigenvalues: Vec<C64>,
    pub max_re: f64,
    /// max Re < −margin.
    pub stable: bool,
    /// |max Re| ≤ margin: neither verdict is trustworthy.
    pub marginal: bool,
}

pub fn stability_of(m: &RMat) -> Stability {
    let eigenvalues = linalg::eigenvalues_general(m);
    let max_re = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Stability { eigenvalues, max_re, stable: max_re < -STABILITY_MARGIN, marginal: max_re.abs() <= STABILITY_MARGIN }
}

/// Central-difference Jacobian with step h.
fn fd_jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64], h: f64) -> RMat {
    let n = x.len();
    let mut j = RMat::zeros(n, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        xp[c] = x[c] + h;
        let fp = f(&xp);
        xp[c] = x[c] - h;
        let fm = f(&xp);
        xp[c] = x[c];
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

// ---------------------------------------------------------------------------
// Rabi model with photon loss, mean field

/// g_t^D = √(ωΩ/4)·√(1 + κ²/ω²).
pub fn rabi_dissipative_threshold(omega: f64, omega_q: f64, kappa: f64) -> f64 {
    (omega * omega_q / 4.0).sqrt() * (1.0 + (kappa / omega).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiFixedPoint {
    /// ⟨a⟩
    pub alpha: C64,
    /// ⟨σ⁺⟩ (real at every fixed point).
    pub s_plus: f64,
    pub s_z: f64,
    pub superradiant: bool,
    pub stability: Stability,
}

/// Mean-field flow of (Re⟨a⟩, Im⟨a⟩, Re⟨σ⁺⟩, Im⟨σ⁺⟩) with the spin on the
/// lower Bloch hemisphere, ⟨σz⟩ = −√(1 − 4|⟨σ⁺⟩|²). The closed first-moment
/// equations conserve ⟨σz⟩² + 4|⟨σ⁺⟩|²; fixing it to 1 removes the zero mode
/// that direction would add to every Jacobian.
pub fn rabi_mf_rhs(y: &[f64], omega: f64, omega_q: f64, g: f64, kappa: f64) -> Vec<f64> {
    let (ar, ai, sr, si) = (y[0], y[1], y[2], y[3]);
    let sz = -(1.0 - 4.0 * (sr * sr + si * si)).max(0.0).sqrt();
    alloc::vec![
        -kappa * ar + omega * ai,
        -omega * ar - kappa * ai - 2.0 * g * sr,
        -omega_q * si,
        omega_q * sr - 2.0 * g * ar * sz,
    ]
}

/// Fixed points {0, ±α_g^D} and their stability from the finite-difference
/// Jacobian (step 1e-7) of [`rabi_mf_rhs`].
pub fn rabi_dissipative_mean_field(omega: f64, omega_q: f64, g: f64, kappa: f64) -> Result<Vec<RabiFixedPoint>> {
    if !(omega > 0.0) || !(omega_q > 0.0) || !(g >= 0.0) || !(kappa >= 0.0) {
        return Err(Error::domain(format!("need ω, Ω > 0, g, κ ≥ 0; got {omega}, {omega_q}, {g}, {kappa}")));
    }
    let rhs = |y: &[f64]| rabi_mf_rhs(y, omega, omega_q, g, kappa);
    let point = |alpha: C64, s: f64| {
        let y = [alpha.re, alpha.im, s, 0.0];
        let stability = stability_of(&fd_jacobian(rhs, &y, 1e-7));
        RabiFixedPoint {
            alpha,
            s_plus: s,
            s_z: -(1.0 - 4.0 * s * s).max(0.0).sqrt(),
            superradiant: alpha.norm() > 0.0,
            stability,
        }
    };
    let mut out = alloc::vec![point(C64::new(0.0, 0.0), 0.0)];
    let gt = rabi_dissipative_threshold(omega, omega_q, kappa);
    if g > gt {
        let root = (1.0 - (gt / g).powi(4)).sqrt();
        let amp = C64::new(g / omega * root, 0.0) / C64::new(1.0, -kappa / omega);
        for sign in [1.0, -1.0] {
            out.push(point(amp * sign, -sign * 0.5 * root));
        }
    }
    for p in &out {
        let r = rhs(&[p.alpha.re, p.alpha.im, p.s_plus, 0.0]);
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res > 1e-10 * (1.0 + omega + omega_q + g) {
            return Err(Error::numerical(format!("Rabi fixed point residual {res:.3e}")));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rabi model field covariance with photon loss and spin decay

/// Field covariance in (x, p) with vacuum ½·1, inside the lower spin
/// manifold, valid for η → ∞ with Γ = O(Ω) and κ = O(ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiCovarianceParams {
    pub omega: f64,
    pub omega_q: f64,
    pub g: f64,
    pub kappa: f64,
    /// Spin decay Γ.
    pub gamma: f64,
}

impl RabiCovarianceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0)
            || !(self.omega_q > 0.0)
            || !(self.g >= 0.0)
            || !(self.kappa > 0.0)
            || !(self.gamma >= 0.0)
        {
            return Err(Error::domain(format!("need ω, Ω, κ > 0 and g, Γ ≥ 0; got {self:?}")));
        }
        Ok(())
    }

    /// P = Ω²/(Γ² + Ω²).
    pub fn p_factor(&self) -> f64 {
        self.omega_q.powi(2) / (self.gamma.powi(2) + self.omega_q.powi(2))
    }

    pub fn g_p(&self) -> f64 {
        (self.omega * self.omega_q).sqrt() / 2.0
    }

    /// g_p^D = g_p√((1 + Γ²/Ω²)(1 + κ²/ω²)).
    pub fn g_p_dissipative(&self) -> f64 {
        self.g_p() * ((1.0 + (self.gamma / self.omega_q).powi(2)) * (1.0 + (self.kappa / self.omega).powi(2))).sqrt()
    }

    /// P g²/g_p² − 1; the eigenvalues μ± are real when this is ≥ 0.
    pub fn branch(&self) -> f64 {
        self.p_factor() * (self.g / self.g_p()).powi(2) - 1.0
    }

    pub fn e_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(0.0, self.omega, self.omega * self.branch(), 0.0)
    }

    pub fn sigma_l(&self) -> Matrix2<f64> {
        let l2 = (self.g / self.g_p()).powi(2);
        let c = self.p_factor() * self.gamma * self.omega * l2 / (self.omega_q * self.kappa);
        Matrix2::new(0.5, 0.0, 0.0, 0.5 * (1.0 + c))
    }

    /// Slowest relaxation rate: μ̃₊ = 2κ − 2ω√(Pg²/g_p² − 1) on the real
    /// branch, 2κ (oscillating) otherwise.
    pub fn slowest_rate(&self) -> f64 {
        let b = self.branch();
        if b >= 0.0 {
            2.0 * self.kappa - 2.0 * self.omega * b.sqrt()
        } else {
            2.0 * self.kappa
        }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_omega_q(mut self, omega_q: f64) -> Self {
        self.omega_q = omega_q;
        self
    }

    /// Whether Γ ≲ 10Ω and κ ≲ 10ω, the regime the elimination assumes.
    pub fn within_assumptions(&self) -> bool {
        self.gamma <= 10.0 * self.omega_q && self.kappa <= 10.0 * self.omega
    }
}

/// dσ/dt = Eσ + σEᵀ − 2κ(σ − σᴸ).
pub fn covariance_ode_rhs(sigma: &Matrix2<f64>, p: &RabiCovarianceParams) -> Matrix2<f64> {
    let e = p.e_matrix();
    e * sigma + sigma * e.transpose() - (sigma - p.sigma_l()) * (2.0 * p.kappa)
}

/// Expansion σ = Σ mᵢ Mᵢ over the eigenmatrices of σ ↦ Eσ + σEᵀ on the
/// real branch; entries ordered (M₀, M₁, M₊, M₋).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenmatrixExpansion {
    pub m_l: [f64; 4],
    pub mu: [f64; 4],
    pub mu_tilde: [f64; 4],
}

impl EigenmatrixExpansion {
    pub fn basis(r: f64) -> [Matrix2<f64>; 4] {
        [
            Matrix2::new(0.0, 1.0, -1.0, 0.0),
            Matrix2::new(1.0 / r, 0.0, 0.0, -r),
            Matrix2::new(1.0 / r, 1.0, 1.0, r),
            Matrix2::new(1.0 / r, -1.0, -1.0, r),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSteadyState {
    pub sigma: Matrix2<f64>,
    /// Direct solve of the 3×3 linear system for the symmetric entries.
    pub sigma_lyapunov: Matrix2<f64>,
    /// ½diag(1, 1 − (g²P/2g_p²)(1 − ωΓ/Ωκ)) + g²/(4(g_p^D² − g²))(1 + ωΓ/Ωκ)[[1, κ/ω], [κ/ω, κ²/ω²]].
    pub sigma_explicit: Matrix2<f64>,
    /// Present on the real branch, where `sigma` is built from it.
    pub expansion: Option<EigenmatrixExpansion>,
    pub slowest_rate: f64,
    pub within_assumptions: bool,
}

fn lyapunov_steady(p: &RabiCovarianceParams) -> Result<Matrix2<f64>> {
    // Unknowns (σxx, σxp, σpp); each column is the image of a unit symmetric matrix.
    let unit = [Matrix2::new(1.0, 0.0, 0.0, 0.0), Matrix2::new(0.0, 1.0, 1.0, 0.0), Matrix2::new(0.0, 0.0, 0.0, 1.0)];
    let e = p.e_matrix();
    let mut a = RMat::zeros(3, 3);
    for (c, s) in unit.iter().enumerate() {
        let img = e * s + s * e.transpose() - s * (2.0 * p.kappa);
        a[(0, c)] = img[(0, 0)];
        a[(1, c)] = img[(0, 1)];
        a[(2, c)] = img[(1, 1)];
    }
    let sl = p.sigma_l() * (-2.0 * p.kappa);
    let x = linalg::solve_real(&a, &DVector::from_vec(alloc::vec![sl[(0, 0)], sl[(0, 1)], sl[(1, 1)]]))?;
    Ok(Matrix2::new(x[0], x[1], x[1], x[2]))
}

fn explicit_steady(p: &RabiCovarianceParams) -> Matrix2<f64> {
    let l2 = (p.g / p.g_p()).powi(2);
    let c = p.omega * p.gamma / (p.omega_q * p.kappa);
    let gd = p.g_p_dissipative();
    let k = p.kappa / p.omega;
    let base = Matrix2::new(0.5, 0.0, 0.0, 0.5 * (1.0 - 0.5 * l2 * p.p_factor() * (1.0 - c)));
    let amp = p.g * p.g / (4.0 * (gd * gd - p.g * p.g)) * (1.0 + c);
    base + Matrix2::new(1.0, k, k, k * k) * amp
}

/// Steady covariance. Built from the eigenmatrix expansion on the real
/// branch and from the explicit closed form otherwise; both are checked
/// against the direct linear solve.
pub fn covariance_steady_state(p: &RabiCovarianceParams) -> Result<CovarianceSteadyState> {
    p.validate()?;
    let gd = p.g_p_dissipative();
    if p.g >= gd {
        return Err(Error::domain(format!(
            "g = {} ≥ g_p^D = {gd}: the slowest mode μ̃₊ = {} no longer decays",
            p.g,
            p.slowest_rate()
        )));
    }
    let sigma_lyapunov = lyapunov_steady(p)?;
    let sigma_explicit = explicit_steady(p);
    let b = p.branch();
    let (sigma, expansion) = if b > 1e-12 {
        let r = b.sqrt();
        let pl2 = p.p_factor() * (p.g / p.g_p()).powi(2);
        let c = p.omega * p.gamma / (p.omega_q * p.kappa);
        let m1 = (pl2 * (1.0 - c) - 2.0) / (4.0 * r);
        let mpm = pl2 / (8.0 * r) * (1.0 + c);
        let mu_pm = 2.0 * p.omega * r;
        let mu = [0.0, 0.0, mu_pm, -mu_pm];
        let mu_tilde = mu.map(|m| 2.0 * p.kappa - m);
        let m_l = [0.0, m1, mpm, mpm];
        let basis = EigenmatrixExpansion::basis(r);
        let mut s = Matrix2::zeros();
        for i in 0..4 {
            s += basis[i] * (m_l[i] * 2.0 * p.kappa / mu_tilde[i]);
        }
        (s, Some(EigenmatrixExpansion { m_l, mu, mu_tilde }))
    } else {
        (sigma_explicit, None)
    };
    let scale = sigma_lyapunov.norm();
    for (name, other) in [("explicit", &sigma_explicit), ("returned", &sigma)] {
        let d = (other - sigma_lyapunov).norm();
        if d > 1e-9 * scale {
            return Err(Error::numerical(format!(
                "{name} steady covariance deviates from the linear solve by {d:.3e}"
            )));
        }
    }
    Ok(CovarianceSteadyState {
        sigma,
        sigma_lyapunov,
        sigma_explicit,
        expansion,
        slowest_rate: p.slowest_rate(),
        within_assumptions: p.within_assumptions(),
    })
}

fn pack(s: &Matrix2<f64>) -> DVector<f64> {
    DVector::from_vec(alloc::vec![s[(0, 0)], s[(0, 1)], s[(1, 1)]])
}

fn unpack(y: &DVector<f64>) -> Matrix2<f64> {
    Matrix2::new(y[0], y[1], y[1], y[2])
}

/// Covariance at each of `times` (non-decreasing, from t = 0), starting
/// from σ₀. RK4 with step 0.02/max(ω, κ, |Eᵢⱼ|); the implicit trapezoidal
/// rule with step control once κ/ω > 20.
pub fn integrate_covariance(
    p: &RabiCovarianceParams,
    sigma0: &Matrix2<f64>,
    times: &[f64],
) -> Result<Vec<Matrix2<f64>>> {
    p.validate()?;
    let rhs = |_: f64, y: &DVector<f64>| pack(&covariance_ode_rhs(&unpack(y), p));
    let stiff = p.kappa / p.omega > 20.0;
    let e = p.e_matrix();
    let scale = p.omega.max(p.kappa).max(e[(1, 0)].abs()).max(e[(0, 1)].abs());
    let mut y = pack(sigma0);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &tk in times {
        if tk < t {
            return Err(Error::domain("integration times must be non-decreasing and non-negative"));
        }
        if tk > t {
            y = if stiff {
                ode::trapezoid_adaptive(rhs, y, t, tk, 0.1 / scale, 1e-12)?
            } else {
                let n = ((tk - t) * scale / 0.02).ceil() as usize;
                ode::rk4(rhs, y, t, tk, n)
            };
            t = tk;
        }
        out.push(unpack(&y));
    }
    Ok(out)
}

/// Late-time decay rate of ‖σ(t) − σ_ss‖ from the vacuum, read between
/// 8 and 16 slowest-mode lifetimes.
pub fn measured_relaxation_rate(p: &RabiCovarianceParams) -> Result<f64> {
    let ss = covariance_steady_state(p)?;
    let tau = 1.0 / ss.slowest_rate;
    let (t1, t2) = (8.0 * tau, 16.0 * tau);
    let traj = integrate_covariance(p, &(Matrix2::identity() * 0.5), &[t1, t2])?;
    let d1 = (traj[0] - ss.sigma).norm();
    let d2 = (traj[1] - ss.sigma).norm();
    if !(d2 > 0.0) {
        return Err(Error::numerical("relaxation signal vanished before the fit window"));
    }
    Ok((d1 / d2).ln() / (t2 - t1))
}

/// QFI for Ω of the steady state (σ̇ by central difference in Ω at fixed Γ,
/// relative step 1e-6). `squeezing_term` is the purity-blind form
/// ν²Tr[(σ⁻¹σ̇)²]/(2(ν²+1)).
pub fn dissipative_qfi(p: &RabiCovarianceParams) -> Result<OneModeQfi> {
    let s = covariance_steady_state(p)?.sigma;
    let h = 1e-6 * p.omega_q;
    let sp = covariance_steady_state(&p.with_omega_q(p.omega_q + h))?.sigma;
    let sm = covariance_steady_state(&p.with_omega_q(p.omega_q - h))?.sigma;
    qfi_one_mode_xp(&s, &((sp - sm) / (2.0 * h)))
}

/// τ ≈ (1/2κ)·g_p^D/(g_p^D − g)·κ²/(κ² + ω²), the inverse of the near-
/// threshold slowest rate.
pub fn dissipative_duration(p: &RabiCovarianceParams) -> f64 {
    let gd = p.g_p_dissipative();
    let k2 = p.kappa * p.kappa;
    gd / (gd - p.g) * k2 / (k2 + p.omega * p.omega) / (2.0 * p.kappa)
}

/// ((Γ² − Ω²)/(Γ² + Ω²))²·(κ²/2Ω²)·(1 + ω²/κ²)², the leading I/τ².
pub fn dissipative_prefactor(p: &RabiCovarianceParams) -> f64 {
    let (g2, o2) = (p.gamma.powi(2), p.omega_q.powi(2));
    ((g2 - o2) / (g2 + o2)).powi(2) * p.kappa.powi(2) / (2.0 * o2) * (1.0 + (p.omega / p.kappa).powi(2)).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativeScalingPoint {
    pub g: f64,
    pub g_over_gpd: f64,
    pub tau: f64,
    pub qfi: f64,
    pub qfi_squeezing_term: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeScaling {
    pub points: Vec<DissipativeScalingPoint>,
    pub fit: LineFit,
    pub predicted_prefactor: f64,
}

/// Steady-state QFI against duration for g = r·g_p^D, r ∈ `ratios` (each in
/// (0, 1)); `base.g` is ignored.
pub fn dissipative_qfi_scaling(base: &RabiCovarianceParams, ratios: &[f64]) -> Result<DissipativeScaling> {
    let gd = base.g_p_dissipative();
    let mut points = Vec::with_capacity(ratios.len());
    for &r in ratios {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!("g/g_p^D must lie in (0, 1), got {r}")));
        }
        let p = base.with_g(r * gd);
        let q = dissipative_qfi(&p)?;
        points.push(DissipativeScalingPoint {
            g: p.g,
            g_over_gpd: r,
            tau: dissipative_duration(&p),
            qfi: q.value,
            qfi_squeezing_term: q.squeezing_term,
            nu: q.nu,
        });
    }
    let fit = loglog_fit(
        &points.iter().map(|p| p.tau).collect::<Vec<_>>(),
        &points.iter().map(|p| p.qfi).collect::<Vec<_>>(),
    )?;
    Ok(DissipativeScaling { points, fit, predicted_prefactor: dissipative_prefactor(base) })
}

// ---------------------------------------------------------------------------
// Two-photon Dicke model, cumulant-closed mean field

/// (⟨X⟩, ⟨Y⟩, ⟨a†a⟩, ⟨Jx⟩, ⟨Jy⟩, ⟨Jz⟩) with X = a² + a†², Y = i(a†² − a²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldVector {
    pub x: f64,
    pub y: f64,
    pub n_phot: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl MeanFieldVector {
    pub fn normal(n: f64) -> Self {
        MeanFieldVector { x: 0.0, y: 0.0, n_phot: 0.0, jx: 0.0, jy: 0.0, jz: -n / 2.0 }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.n_phot, self.jx, self.jy, self.jz]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        MeanFieldVector { x: v[0], y: v[1], n_phot: v[2], jx: v[3], jy: v[4], jz: v[5] }
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// n ≥ 0, |Jᵢ| ≤ N/2 and |J|² ≤ (N/2)(N/2 + 1), each to 1e-9.
    pub fn is_physical(&self, n: f64) -> bool {
        let h = n / 2.0 + 1e-9;
        self.n_phot >= -1e-9
            && self.jx.abs() <= h
            && self.jy.abs() <= h
            && self.jz.abs() <= h
            && self.jx * self.jx + self.jy * self.jy + self.jz * self.jz <= (n / 2.0) * (n / 2.0 + 1.0) + 1e-9
    }

    /// (X, Y, Jx, Jy) → −(X, Y, Jx, Jy).
    pub fn mirrored(&self) -> Self {
        MeanFieldVector { x: -self.x, y: -self.y, jx: -self.jx, jy: -self.jy, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonParams {
    pub omega: f64,
    pub omega_q: f64,
    /// Collective coupling (single-qubit coupling g/√N).
    pub g: f64,
    pub n: usize,
    pub rates: DissipationRates,
}

impl TwoPhotonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.omega_q > 0.0) || !(self.g >= 0.0) || self.n == 0 {
            return Err(Error::domain(format!("need ω, Ω > 0, g ≥ 0, N ≥ 1; got {self:?}")));
        }
        DissipationRates::new(self.rates.kappa, self.rates.gamma_down, self.rates.gamma_phi).map(|_| ())
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// g_p^D = √((1/8)(2ω + κ²/2ω)(2Ω + Γ'²/2Ω)).
    pub fn g_p_dissipative(&self) -> f64 {
        let (w, o, k, gp) = (self.omega, self.omega_q, self.rates.kappa, self.rates.gamma_prime());
        ((2.0 * w + k * k / (2.0 * w)) * (2.0 * o + gp * gp / (2.0 * o)) / 8.0).sqrt()
    }

    /// Z = ωΓ'/(2ΩNΓ↓); infinite when Γ↓ = 0.
    pub fn z(&self) -> f64 {
        self.omega * self.rates.gamma_prime() / (2.0 * self.omega_q * self.nf() * self.rates.gamma_down)
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }
}

pub fn two_photon_mf_rhs(v: &MeanFieldVector, p: &TwoPhotonParams) -> MeanFieldVector {
    let (w, o, g) = (p.omega, p.omega_q, p.g);
    let (k, gd, gpr) = (p.rates.kappa, p.rates.gamma_down, p.rates.gamma_prime());
    let n = p.nf();
    let s = n.sqrt();
    MeanFieldVector {
        x: -k * v.x + 2.0 * w * v.y,
        y: -k * v.y - 2.0 * w * v.x - 8.0 * g * v.jx / s - 16.0 * g * v.jx / s * v.n_phot,
        n_phot: -4.0 * g * v.jx / s * v.y - k * v.n_phot,
        jx: -2.0 * o * v.jy - gpr * v.jx,
        jy: 2.0 * o * v.jx - gpr * v.jy - 2.0 * g / s * v.jz * v.x,
        jz: 2.0 * g / s * v.jy * v.x - gd * v.jz - gd * n / 2.0,
    }
}

/// Why the superradiant pair is or is not returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuperradiantStatus {
    Present,
    /// The ⟨Jz⟩ discriminant or ⟨Jx⟩² is negative.
    Complex,
    /// Γ↓ = 0: the Z → ∞ limit of the closed form, ⟨Jz⟩ = −(N/2)(g_p^D/g)²,
    /// has ⟨Jx⟩ = 0 and so lies on the line of trivial fixed points.
    DegenerateAtZeroDecay {
        jz_limit: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonSteadyStates {
    pub normal: MeanFieldVector,
    /// The ± pair, ⟨Jx⟩ > 0 first.
    pub superradiant: Vec<MeanFieldVector>,
    pub status: SuperradiantStatus,
    /// ‖RHS‖ per returned state, normal first.
    pub residuals: Vec<f64>,
}

/// Normal point and the closed-form superradiant pair, every returned state
/// verified to ‖RHS‖ ≤ 1e-8·N.
pub fn two_photon_steady_states(p: &TwoPhotonParams) -> Result<TwoPhotonSteadyStates> {
    p.validate()?;
    let n = p.nf();
    let (w, o, g) = (p.omega, p.omega_q, p.g);
    let (k, gpr) = (p.rates.kappa, p.rates.gamma_prime());
    let gd = p.g_p_dissipative();
    let normal = MeanFieldVector::normal(n);
    let mut superradiant = Vec::new();
    let status = if g == 0.0 {
        SuperradiantStatus::Complex
    } else if p.rates.gamma_down == 0.0 {
        SuperradiantStatus::DegenerateAtZeroDecay { jz_limit: -n / 2.0 * (gd / g).powi(2) }
    } else {
        let z = p.z();
        let half = 0.5 * (1.0 + z);
        let disc = half * half - z * (gd / g).powi(2);
        let jz = n / 2.0 * (-half + disc.max(0.0).sqrt());
        let jx2 = n / 4.0 * (k * k + 4.0 * w * w) / (16.0 * g * g) + w * o / (4.0 * o * o + gpr * gpr) * jz;
        if disc < 0.0 || jx2 < 0.0 {
            SuperradiantStatus::Complex
        } else {
            for sign in [1.0, -1.0] {
                let jx = sign * jx2.sqrt();
                // ω_c in the source's ⟨X⟩ denominator is read as ω.
                let x = 4.0 * g * w * n.sqrt() * jx / (-n / 4.0 * (k * k + 4.0 * w * w) + 16.0 * g * g * jx * jx);
                let y = k / (2.0 * w) * x;
                let n_phot = -4.0 * g / (k * n.sqrt()) * jx * y;
                let jy = -gpr / (2.0 * o) * jx;
                superradiant.push(MeanFieldVector { x, y, n_phot, jx, jy, jz });
            }
            SuperradiantStatus::Present
        }
    };
    let mut residuals = Vec::with_capacity(1 + superradiant.len());
    for v in core::iter::once(&normal).chain(superradiant.iter()) {
        let r = two_photon_mf_rhs(v, p).norm();
        if r > 1e-8 * n {
            return Err(Error::numerical(format!("two-photon steady state residual {r:.3e} exceeds 1e-8·N")));
        }
        residuals.push(r);
    }
    Ok(TwoPhotonSteadyStates { normal, superradiant, status, residuals })
}

/// Linearisation about the normal point, entry by entry as derived by hand.
pub fn m_normal(p: &TwoPhotonParams) -> RMat {
    let (w, o, g) = (p.omega, p.omega_q, p.g);
    let (k, gd, gpr) = (p.rates.kappa, p.rates.gamma_down, p.rates.gamma_prime());
    let s = p.nf().sqrt();
    #[rustfmt::skip]
    let m = RMat::from_row_slice(6, 6, &[
        -k, 2.0 * w, 0.0, 0.0, 0.0, 0.0,
        -2.0 * w, -k, 0.0, -8.0 * g / s, 0.0, 0.0,
        0.0, 0.0, -k, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, -gpr, -2.0 * o, 0.0,
        g * s, 0.0, 0.0, 2.0 * o, -gpr, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, -gd,
    ]);
    m
}

/// Linearisation about a superradiant point v.
pub fn m_superradiant(v: &MeanFieldVector, p: &TwoPhotonParams) -> RMat {
    let (w, o, g) = (p.omega, p.omega_q, p.g);
    let (k, gd, gpr) = (p.rates.kappa, p.rates.gamma_down, p.rates.gamma_prime());
    let s = p.nf().sqrt();
    #[rustfmt::skip]
    let m = RMat::from_row_slice(6, 6, &[
        -k, 2.0 * w, 0.0, 0.0, 0.0, 0.0,
        -2.0 * w, -k, -16.0 * g / s * v.jx, -8.0 * g / s * (1.0 + 2.0 * v.n_phot), 0.0, 0.0,
        0.0, -4.0 * g / s * v.jx, -k, -4.0 * g / s * v.y, 0.0, 0.0,
        0.0, 0.0, 0.0, -gpr, -2.0 * o, 0.0,
        -2.0 * g / s * v.jz, 0.0, 0.0, 2.0 * o, -gpr, -2.0 * g / s * v.x,
        2.0 * g / s * v.jy, 0.0, 0.0, 0.0, 2.0 * g / s * v.x, -gd,
    ]);
    m
}

/// Central-difference Jacobian of [`two_photon_mf_rhs`] at v (step 1e-7).
pub fn two_photon_fd_jacobian(v: &MeanFieldVector, p: &TwoPhotonParams) -> RMat {
    fd_jacobian(|y| two_photon_mf_rhs(&MeanFieldVector::from_slice(y), p).to_array().to_vec(), &v.to_array(), 1e-7)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DissipativePhase {
    Normal,
    Superradiant,
    Bistable,
    Instability,
}

impl DissipativePhase {
    pub fn letter(self) -> char {
        match self {
            DissipativePhase::Normal => 'N',
            DissipativePhase::Superradiant => 'S',
            DissipativePhase::Bistable => 'B',
            DissipativePhase::Instability => 'I',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub label: DissipativePhase,
    pub max_re_normal: f64,
    /// None when the superradiant pair does not exist.
    pub max_re_superradiant: Option<f64>,
    pub superradiant_physical: Option<bool>,
    /// Some verdict had |max Re| within the stability margin.
    pub marginal: bool,
}

pub fn classify_phase(p: &TwoPhotonParams) -> Result<PhasePoint> {
    let st = two_photon_steady_states(p)?;
    let normal = stability_of(&m_normal(p));
    // The mirrored partner has the same spectrum; one suffices.
    let sr = st.superradiant.first().map(|v| (stability_of(&m_superradiant(v, p)), v.is_physical(p.nf())));
    let sr_stable = sr.as_ref().is_some_and(|(s, _)| s.stable);
    let label = match (normal.stable, sr_stable) {
        (true, true) => DissipativePhase::Bistable,
        (true, false) => DissipativePhase::Normal,
        (false, true) => DissipativePhase::Superradiant,
        (false, false) => DissipativePhase::Instability,
    };
    Ok(PhasePoint {
        label,
        max_re_normal: normal.max_re,
        max_re_superradiant: sr.as_ref().map(|(s, _)| s.max_re),
        superradiant_physical: sr.as_ref().map(|(_, ph)| *ph),
        marginal: normal.marginal || sr.as_ref().is_some_and(|(s, _)| s.marginal),
    })
}

/// Grid in the (g, Ω) plane at fixed ω, rates and N.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramSpec {
    pub omega: f64,
    pub n: usize,
    pub rates: DissipationRates,
    pub g_range: (f64, f64),
    pub g_steps: usize,
    pub omega_q_range: (f64, f64),
    pub omega_q_steps: usize,
}

impl PhaseDiagramSpec {
    fn axis(r: (f64, f64), steps: usize) -> Result<Vec<f64>> {
        if steps < 2 || !r.0.is_finite() || !r.1.is_finite() || !(r.1 > r.0) {
            return Err(Error::domain(format!("grid axis needs finite lo < hi and ≥ 2 steps, got {r:?} × {steps}")));
        }
        Ok((0..steps).map(|i| r.0 + (r.1 - r.0) * i as f64 / (steps - 1) as f64).collect())
    }

    pub fn g_values(&self) -> Result<Vec<f64>> {
        Self::axis(self.g_range, self.g_steps)
    }

    pub fn omega_q_values(&self) -> Result<Vec<f64>> {
        Self::axis(self.omega_q_range, self.omega_q_steps)
    }

    pub fn params(&self, g: f64, omega_q: f64) -> TwoPhotonParams {
        TwoPhotonParams { omega: self.omega, omega_q, g, n: self.n, rates: self.rates }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub g_values: Vec<f64>,
    pub omega_q_values: Vec<f64>,
    /// Row-major: index = i_Ω·len(g) + i_g.
    pub points: Vec<PhasePoint>,
}

impl PhaseDiagram {
    pub fn at(&self, i_omega_q: usize, i_g: usize) -> &PhasePoint {
        &self.points[i_omega_q * self.g_values.len() + i_g]
    }

    /// Fraction of grid points where the superradiant pair is stable.
    pub fn superradiant_stable_fraction(&self) -> f64 {
        let k = self
            .points
            .iter()
            .filter(|p| matches!(p.label, DissipativePhase::Superradiant | DissipativePhase::Bistable))
            .count();
        k as f64 / self.points.len() as f64
    }
}

pub fn phase_diagram(spec: &PhaseDiagramSpec) -> Result<PhaseDiagram> {
    let g_values = spec.g_values()?;
    let omega_q_values = spec.omega_q_values()?;
    let mut points = Vec::with_capacity(g_values.len() * omega_q_values.len());
    for &o in &omega_q_values {
        for &g in &g_values {
            points.push(classify_phase(&spec.params(g, o))?);
        }
    }
    Ok(PhaseDiagram { g_values, omega_q_values, points })
}

/// Smallest Γ (with Γ↓ = Γφ = Γ) on `gammas` (ascending) from which the
/// superradiant pair stays stable to the end of the scan, refined by
/// bisection to 1e-6. None if it is unstable at the last Γ.
pub fn superradiant_stability_onset(base: &TwoPhotonParams, gammas: &[f64]) -> Result<Option<f64>> {
    let stable_at = |gm: f64| -> Result<bool> {
        let p = TwoPhotonParams { rates: DissipationRates::new(base.rates.kappa, gm, gm)?, ..*base };
        let st = two_photon_steady_states(&p)?;
        Ok(st.superradiant.first().is_some_and(|v| stability_of(&m_superradiant(v, &p)).stable))
    };
    let flags = gammas.iter().map(|&gm| stable_at(gm)).collect::<Result<Vec<_>>>()?;
    if !flags.last().copied().unwrap_or(false) {
        return Ok(None);
    }
    let first = flags.iter().rposition(|f| !f).map_or(0, |i| i + 1);
    if first == 0 {
        return Ok(Some(gammas[0]));
    }
    let (mut lo, mut hi) = (gammas[first - 1], gammas[first]);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if stable_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Forward integration of the mean-field system to each of `times` (from
/// t = 0); RK4, or the implicit trapezoidal rule once κ/ω > 20.
pub fn integrate_mean_field(v0: &MeanFieldVector, p: &TwoPhotonParams, times: &[f64]) -> Result<Vec<MeanFieldVector>> {
    p.validate()?;
    let rhs = |_: f64, y: &DVector<f64>| {
        DVector::from_row_slice(&two_photon_mf_rhs(&MeanFieldVector::from_slice(y.as_slice()), p).to_array())
    };
    let stiff = p.rates.kappa / p.omega > 20.0;
    let scale = [p.omega, p.omega_q, p.rates.kappa, p.rates.gamma_prime(), p.rates.gamma_down, p.g]
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    let mut y = DVector::from_row_slice(&v0.to_array());
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &tk in times {
        if tk < t {
            return Err(Error::domain("integration times must be non-decreasing and non-negative"));
        }
        if tk > t {
            y = if stiff {
                ode::trapezoid_adaptive(rhs, y, t, tk, 0.1 / scale, 1e-10)?
            } else {
                let n = ((tk - t) * 2.0 * scale / 0.01).ceil() as usize;
                ode::rk4(rhs, y, t, tk, n)
            };
            t = tk;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::convergence(format!("mean-field trajectory diverged before t = {tk}")));
            }
        }
        out.push(MeanFieldVector::from_slice(y.as_slice()));
    }
    Ok(out)
}
