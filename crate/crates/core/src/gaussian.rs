//! Gaussian states in the complex ordering (a₁…a_q, a₁†…a_q†).
//!
//! The covariance matrix is σᵢⱼ = ⟨{ΔAᵢ, ΔAⱼ†}⟩ (vacuum ↦ identity) and the
//! displacement is d = (γ, γ*). Symplectic matrices satisfy M K M† = K with
//! K = diag(1_q, −1_q); a passive mode transformation u acts as diag(u, u*).
//!
//! Phase estimation is always for a channel e^{−iφĜ} with Ĝ = Σ aᵢ† hᵢⱼ aⱼ.
//! The interferometer channel used for the two-mode advantage has h = σ_y,
//! i.e. Ĝ = 2J_y in Schwinger notation.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, expm, max_abs, re, CMat, CVec, C64, I};

/// Tolerance on ν ≥ 1 and on the conjugation structure.
const PHYS_TOL: f64 = 1e-10;
/// Relative spread of symplectic eigenvalues tolerated as "isotropic".
const ISO_TOL: f64 = 1e-8;

fn expi(x: f64) -> C64 {
    c(x.cos(), x.sin())
}

fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_row_slice(entries))
}

// ---------------------------------------------------------------------------
// Symplectic building blocks

pub fn symplectic_form(q: usize) -> CMat {
    CMat::from_fn(2 * q, 2 * q, |i, j| {
        if i != j {
            re(0.0)
        } else if i < q {
            re(1.0)
        } else {
            re(-1.0)
        }
    })
}

/// Phase shift of mode 1: a₁ → e^{−iφ}a₁.
pub fn r1(phi: f64) -> CMat {
    diag(&[expi(-phi), re(1.0), expi(phi), re(1.0)])
}

pub fn r2(phi: f64) -> CMat {
    diag(&[re(1.0), expi(-phi), re(1.0), expi(phi)])
}

/// Beam splitter a₁ → cos θ a₁ + sin θ a₂, a₂ → −sin θ a₁ + cos θ a₂.
pub fn beam_splitter(theta: f64) -> CMat {
    let (s, co) = theta.sin_cos();
    let mut m = CMat::zeros(4, 4);
    for k in [0, 2] {
        m[(k, k)] = re(co);
        m[(k, k + 1)] = re(s);
        m[(k + 1, k)] = re(-s);
        m[(k + 1, k + 1)] = re(co);
    }
    m
}

fn squeeze_on(mode: usize, xi: f64) -> CMat {
    let mut m = CMat::identity(4, 4);
    let (ch, sh) = (xi.cosh(), xi.sinh());
    m[(mode, mode)] = re(ch);
    m[(mode + 2, mode + 2)] = re(ch);
    m[(mode, mode + 2)] = re(-sh);
    m[(mode + 2, mode)] = re(-sh);
    m
}

/// Single-mode squeezer on mode 1, a₁ → cosh ξ a₁ − sinh ξ a₁†; mode 2
/// untouched.
pub fn s1(xi: f64) -> CMat {
    squeeze_on(0, xi)
}

pub fn s2(xi: f64) -> CMat {
    squeeze_on(1, xi)
}

/// Antisymmetric phase shift R₁(ψ)R₂(−ψ).
pub fn r_as(psi: f64) -> CMat {
    r1(psi) * r2(-psi)
}

/// max |M K M† − K|.
pub fn symplectic_defect(m: &CMat) -> f64 {
    let k = symplectic_form(m.nrows() / 2);
    max_abs(&(m * &k * m.adjoint() - &k))
}

/// Phase-space matrix diag(u, u*) of a passive mode transformation.
pub fn mode_symplectic(u: &CMat) -> CMat {
    let q = u.nrows();
    let mut m = CMat::zeros(2 * q, 2 * q);
    m.view_mut((0, 0), (q, q)).copy_from(u);
    m.view_mut((q, q), (q, q)).copy_from(&u.map(|z| z.conj()));
    m
}

/// Pauli matrix k ∈ {0: x, 1: y, 2: z} as a two-mode generator.
pub fn pauli(k: usize) -> CMat {
    match k {
        0 => CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]),
        1 => CMat::from_row_slice(2, 2, &[re(0.0), -I, I, re(0.0)]),
        _ => CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]),
    }
}

/// Mode matrix of the interferometer generator (2J_y).
pub fn interferometer_generator() -> CMat {
    pauli(1)
}

/// Passive two-mode operation R_z(a)R_x(b)R_z(c) with half-angle
/// convention: R_z(x) is the antisymmetric phase shift by x/2 and R_x(x) the
/// beam splitter by x/2, so the angles are rotation angles on the sphere of
/// generators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EulerAngles {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// 2×2 mode matrix u (a → u a).
    pub fn mode_matrix(&self) -> CMat {
        let z = |x: f64| diag(&[expi(-0.5 * x), expi(0.5 * x)]);
        let (s, co) = (0.5 * self.b).sin_cos();
        let x = CMat::from_row_slice(2, 2, &[re(co), re(s), re(-s), re(co)]);
        z(self.a) * x * z(self.c)
    }

    /// Unit vector n with u† σ_y u = n·σ. Estimating the interferometer phase
    /// after this operation is the same as estimating a rotation about n on
    /// the input state.
    pub fn generator_direction(&self) -> [f64; 3] {
        let (sa, ca) = self.a.sin_cos();
        let (sb, cb) = self.b.sin_cos();
        let (sc, cc) = self.c.sin_cos();
        [sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, -sa * sb]
    }

    /// Angles realising a given unit direction (b = π/2 branch).
    pub fn towards(n: [f64; 3]) -> Self {
        let a = -n[2].clamp(-1.0, 1.0).asin();
        let c = n[0].atan2(n[1]);
        Self { a, b: FRAC_PI_2, c }
    }
}

// ---------------------------------------------------------------------------
// States

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub q: usize,
    pub sigma: CMat,
    pub d: CVec,
}

impl GaussianState {
    /// Validates Hermiticity, the (a, a†) conjugation structure and ν ≥ 1.
    pub fn new(q: usize, sigma: CMat, d: CVec) -> Result<Self> {
        if q == 0 || sigma.nrows() != 2 * q || sigma.ncols() != 2 * q || d.len() != 2 * q {
            return Err(Error::InvalidDimension(format!(
                "q={q} needs a {0}x{0} covariance and a length-{0} displacement, got {1}x{2} and {3}",
                2 * q,
                sigma.nrows(),
                sigma.ncols(),
                d.len()
            )));
        }
        if sigma.iter().chain(d.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("non-finite entry in Gaussian state"));
        }
        let scale = max_abs(&sigma).max(1.0);
        let herm = max_abs(&(&sigma - sigma.adjoint()));
        if herm > 1e-12 * scale {
            return Err(Error::Unphysical(format!("covariance not Hermitian (defect {herm:.2e})")));
        }
        let a = sigma.view((0, 0), (q, q));
        let b = sigma.view((0, q), (q, q));
        let a2 = sigma.view((q, q), (q, q));
        let b2 = sigma.view((q, 0), (q, q));
        let block = (a.map(|z| z.conj()) - a2).camax().max((b.map(|z| z.conj()) - b2).camax());
        if block > 1e-12 * scale {
            return Err(Error::Unphysical(format!(
                "covariance breaks the [[A,B],[B*,A*]] structure (defect {block:.2e})"
            )));
        }
        let dscale = d.camax().max(1.0);
        let dconj = (0..q).map(|i| (d[i].conj() - d[q + i]).norm()).fold(0.0, f64::max);
        if dconj > 1e-12 * dscale {
            return Err(Error::Unphysical(format!("displacement halves are not conjugate (defect {dconj:.2e})")));
        }
        let s = Self { q, sigma, d };
        let nus = s.symplectic_eigenvalues()?;
        if nus[0] < 1.0 - PHYS_TOL {
            return Err(Error::Unphysical(format!("symplectic eigenvalue {:.12} below 1", nus[0])));
        }
        Ok(s)
    }

    pub fn vacuum(q: usize) -> Self {
        Self { q, sigma: CMat::identity(2 * q, 2 * q), d: CVec::zeros(2 * q) }
    }

    pub fn thermal(q: usize, nu: f64) -> Result<Self> {
        if !(nu >= 1.0 - PHYS_TOL) {
            return Err(Error::Unphysical(format!("thermal state needs nu >= 1, got {nu}")));
        }
        Ok(Self { q, sigma: CMat::identity(2 * q, 2 * q) * re(nu), d: CVec::zeros(2 * q) })
    }

    /// γ, the first half of d.
    pub fn gamma(&self) -> CVec {
        self.d.rows(0, self.q).into_owned()
    }

    /// Symplectic eigenvalues, ascending, one per mode.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.sigma)
    }

    /// Common symplectic eigenvalue of an isotropic state.
    pub fn isotropic_nu(&self) -> Result<f64> {
        let nus = self.symplectic_eigenvalues()?;
        let (lo, hi) = (nus[0], nus[nus.len() - 1]);
        if hi - lo > ISO_TOL * hi {
            return Err(Error::domain(format!("state is not isotropic: symplectic eigenvalues span [{lo}, {hi}]")));
        }
        Ok(nus.iter().sum::<f64>() / nus.len() as f64)
    }

    /// (MσM†, Md). No validation: M is trusted to be symplectic.
    pub fn transformed(&self, m: &CMat) -> Self {
        Self { q: self.q, sigma: m * &self.sigma * m.adjoint(), d: m * &self.d }
    }

    pub fn apply_passive(&self, u: &CMat) -> Self {
        self.transformed(&mode_symplectic(u))
    }
}

/// |eigenvalues| of Kσ, computed from the Hermitian similar matrix
/// σ^{1/2}Kσ^{1/2}, paired by absolute value.
pub fn symplectic_eigenvalues(sigma: &CMat) -> Result<Vec<f64>> {
    let n = sigma.nrows();
    let q = n / 2;
    let e = eigh(sigma)?;
    if e.values[0] <= 0.0 {
        return Err(Error::Unphysical(format!("covariance not positive definite (eigenvalue {:.3e})", e.values[0])));
    }
    let root = CVec::from_iterator(n, e.values.iter().map(|v| re(v.sqrt())));
    let half = &e.vectors * CMat::from_diagonal(&root) * e.vectors.adjoint();
    let h = &half * symplectic_form(q) * &half;
    let h = (&h + h.adjoint()) * re(0.5);
    let v = eigh(&h)?.values;
    // Negative half ascending in |.| is the reverse of the first q values.
    let mut out: Vec<f64> = (0..q).map(|i| 0.5 * (v[q + i] - v[q - 1 - i])).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// ⟨N⟩ = ¼Tr σ − q/2 + |d|²/2.
pub fn mean_photon_number(s: &GaussianState) -> f64 {
    0.25 * s.sigma.trace().re - 0.5 * s.q as f64 + 0.5 * s.d.norm_squared()
}

// ---------------------------------------------------------------------------
// Williamson parameterisation of isotropic two-mode states

/// σ = ν G G† with G = R₁(φ₁)R₂(φ₂)B(θ)R_as(Ψ)S₁(ξ₁)S₂(ξ₂) and
/// γ = |γ|(e^{−iφ_d1} cos l, e^{−iφ_d2} sin l).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilliamsonParams {
    pub nu: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub theta: f64,
    pub psi: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub gamma_abs: f64,
    pub l: f64,
    pub phi_d1: f64,
    pub phi_d2: f64,
}

impl Default for WilliamsonParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            phi1: 0.0,
            phi2: 0.0,
            theta: 0.0,
            psi: 0.0,
            xi1: 0.0,
            xi2: 0.0,
            gamma_abs: 0.0,
            l: 0.0,
            phi_d1: 0.0,
            phi_d2: 0.0,
        }
    }
}

impl WilliamsonParams {
    pub fn symplectic(&self) -> CMat {
        r1(self.phi1) * r2(self.phi2) * beam_splitter(self.theta) * r_as(self.psi) * s1(self.xi1) * s2(self.xi2)
    }

    pub fn gamma(&self) -> [C64; 2] {
        let (sl, cl) = self.l.sin_cos();
        [expi(-self.phi_d1) * (self.gamma_abs * cl), expi(-self.phi_d2) * (self.gamma_abs * sl)]
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.nu,
            self.phi1,
            self.phi2,
            self.theta,
            self.psi,
            self.xi1,
            self.xi2,
            self.gamma_abs,
            self.l,
            self.phi_d1,
            self.phi_d2,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite Williamson parameter"));
        }
        if self.nu < 1.0 - PHYS_TOL {
            return Err(Error::Unphysical(format!("nu = {} < 1", self.nu)));
        }
        if self.gamma_abs < 0.0 {
            return Err(Error::domain("|gamma| must be non-negative"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<GaussianState> {
        self.validate()?;
        let g = self.symplectic();
        let sigma = &g * g.adjoint() * re(self.nu);
        let sigma = (&sigma + sigma.adjoint()) * re(0.5);
        let [g1, g2] = self.gamma();
        let d = CVec::from_row_slice(&[g1, g2, g1.conj(), g2.conj()]);
        Ok(GaussianState { q: 2, sigma, d })
    }

    /// Recovers parameters from an isotropic two-mode state. Squeezing comes
    /// out non-negative; the passive part is fixed up to the usual gauge
    /// (θ ∈ [0, π/2], Ψ = 0 when θ is 0 or π/2, arbitrary phases when there
    /// is no squeezing).
    pub fn decompose(s: &GaussianState) -> Result<Self> {
        if s.q != 2 {
            return Err(Error::InvalidDimension(format!("Williamson parameters describe two modes, got q={}", s.q)));
        }
        let nu = s.isotropic_nu()?;
        if nu < 1.0 - PHYS_TOL {
            return Err(Error::Unphysical(format!("nu = {nu} < 1")));
        }
        let m = &s.sigma / re(nu);
        // σ/ν = [[u C u†, −u D uᵀ], …] with C = cosh 2ξ, D = sinh 2ξ.
        let w = -m.view((0, 2), (2, 2)).into_owned();
        let w = (&w + w.transpose()) * re(0.5);
        let (u, dvals) = takagi2(&w)?;
        let xi = [0.5 * dvals[0].asinh(), 0.5 * dvals[1].asinh()];

        let (theta, phi1, phi2, psi) = passive_angles(&u);
        let g1 = s.d[0];
        let g2 = s.d[1];
        let gamma_abs = (g1.norm_sqr() + g2.norm_sqr()).sqrt();
        let p = Self {
            nu,
            phi1,
            phi2,
            theta,
            psi,
            xi1: xi[0],
            xi2: xi[1],
            gamma_abs,
            l: g2.norm().atan2(g1.norm()),
            phi_d1: -g1.arg(),
            phi_d2: -g2.arg(),
        };
        let rebuilt = p.build()?;
        let err = max_abs(&(&rebuilt.sigma - &s.sigma)) / max_abs(&s.sigma).max(1.0);
        let derr = (&rebuilt.d - &s.d).camax() / s.d.camax().max(1.0);
        if err > 1e-9 || derr > 1e-9 {
            return Err(Error::numerical(format!(
                "Williamson decomposition did not reproduce the state (sigma {err:.2e}, d {derr:.2e})"
            )));
        }
        Ok(p)
    }
}

/// Takagi factorisation of a complex symmetric 2×2 matrix, W = u D uᵀ with u
/// unitary and D ≥ 0. Built from the SVD W = UΣV†: Q = U†V* is symmetric,
/// unitary and commutes with Σ, and u = U Q^{1/2}.
fn takagi2(w: &CMat) -> Result<(CMat, [f64; 2])> {
    if max_abs(w) < 1e-300 {
        return Ok((CMat::identity(2, 2), [0.0, 0.0]));
    }
    let svd = w.clone().svd(true, true);
    let (us, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(Error::numerical("SVD failed in Takagi factorisation")),
    };
    let sv = [svd.singular_values[0], svd.singular_values[1]];
    let q = us.adjoint() * vt.transpose();
    let q = (&q + q.transpose()) * re(0.5);
    let root = symmetric_unitary_sqrt(&q)?;
    Ok((us * root, sv))
}

/// Principal square root of a symmetric unitary 2×2 matrix. Its real and
/// imaginary parts commute, so a real orthogonal O diagonalises both.
fn symmetric_unitary_sqrt(q: &CMat) -> Result<CMat> {
    let x = q.map(|z| z.re);
    let y = q.map(|z| z.im);
    for alpha in [0.5377, -1.913, 3.17] {
        let mix = nalgebra::Matrix2::new(
            x[(0, 0)] + alpha * y[(0, 0)],
            x[(0, 1)] + alpha * y[(0, 1)],
            x[(1, 0)] + alpha * y[(1, 0)],
            x[(1, 1)] + alpha * y[(1, 1)],
        );
        let e = SymmetricEigen::new(mix);
        let o = CMat::from_fn(2, 2, |i, j| re(e.eigenvectors[(i, j)]));
        let dq = o.transpose() * q * &o;
        if dq[(0, 1)].norm() < 1e-10 && dq[(1, 0)].norm() < 1e-10 {
            let r = diag(&[dq[(0, 0)].sqrt(), dq[(1, 1)].sqrt()]);
            return Ok(&o * r * o.transpose());
        }
    }
    Err(Error::numerical("could not diagonalise the Takagi phase matrix"))
}

/// Angles (θ, φ₁, φ₂, Ψ) with u = diag(e^{−iφ₁}, e^{−iφ₂})·b(θ)·diag(e^{−iΨ}, e^{iΨ}).
fn passive_angles(u: &CMat) -> (f64, f64, f64, f64) {
    let (c0, s0) = (u[(0, 0)].norm(), u[(0, 1)].norm());
    let theta = s0.atan2(c0);
    if s0 < 1e-12 {
        (0.0, -u[(0, 0)].arg(), -u[(1, 1)].arg(), 0.0)
    } else if c0 < 1e-12 {
        (FRAC_PI_2, -u[(0, 1)].arg(), -(-u[(1, 0)]).arg(), 0.0)
    } else {
        let (a00, a01, a11) = (u[(0, 0)].arg(), u[(0, 1)].arg(), u[(1, 1)].arg());
        let psi = 0.5 * (a01 - a00);
        (theta, -a00 - psi, psi - a11, psi)
    }
}

// ---------------------------------------------------------------------------
// Quantum Fisher information

/// Isotropic-state QFI with both equivalent squeezing forms exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicQfi {
    pub value: f64,
    /// −Tr[(Kσ̇)²]/(2(1+ν²))
    pub trace_form: f64,
    /// ν²Tr[(σ⁻¹σ̇)²]/(2(1+ν²))
    pub inverse_form: f64,
    /// 2ḋ†σ⁻¹ḋ
    pub displacement: f64,
    pub nu: f64,
}

/// QFI of an isotropic Gaussian family under a channel that keeps ν fixed.
pub fn qfi_isotropic(sigma: &CMat, d: &CVec, sigma_dot: &CMat, d_dot: &CVec) -> Result<IsotropicQfi> {
    let n = sigma.nrows();
    if n % 2 != 0 || sigma_dot.shape() != sigma.shape() || d.len() != n || d_dot.len() != n {
        return Err(Error::InvalidDimension("inconsistent QFI inputs".into()));
    }
    let nus = symplectic_eigenvalues(sigma)?;
    let (lo, hi) = (nus[0], nus[nus.len() - 1]);
    if hi - lo > ISO_TOL * hi {
        return Err(Error::domain(format!("isotropic QFI needs equal symplectic eigenvalues, got [{lo}, {hi}]")));
    }
    let nu = nus.iter().sum::<f64>() / nus.len() as f64;
    let k = symplectic_form(n / 2);
    let inv = sigma.clone().try_inverse().ok_or_else(|| Error::numerical("singular covariance"))?;
    let ks = &k * sigma_dot;
    let trace_form = -(&ks * &ks).trace().re / (2.0 * (1.0 + nu * nu));
    let is = &inv * sigma_dot;
    let inverse_form = nu * nu * (&is * &is).trace().re / (2.0 * (1.0 + nu * nu));
    if (trace_form - inverse_form).abs() > 1e-9 * trace_form.abs().max(1.0) {
        return Err(Error::numerical(format!(
            "isotropic QFI forms disagree ({trace_form} vs {inverse_form}); the channel probably changes nu"
        )));
    }
    let _ = d;
    let displacement = 2.0 * d_dot.dotc(&(&inv * d_dot)).re;
    Ok(IsotropicQfi { value: trace_form + displacement, trace_form, inverse_form, displacement, nu })
}

/// (σ̇, ḋ) at φ = 0 for the channel e^{−iφĜ}, Ĝ = Σ aᵢ† hᵢⱼ aⱼ.
pub fn generator_derivatives(s: &GaussianState, h: &CMat) -> (CMat, CVec) {
    let q = s.q;
    let mut x = CMat::zeros(2 * q, 2 * q);
    x.view_mut((0, 0), (q, q)).copy_from(&(h * (-I)));
    x.view_mut((q, q), (q, q)).copy_from(&(h.map(|z| z.conj()) * I));
    let sd = &x * &s.sigma + &s.sigma * x.adjoint();
    (sd, &x * &s.d)
}

pub fn qfi_under_generator(s: &GaussianState, h: &CMat) -> Result<IsotropicQfi> {
    let (sd, dd) = generator_derivatives(s, h);
    qfi_isotropic(&s.sigma, &s.d, &sd, &dd)
}

/// F with F_kl the QFI bilinear form for generators σ_k, σ_l. The QFI for
/// generator n·σ is nᵀFn.
pub fn pauli_fisher_matrix(s: &GaussianState) -> Result<Matrix3<f64>> {
    if s.q != 2 {
        return Err(Error::InvalidDimension("Pauli generators act on two modes".into()));
    }
    let nu = s.isotropic_nu()?;
    let k = symplectic_form(2);
    let inv = s.sigma.clone().try_inverse().ok_or_else(|| Error::numerical("singular covariance"))?;
    let der: Vec<(CMat, CVec)> = (0..3).map(|i| generator_derivatives(s, &pauli(i))).collect();
    let mut f = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let sq = -(&k * &der[i].0 * &k * &der[j].0).trace().re / (2.0 * (1.0 + nu * nu));
            let dp = 2.0 * der[i].1.dotc(&(&inv * &der[j].1)).re;
            f[(i, j)] = sq + dp;
            f[(j, i)] = sq + dp;
        }
    }
    Ok(f)
}

/// Finite-temperature quantum limit 4⟨N⟩/ν + 2q(1−ν)/ν: the QFI of an
/// isotropic displaced thermal state with the same ⟨N⟩ and ν.
pub fn ftql(n_mean: f64, nu: f64, q: usize) -> f64 {
    4.0 * n_mean / nu + 2.0 * q as f64 * (1.0 - nu) / nu
}

/// QFI of a zero-mean one-mode family whose ν may change with the
/// parameter, split into its squeezing and purity parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneModeQfi {
    pub value: f64,
    /// ν²Tr[(σ⁻¹σ̇)²]/(2(1+ν²))
    pub squeezing_term: f64,
    /// 2ν̇²/(ν⁴−1); zero for a pure family.
    pub purity_term: f64,
    pub nu: f64,
    pub nu_dot: f64,
}

/// Same quantity from the real (x, p) covariance with vacuum ½·1, so
/// ν = 2√det σ and ν̇ = ν Tr(σ⁻¹σ̇)/2.
pub fn qfi_one_mode_xp(sigma: &Matrix2<f64>, sigma_dot: &Matrix2<f64>) -> Result<OneModeQfi> {
    let det = sigma.determinant();
    if !(det > 0.0) || (sigma[(0, 1)] - sigma[(1, 0)]).abs() > PHYS_TOL * sigma.norm() {
        return Err(Error::Unphysical(format!("covariance not symmetric positive: det = {det}")));
    }
    let nu = 2.0 * det.sqrt();
    if nu < 1.0 - PHYS_TOL {
        return Err(Error::Unphysical(format!("symplectic eigenvalue {nu} < 1")));
    }
    let inv = sigma.try_inverse().ok_or_else(|| Error::numerical("singular covariance"))?;
    let m = inv * sigma_dot;
    let squeezing_term = nu * nu * (m * m).trace() / (2.0 * (1.0 + nu * nu));
    let nu_dot = 0.5 * nu * m.trace();
    let purity_term = if nu - 1.0 > PHYS_TOL { 2.0 * nu_dot * nu_dot / (nu.powi(4) - 1.0) } else { 0.0 };
    Ok(OneModeQfi { value: squeezing_term + purity_term, squeezing_term, purity_term, nu, nu_dot })
}

// ---------------------------------------------------------------------------
// One mode

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OneModeParams {
    pub nu: f64,
    pub xi: f64,
    pub phi: f64,
    pub gamma_abs: f64,
    pub phi_d: f64,
}

/// Phase-shift QFI of a displaced squeezed thermal mode:
/// 4ν²sinh²(2ξ)/(ν²+1) + (4|γ|²/ν)(e^{2ξ}cos²(φ−φ_d) + e^{−2ξ}sin²(φ−φ_d)).
/// φ_d is measured from the anti-squeezed axis; see [`one_mode_state`].
pub fn qfi_one_mode(p: &OneModeParams) -> f64 {
    let (nu, xi) = (p.nu, p.xi);
    let delta = p.phi - p.phi_d;
    4.0 * nu * nu / (nu * nu + 1.0) * (2.0 * xi).sinh().powi(2)
        + 4.0 * p.gamma_abs.powi(2) / nu
            * ((2.0 * xi).exp() * delta.cos().powi(2) + (-2.0 * xi).exp() * delta.sin().powi(2))
}

/// FTQL of the one-mode state, 4sinh²ξ + 4|γ|²/ν.
pub fn one_mode_reference(p: &OneModeParams) -> f64 {
    4.0 * p.xi.sinh().powi(2) + 4.0 * p.gamma_abs.powi(2) / p.nu
}

/// Signed advantage QFI − FTQL (not clipped at zero).
pub fn one_mode_advantage(p: &OneModeParams) -> f64 {
    qfi_one_mode(p) - one_mode_reference(p)
}

/// |γ| above which the one-mode advantage turns negative, if it does.
pub fn one_mode_displacement_threshold(p: &OneModeParams) -> Option<f64> {
    let nu = p.nu;
    let delta = p.phi - p.phi_d;
    let w = (2.0 * p.xi).exp() * delta.cos().powi(2) + (-2.0 * p.xi).exp() * delta.sin().powi(2) - 1.0;
    let sq = 4.0 * nu * nu / (nu * nu + 1.0) * (2.0 * p.xi).sinh().powi(2) - 4.0 * p.xi.sinh().powi(2);
    if w >= 0.0 || sq < 0.0 {
        return None;
    }
    Some((nu * sq / (-4.0 * w)).sqrt())
}

/// One-mode state whose phase-shift QFI is [`qfi_one_mode`]: σ = ν R S S† R†
/// with the squeezer of [`s1`], and γ = i|γ|e^{−iφ_d}.
pub fn one_mode_state(p: &OneModeParams) -> Result<GaussianState> {
    let r = diag(&[expi(-p.phi), expi(p.phi)]);
    let (ch, sh) = (p.xi.cosh(), p.xi.sinh());
    let s = CMat::from_row_slice(2, 2, &[re(ch), re(-sh), re(-sh), re(ch)]);
    let g = r * s;
    let sigma = &g * g.adjoint() * re(p.nu);
    let sigma = (&sigma + sigma.adjoint()) * re(0.5);
    let gamma = I * expi(-p.phi_d) * p.gamma_abs;
    GaussianState::new(1, sigma, CVec::from_row_slice(&[gamma, gamma.conj()]))
}

// ---------------------------------------------------------------------------
// Two modes

/// (o, p, χ₊, χ₋, υ₊, υ₋) for the explicit two-mode QFI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitCoefficients {
    pub o: f64,
    pub p: f64,
    pub chi_plus: f64,
    pub chi_minus: f64,
    pub ups_plus: f64,
    pub ups_minus: f64,
}

impl ExplicitCoefficients {
    pub fn of(w: &WilliamsonParams) -> Self {
        let (sl, cl) = w.l.sin_cos();
        let a = w.phi1 - w.phi_d2 + w.psi;
        let b = w.phi2 - w.phi_d1 - w.psi;
        Self {
            o: (w.phi1 - w.phi2).sin(),
            p: (w.phi1 - w.phi2).cos(),
            chi_plus: sl * a.cos(),
            chi_minus: sl * a.sin(),
            ups_plus: cl * b.cos(),
            ups_minus: cl * b.sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.chi_plus.powi(2) + self.chi_minus.powi(2) + self.ups_plus.powi(2) + self.ups_minus.powi(2)
    }

    /// e^{2ξ₁}χ₊² + e^{−2ξ₁}χ₋² + e^{2ξ₂}υ₊² + e^{−2ξ₂}υ₋² − 1.
    pub fn v(&self, xi1: f64, xi2: f64) -> f64 {
        (2.0 * xi1).exp() * self.chi_plus.powi(2)
            + (-2.0 * xi1).exp() * self.chi_minus.powi(2)
            + (2.0 * xi2).exp() * self.ups_plus.powi(2)
            + (-2.0 * xi2).exp() * self.ups_minus.powi(2)
            - 1.0
    }
}

/// Interferometer QFI for a state with θ = Ψ = 0:
/// 8ν²/(ν²+1)(p²sinh²(ξ₁−ξ₂) + o²sinh²(ξ₁+ξ₂)) + 4|γ|²(V+1)/ν.
pub fn qfi_two_mode_explicit(w: &WilliamsonParams) -> Result<f64> {
    if w.theta.abs() > 1e-12 || w.psi.abs() > 1e-12 {
        return Err(Error::domain(format!(
            "explicit two-mode QFI needs theta = psi = 0 (got {}, {}); reduce the state first",
            w.theta, w.psi
        )));
    }
    let k = ExplicitCoefficients::of(w);
    let norm = k.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::numerical(format!("displacement parameterisation broken: chi/upsilon norm {norm}")));
    }
    let nu = w.nu;
    let sq = 8.0 * nu * nu / (nu * nu + 1.0)
        * (k.p.powi(2) * (w.xi1 - w.xi2).sinh().powi(2) + k.o.powi(2) * (w.xi1 + w.xi2).sinh().powi(2));
    Ok(sq + 4.0 * w.gamma_abs.powi(2) / nu * (k.v(w.xi1, w.xi2) + 1.0))
}

/// Branch taken by the constructive procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VBranch {
    /// V ≥ 0: squeezing and displacement both help at φ₁−φ₂ = π/2.
    NonNegative,
    /// V < 0 but |γ| below the threshold: the squeezing term still wins.
    NegativeKept,
    /// V < 0 above the threshold: an extra quarter-turn makes V positive.
    NegativeRotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Equivalent to a one-mode phase estimate on the squeezed mode.
    OneMode,
    /// Send the state straight into the interferometer.
    MachZehnder,
    TheoremBranch(VBranch),
    /// The optimum over all passive operations beat the constructive branch.
    EulerSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageOptions {
    /// Grid spacing for the Euler-angle search.
    pub grid_step: f64,
    pub refine: bool,
}

impl Default for AdvantageOptions {
    fn default() -> Self {
        Self { grid_step: PI / 180.0, refine: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageReport {
    pub qfi_opt: f64,
    pub qfi_ref: f64,
    pub advantage: f64,
    pub strategy: Strategy,
    /// Passive operation (applied before the interferometer) attaining qfi_opt.
    pub angles: EulerAngles,
    pub qfi_constructive: f64,
    pub qfi_grid: f64,
    /// Largest eigenvalue of the Pauli Fisher matrix: the exact optimum.
    pub qfi_sphere: f64,
    pub branch: VBranch,
    pub v_initial: f64,
    pub x: f64,
    pub y: f64,
}

struct Constructive {
    qfi: f64,
    branch: VBranch,
    angles: EulerAngles,
    v: f64,
    x: f64,
    y: f64,
}

/// Reduction to θ = Ψ = 0, φ₁−φ₂ = π/2, followed by the V-dependent branch.
/// Returns the parameters of the reduced state alongside the operation.
pub fn reduce_to_canonical(w: &WilliamsonParams) -> (WilliamsonParams, EulerAngles) {
    let angles = EulerAngles::new(-2.0 * w.psi + FRAC_PI_2, -2.0 * w.theta, w.phi2 - w.phi1);
    let u = angles.mode_matrix();
    let [g1, g2] = w.gamma();
    let g = &u * CVec::from_row_slice(&[g1, g2]);
    let mean = 0.5 * (w.phi1 + w.phi2);
    let reduced = WilliamsonParams {
        phi1: mean + FRAC_PI_4,
        phi2: mean - FRAC_PI_4,
        theta: 0.0,
        psi: 0.0,
        gamma_abs: w.gamma_abs,
        l: g[1].norm().atan2(g[0].norm()),
        phi_d1: -g[0].arg(),
        phi_d2: -g[1].arg(),
        ..*w
    };
    (reduced, angles)
}

fn constructive(w: &WilliamsonParams) -> Result<Constructive> {
    let nu = w.nu;
    let (reduced, mut angles) = reduce_to_canonical(w);
    let k = ExplicitCoefficients::of(&reduced);
    let v = k.v(w.xi1, w.xi2);
    let pref = 4.0 * nu * nu / (nu * nu + 1.0);
    let sum_sq = w.xi1.sinh().powi(2) + w.xi2.sinh().powi(2);
    let x = pref * (w.xi1 + w.xi2).sinh().powi(2) - 2.0 * sum_sq;
    let y = pref * (w.xi1 - w.xi2).sinh().powi(2) - 2.0 * sum_sq;
    let g2 = w.gamma_abs.powi(2);
    let (branch, fin) = if v >= 0.0 {
        (VBranch::NonNegative, reduced)
    } else if g2 < nu * x / (2.0 * v.abs()) {
        (VBranch::NegativeKept, reduced)
    } else {
        angles.a += FRAC_PI_2;
        let rotated = WilliamsonParams {
            phi1: reduced.phi1 + FRAC_PI_4,
            phi2: reduced.phi2 - FRAC_PI_4,
            phi_d1: reduced.phi_d1 + FRAC_PI_4,
            phi_d2: reduced.phi_d2 - FRAC_PI_4,
            ..reduced
        };
        (VBranch::NegativeRotated, rotated)
    };
    Ok(Constructive { qfi: qfi_two_mode_explicit(&fin)?, branch, angles, v, x, y })
}

fn quad_form(f: &Matrix3<f64>, n: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += n[i] * f[(i, j)] * n[j];
        }
    }
    acc
}

/// Grid search of nᵀFn over Euler angles (a, b, c) ∈ [0,2π)×[0,π]×[0,2π),
/// then one finer pass (spacing step/20) around the best point. Visits
/// points in a fixed order; ties keep the first.
fn euler_grid(f: &Matrix3<f64>, step: f64, refine: bool) -> (f64, EulerAngles) {
    let na = (2.0 * PI / step).round() as usize;
    let nb = (PI / step).round() as usize + 1;
    let mut best = (f64::NEG_INFINITY, EulerAngles::default());
    let cs: Vec<(f64, f64)> = (0..na).map(|k| (k as f64 * step).sin_cos()).collect();
    for ia in 0..na {
        let a = ia as f64 * step;
        let (sa, ca) = a.sin_cos();
        for ib in 0..nb {
            let b = ib as f64 * step;
            let (sb, cb) = b.sin_cos();
            let (wx, wy, wz) = (sa * cb, ca, -sa * sb);
            for (ic, &(sc, cc)) in cs.iter().enumerate() {
                let n = [wx * cc + wy * sc, -wx * sc + wy * cc, wz];
                let v = quad_form(f, n);
                if v > best.0 {
                    best = (v, EulerAngles::new(a, b, ic as f64 * step));
                }
            }
        }
    }
    if refine {
        let fine = step / 20.0;
        let centre = best.1;
        for i in -20i32..=20 {
            for j in -20i32..=20 {
                for k in -20i32..=20 {
                    let e = EulerAngles::new(
                        centre.a + i as f64 * fine,
                        centre.b + j as f64 * fine,
                        centre.c + k as f64 * fine,
                    );
                    let v = quad_form(f, e.generator_direction());
                    if v > best.0 {
                        best = (v, e);
                    }
                }
            }
        }
    }
    best
}

/// Largest QFI reachable by passive operations before the interferometer,
/// as λ_max of the Pauli Fisher matrix, with angles realising it.
pub fn sphere_optimum(f: &Matrix3<f64>) -> (f64, EulerAngles) {
    let e = SymmetricEigen::new(*f);
    let k = (0..3).fold(0, |b, i| if e.eigenvalues[i] > e.eigenvalues[b] { i } else { b });
    let v = e.eigenvectors.column(k);
    let norm = v.norm();
    let n = [v[0] / norm, v[1] / norm, v[2] / norm];
    (e.eigenvalues[k], EulerAngles::towards(n))
}

pub fn metrological_advantage(s: &GaussianState) -> Result<AdvantageReport> {
    metrological_advantage_with(s, &AdvantageOptions::default())
}

/// Advantage max(I_opt − FTQL, 0) of an isotropic two-mode state. I_opt is
/// the best of the constructive branch, the Euler grid and the exact sphere
/// optimum.
pub fn metrological_advantage_with(s: &GaussianState, opts: &AdvantageOptions) -> Result<AdvantageReport> {
    if s.q != 2 {
        return Err(Error::InvalidDimension(format!("advantage is defined for two modes, got q={}", s.q)));
    }
    if !(opts.grid_step > 0.0 && opts.grid_step <= FRAC_PI_4) {
        return Err(Error::domain(format!("grid step {} outside (0, pi/4]", opts.grid_step)));
    }
    let w = WilliamsonParams::decompose(s)?;
    let nu = w.nu;
    let qfi_ref = ftql(mean_photon_number(s), nu, 2);
    let cons = constructive(&w)?;
    let f = pauli_fisher_matrix(s)?;
    let (qfi_grid, grid_angles) = euler_grid(&f, opts.grid_step, opts.refine);
    let (qfi_sphere, sphere_angles) = sphere_optimum(&f);

    let mut qfi_opt = cons.qfi;
    let mut angles = cons.angles;
    let mut strategy = Strategy::TheoremBranch(cons.branch);
    let slack = 1e-9 * cons.qfi.abs().max(1.0);
    for (v, a) in [(qfi_grid, grid_angles), (qfi_sphere, sphere_angles)] {
        if v > qfi_opt + slack {
            strategy = Strategy::EulerSearch;
        }
        if v > qfi_opt {
            qfi_opt = v;
            angles = a;
        }
    }
    Ok(AdvantageReport {
        qfi_opt,
        qfi_ref,
        advantage: (qfi_opt - qfi_ref).max(0.0),
        strategy,
        angles,
        qfi_constructive: cons.qfi,
        qfi_grid,
        qfi_sphere,
        branch: cons.branch,
        v_initial: cons.v,
        x: cons.x,
        y: cons.y,
    })
}

/// Σ pᵢ A(ρᵢ) for a given decomposition ρ = Σ pᵢ ρᵢ into Gaussian components.
pub fn decomposition_advantage(components: &[(f64, GaussianState)]) -> Result<f64> {
    let total: f64 = components.iter().map(|c| c.0).sum();
    if components.is_empty() || components.iter().any(|c| c.0 < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain("decomposition weights must be non-negative and sum to 1"));
    }
    let mut acc = 0.0;
    for (p, s) in components {
        acc += p * metrological_advantage(s)?.advantage;
    }
    Ok(acc)
}

/// Mode 1 displaced and squeezed, mode 2 thermal, same ν:
/// σ = ν R₁(φ)S₁(ξ)·h.c., γ = (|γ|e^{−iφ_d}, 0).
pub fn lemma_state(p: &OneModeParams) -> Result<GaussianState> {
    WilliamsonParams { nu: p.nu, phi1: p.phi, xi1: p.xi, gamma_abs: p.gamma_abs, phi_d1: p.phi_d, ..Default::default() }
        .build()
}

/// V = e^{2ξ}sin²(φ_d−φ) + e^{−2ξ}cos²(φ_d−φ) − 1 for [`lemma_state`].
pub fn lemma_v(p: &OneModeParams) -> f64 {
    let delta = p.phi_d - p.phi;
    (2.0 * p.xi).exp() * delta.sin().powi(2) + (-2.0 * p.xi).exp() * delta.cos().powi(2) - 1.0
}

/// Best interferometric strategy for [`lemma_state`] and its QFI. The
/// passive operations are, in [`EulerAngles`], (π/2, π/2, 0) for the one-mode
/// route and the identity for the direct route.
pub fn optimal_one_mode_strategy(p: &OneModeParams) -> (Strategy, f64) {
    let (nu, xi) = (p.nu, p.xi);
    let g2 = p.gamma_abs.powi(2);
    let pref = 4.0 * nu * nu / (nu * nu + 1.0);
    let v = lemma_v(p);
    let one_mode = pref * (2.0 * xi).sinh().powi(2) + 4.0 * g2 * (v + 1.0) / nu;
    let gain = pref * ((2.0 * xi).sinh().powi(2) - 2.0 * xi.sinh().powi(2));
    if v >= 0.0 || -4.0 * g2 * v / nu < gain {
        (Strategy::OneMode, one_mode)
    } else {
        (Strategy::MachZehnder, 2.0 * pref * xi.sinh().powi(2) + 4.0 * g2 / nu)
    }
}

/// Euler angles of a [`Strategy::OneMode`] or [`Strategy::MachZehnder`] choice.
pub fn strategy_angles(s: Strategy) -> Option<EulerAngles> {
    match s {
        Strategy::OneMode => Some(EulerAngles::new(FRAC_PI_2, FRAC_PI_2, 0.0)),
        Strategy::MachZehnder => Some(EulerAngles::default()),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Two-photon substate of a displaced thermal state

/// Coefficients of the N = 2 substate of a symmetric displaced thermal
/// state (β₁ = β₂ = β, Θ₁ = Θ₂ = Θ), up to normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N2Coefficients {
    pub phi: f64,
    pub upsilon: f64,
    pub xi: f64,
    pub aleph: f64,
}

impl N2Coefficients {
    pub fn symmetric(beta: C64, theta: f64) -> Self {
        let b2 = beta.norm_sqr();
        let t1 = 1.0 + theta;
        Self {
            phi: 0.5 * (b2 * b2 * t1.powi(4) + 4.0 * b2 * theta * t1 * t1 + 2.0 * theta * theta),
            upsilon: b2 / SQRT_2 * t1 * t1 * (b2 * t1 * t1 + 2.0 * theta),
            xi: b2 * b2 * t1.powi(4) / 2.0,
            aleph: (b2 * t1 * t1 + theta).powi(2),
        }
    }

    /// ρ in the single-particle basis (ψ₁ψ₁, ψ₁ψ₂, ψ₂ψ₁, ψ₂ψ₂), with |11⟩
    /// mapped to the symmetric combination.
    pub fn density(&self) -> CMat {
        let mut r3 = CMat::zeros(3, 3); // |20⟩, |11⟩, |02⟩
        r3[(0, 0)] = re(self.phi);
        r3[(2, 2)] = re(self.phi);
        r3[(1, 1)] = re(self.aleph);
        for (i, j, v) in [(1, 0, self.upsilon), (1, 2, self.upsilon), (0, 2, self.xi)] {
            r3[(i, j)] = re(v);
            r3[(j, i)] = re(v);
        }
        embed_two_particle(&r3)
    }

    /// The partially transposed matrix in the basis (ψ₁ψ₁, sym, ψ₂ψ₂, anti)
    /// as it reduces in the symmetric case.
    pub fn reduced_pt(&self) -> CMat {
        let (p, u, x, a) = (self.phi, self.upsilon, self.xi, self.aleph);
        CMat::from_row_slice(
            4,
            4,
            &[p, u, a / 2.0, 0.0, u, a / 2.0 + x, u, 0.0, a / 2.0, u, p, 0.0, 0.0, 0.0, 0.0, a / 2.0 - x].map(re),
        )
    }
}

fn embed_two_particle(r3: &CMat) -> CMat {
    let h = 1.0 / SQRT_2;
    let mut v = CMat::zeros(4, 3);
    v[(0, 0)] = re(1.0);
    v[(1, 1)] = re(h);
    v[(2, 1)] = re(h);
    v[(3, 2)] = re(1.0);
    &v * r3 * v.adjoint()
}

/// Partial transpose over the second particle of a 2⊗2 matrix.
pub fn partial_transpose(rho: &CMat) -> CMat {
    CMat::from_fn(4, 4, |r, col| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (col / 2, col % 2);
        rho[(2 * i + l, 2 * k + j)]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    pub coefficients: N2Coefficients,
    /// Eigenvalues of the partial transpose, ascending.
    pub pt_eigenvalues: Vec<f64>,
    /// Same, from the reduced 4×4 matrix.
    pub reduced_eigenvalues: Vec<f64>,
    /// y₁+y₂+y₃, Σyᵢyⱼ, y₁y₂y₃ over the 3×3 block, from its eigenvalues.
    pub char_sums: [f64; 3],
    /// Closed forms 2Φ+Ξ+ℵ/2, Φ²−ℵ²/4+2(Ξ+ℵ/2)Φ−2Υ², (Φ−ℵ/2)[(Ξ+ℵ/2)(Φ+ℵ/2)−2Υ²].
    pub closed_forms: [f64; 3],
    /// The second and third closed forms with −2Φ² and Φ²(ℵ−2Φ) in place of
    /// the Υ² terms, kept for comparison.
    pub alternative_forms: [f64; 2],
    pub separable: bool,
}

/// Peres–Horodecki check on the two-photon substate of a symmetric
/// two-mode displaced thermal state.
pub fn separability_check_n2(beta: C64, theta: f64) -> Result<SeparabilityReport> {
    if !(0.0..1.0).contains(&theta) || !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(Error::domain(format!("need finite beta and Theta in [0, 1), got Theta = {theta}")));
    }
    let k = N2Coefficients::symmetric(beta, theta);
    let pt = partial_transpose(&k.density());
    let pt_eigenvalues = eigh(&((&pt + pt.adjoint()) * re(0.5)))?.values;
    let reduced_eigenvalues = eigh(&k.reduced_pt())?.values;
    let block = k.reduced_pt().view((0, 0), (3, 3)).into_owned();
    let y = eigh(&block)?.values;
    let char_sums = [y[0] + y[1] + y[2], y[0] * y[1] + y[1] * y[2] + y[0] * y[2], y[0] * y[1] * y[2]];
    let (p, u, x, a) = (k.phi, k.upsilon, k.xi, k.aleph);
    let closed_forms = [
        2.0 * p + x + a / 2.0,
        p * p - a * a / 4.0 + 2.0 * (x + a / 2.0) * p - 2.0 * u * u,
        (p - a / 2.0) * ((x + a / 2.0) * (p + a / 2.0) - 2.0 * u * u),
    ];
    let alternative_forms = [
        p * p - a * a / 4.0 + 2.0 * (x + a / 2.0) * p - 2.0 * p * p,
        p * p * (a - 2.0 * p) + (x + a / 2.0) * (p * p - a * a / 4.0),
    ];
    let scale = pt_eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let separable = pt_eigenvalues.iter().all(|&v| v >= -1e-10 * scale.max(1.0));
    Ok(SeparabilityReport {
        coefficients: k,
        pt_eigenvalues,
        reduced_eigenvalues,
        char_sums,
        closed_forms,
        alternative_forms,
        separable,
    })
}

/// Exact two-photon substate of D(β₁)ρ_th(Θ₁)D(β₁)† ⊗ D(β₂)ρ_th(Θ₂)D(β₂)†
/// built in a truncated Fock space, normalised to unit trace and written in
/// the single-particle basis.
pub fn n2_density_fock(b1: C64, b2: C64, t1: f64, t2: f64, cutoff: usize) -> Result<CMat> {
    if cutoff < 4 {
        return Err(Error::domain("Fock cutoff must be at least 4"));
    }
    let mode = |beta: C64, t: f64| -> Result<CMat> {
        let a = CMat::from_fn(cutoff, cutoff, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) });
        let gen = a.adjoint() * beta - &a * beta.conj();
        let d = expm(&gen)?;
        let th = CMat::from_fn(cutoff, cutoff, |i, j| if i == j { re((1.0 - t) * t.powi(i as i32)) } else { re(0.0) });
        Ok(&d * th * d.adjoint())
    };
    let m1 = mode(b1, t1)?;
    let m2 = mode(b2, t2)?;
    let idx = [(2usize, 0usize), (1, 1), (0, 2)];
    let r3 = CMat::from_fn(3, 3, |i, j| {
        let (p, q) = idx[i];
        let (r, s) = idx[j];
        m1[(p, r)] * m2[(q, s)]
    });
    let tr = r3.trace();
    Ok(embed_two_particle(&(r3 / tr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn thermal_family_qfi_is_geometric_distribution_fi() {
        // p_n = n̄ⁿ/(n̄+1)^{n+1}: FI in n̄ is 1/(n̄(n̄+1)), n̄ = (ν−1)/2.
        for &(nu, nu_dot) in &[(1.5, 0.3), (3.0, -2.0), (20.0, 1.0)] {
            let s = Matrix2::identity() * (nu / 2.0);
            let q = qfi_one_mode_xp(&s, &(Matrix2::identity() * (nu_dot / 2.0))).unwrap();
            let nbar = (nu - 1.0) / 2.0;
            let want = (nu_dot / 2.0).powi(2) / (nbar * (nbar + 1.0));
            assert!(close(q.value, want, 1e-12), "{} vs {want}", q.value);
            assert!(close(q.nu_dot, nu_dot, 1e-12));
        }
    }

    #[test]
    fn one_mode_xp_qfi_matches_isotropic_form_for_rotations() {
        // Rotation e^{−iφa†a} of a squeezed thermal state: ν fixed.
        let p = OneModeParams { nu: 1.7, xi: 0.4, phi: 0.3, gamma_abs: 0.0, phi_d: 0.0 };
        let st = one_mode_state(&p).unwrap();
        let (sd, _) = generator_derivatives(&st, &CMat::identity(1, 1));
        let want = qfi_isotropic(&st.sigma, &st.d, &sd, &CVec::zeros(2)).unwrap().value;
        // σ_c = 2 T σ_xp T† with a = (x + ip)/√2, T = [[1, i], [1, −i]]/√2.
        let t = CMat::from_row_slice(2, 2, &[re(1.0), I, re(1.0), -I]) * re(core::f64::consts::FRAC_1_SQRT_2);
        let to_xp = |m: &CMat| {
            let r = t.adjoint() * m * &t * re(0.5);
            Matrix2::new(r[(0, 0)].re, r[(0, 1)].re, r[(1, 0)].re, r[(1, 1)].re)
        };
        let q = qfi_one_mode_xp(&to_xp(&st.sigma), &to_xp(&sd)).unwrap();
        assert!(close(q.value, want, 1e-10), "{} vs {want}", q.value);
        assert!(q.purity_term.abs() < 1e-12);
    }

    #[test]
    fn one_mode_xp_qfi_rejects_unphysical() {
        let s = Matrix2::identity() * 0.4;
        assert!(matches!(qfi_one_mode_xp(&s, &Matrix2::zeros()), Err(Error::Unphysical(_))));
    }

    fn random_params(v: &[f64]) -> WilliamsonParams {
        WilliamsonParams {
            nu: 1.0 + 2.0 * v[0],
            phi1: 6.0 * v[1],
            phi2: 6.0 * v[2],
            theta: 3.0 * v[3],
            psi: 6.0 * v[4],
            xi1: 1.2 * v[5],
            xi2: 1.2 * v[6],
            gamma_abs: 2.0 * v[7],
            l: 3.0 * v[8],
            phi_d1: 6.0 * v[9],
            phi_d2: 6.0 * v[10],
        }
    }

    #[test]
    fn building_blocks_are_symplectic() {
        for m in [r1(0.7), r2(-1.3), beam_splitter(0.4), s1(0.9), s2(-0.5), r_as(2.1)] {
            assert!(symplectic_defect(&m) < 1e-12);
        }
        let prod = r1(0.3) * beam_splitter(1.1) * s1(0.8) * r_as(-0.6) * s2(1.4) * r2(2.0);
        assert!(symplectic_defect(&prod) < 1e-11);
    }

    #[test]
    fn trivial_blocks() {
        assert!(max_abs(&(r1(0.0) - CMat::identity(4, 4))) == 0.0);
        assert!(max_abs(&(s1(0.7) * s1(-0.7) - CMat::identity(4, 4))) < 1e-12);
        // B(π/2): a₁ → a₂, a₂ → −a₁
        let b = beam_splitter(FRAC_PI_2);
        assert!((b[(0, 1)] - re(1.0)).norm() < 1e-15 && (b[(1, 0)] - re(-1.0)).norm() < 1e-15);
        assert!(b[(0, 0)].norm() < 1e-15 && b[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn vacuum_and_thermal() {
        let v = WilliamsonParams::default().build().unwrap();
        assert!(max_abs(&(v.sigma - CMat::identity(4, 4))) < 1e-15);
        assert!(v.d.camax() == 0.0);
        let t = WilliamsonParams { nu: 3.0, ..Default::default() }.build().unwrap();
        let nus = t.symplectic_eigenvalues().unwrap();
        assert!(nus.iter().all(|n| (n - 3.0).abs() < 1e-12));
        assert_eq!(mean_photon_number(&GaussianState::vacuum(2)), 0.0);
    }

    #[test]
    fn photon_number_examples() {
        let s = WilliamsonParams { nu: 2.0, xi1: 1.0, ..Default::default() }.build().unwrap();
        assert!(close(mean_photon_number(&s), 1.0 + 2.0 * 1f64.sinh().powi(2), 1e-12));
        let s = WilliamsonParams { gamma_abs: 1.7, l: 0.0, ..Default::default() }.build().unwrap();
        assert!(close(mean_photon_number(&s), 1.7 * 1.7, 1e-12));
    }

    #[test]
    fn unphysical_states_rejected() {
        let s = CMat::identity(4, 4) * re(0.9);
        assert!(matches!(GaussianState::new(2, s, CVec::zeros(4)), Err(Error::Unphysical(_))));
        let mut s = CMat::identity(4, 4);
        s[(0, 1)] = c(0.1, 0.1);
        s[(1, 0)] = c(0.1, -0.1);
        // breaks the conjugate block structure
        assert!(GaussianState::new(2, s, CVec::zeros(4)).is_err());
        let d = CVec::from_row_slice(&[c(1.0, 0.0), re(0.0), c(2.0, 0.0), re(0.0)]);
        assert!(GaussianState::new(2, CMat::identity(4, 4), d).is_err());
        assert!(WilliamsonParams { nu: 0.5, ..Default::default() }.build().is_err());
    }

    #[test]
    fn decompose_handles_degenerate_squeezing() {
        for (x1, x2) in [(0.0, 0.0), (0.6, 0.6), (0.6, 0.6 + 1e-7), (0.0, 0.8), (0.9, 0.0)] {
            let p = WilliamsonParams {
                nu: 1.5,
                phi1: 0.3,
                phi2: -1.1,
                theta: 0.7,
                psi: 0.4,
                xi1: x1,
                xi2: x2,
                gamma_abs: 0.5,
                l: 0.3,
                phi_d1: 1.0,
                phi_d2: 2.0,
            };
            let s = p.build().unwrap();
            let back = WilliamsonParams::decompose(&s).unwrap();
            let s2 = back.build().unwrap();
            assert!(max_abs(&(s2.sigma - &s.sigma)) < 1e-10, "{x1} {x2}");
            assert!(back.xi1 >= 0.0 && back.xi2 >= 0.0);
        }
    }

    #[test]
    fn anisotropic_state_rejected() {
        let mut s = GaussianState::vacuum(2);
        s.sigma[(0, 0)] = re(2.0);
        s.sigma[(2, 2)] = re(2.0);
        assert!(matches!(s.isotropic_nu(), Err(Error::Domain(_))));
        let (sd, dd) = generator_derivatives(&s, &pauli(1));
        assert!(matches!(qfi_isotropic(&s.sigma, &s.d, &sd, &dd), Err(Error::Domain(_))));
    }

    #[test]
    fn coherent_phase_qfi() {
        // one mode, phase rotation, no squeezing: 4|γ|²/ν
        for nu in [1.0, 2.5] {
            let p = OneModeParams { nu, gamma_abs: 1.3, phi_d: 0.4, ..Default::default() };
            let s = one_mode_state(&p).unwrap();
            let q = qfi_under_generator(&s, &CMat::identity(1, 1)).unwrap();
            assert!(close(q.value, 4.0 * 1.69 / nu, 1e-12));
            assert!(q.trace_form.abs() < 1e-14);
        }
        let q = qfi_under_generator(&GaussianState::thermal(2, 2.0).unwrap(), &pauli(1)).unwrap();
        assert!(q.value.abs() < 1e-14);
    }

    #[test]
    fn one_mode_formula_matches_phase_space() {
        for &(nu, xi, phi, g, pd) in &[(1.0, 0.4, 0.3, 1.2, 1.0), (2.2, 0.9, -1.0, 0.3, 2.5), (1.5, 0.1, 0.0, 2.0, 0.0)]
        {
            let p = OneModeParams { nu, xi, phi, gamma_abs: g, phi_d: pd };
            let s = one_mode_state(&p).unwrap();
            let q = qfi_under_generator(&s, &CMat::identity(1, 1)).unwrap();
            assert!(close(q.value, qfi_one_mode(&p), 1e-11));
        }
    }

    #[test]
    fn one_mode_advantage_regimes() {
        let p = OneModeParams { nu: 1.0, xi: 0.0, gamma_abs: 1.5, ..Default::default() };
        assert!(close(qfi_one_mode(&p), 9.0, 1e-14));
        // aligned, no displacement: 4 sinh²2ξ against 4 sinh²ξ
        for xi in [0.1, 0.5, 1.5] {
            let p = OneModeParams { nu: 1.0, xi, ..Default::default() };
            assert!(one_mode_advantage(&p) > 0.0);
            assert!(one_mode_displacement_threshold(&p).is_none());
        }
        // orthogonal: the advantage dies above a finite |γ|
        let p = OneModeParams { nu: 1.0, xi: 0.3, phi: FRAC_PI_2, ..Default::default() };
        let root = one_mode_displacement_threshold(&p).unwrap();
        let at = |g: f64| one_mode_advantage(&OneModeParams { gamma_abs: g, ..p });
        assert!(at(0.5 * root) > 0.0 && at(1.5 * root) < 0.0);
        // bisection agrees with the closed form root
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!(close(lo, root, 1e-12));
    }

    #[test]
    fn explicit_two_mode_examples() {
        assert_eq!(qfi_two_mode_explicit(&WilliamsonParams::default()).unwrap(), 0.0);
        let p = WilliamsonParams { nu: 1.7, phi1: FRAC_PI_2, xi1: 0.4, xi2: 0.3, ..Default::default() };
        let want = 8.0 * 1.7f64.powi(2) / (1.7f64.powi(2) + 1.0) * 0.7f64.sinh().powi(2);
        assert!(close(qfi_two_mode_explicit(&p).unwrap(), want, 1e-13));
        assert!(qfi_two_mode_explicit(&WilliamsonParams { theta: 0.1, ..p }).is_err());
    }

    #[test]
    fn ftql_examples() {
        assert_eq!(ftql(3.0, 1.0, 2), 12.0);
        assert_eq!(ftql(0.0, 1.0, 2), 0.0);
        assert!(close(ftql(10.0, 2.0, 2), 18.0, 1e-15));
    }

    #[test]
    fn euler_direction_matches_conjugated_generator() {
        for e in
            [EulerAngles::new(0.3, 1.1, -0.7), EulerAngles::new(2.0, -0.4, 4.0), EulerAngles::towards([0.6, 0.0, -0.8])]
        {
            let u = e.mode_matrix();
            let h = u.adjoint() * pauli(1) * &u;
            let n = e.generator_direction();
            let want = pauli(0) * re(n[0]) + pauli(1) * re(n[1]) + pauli(2) * re(n[2]);
            assert!(max_abs(&(h - want)) < 1e-14);
        }
        let n = EulerAngles::towards([0.6, 0.0, -0.8]).generator_direction();
        assert!((n[0] - 0.6).abs() < 1e-15 && n[1].abs() < 1e-15 && (n[2] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn reduction_reaches_canonical_form() {
        let p = random_params(&[0.3, 0.2, 0.9, 0.4, 0.7, 0.5, 0.2, 0.6, 0.1, 0.8, 0.35]);
        let s = p.build().unwrap();
        let (reduced, angles) = reduce_to_canonical(&p);
        let direct = s.apply_passive(&angles.mode_matrix());
        let built = reduced.build().unwrap();
        assert!(max_abs(&(direct.sigma - built.sigma)) < 1e-10);
        assert!((direct.d - built.d).camax() < 1e-12);
    }

    #[test]
    fn displaced_thermal_has_no_advantage() {
        for (nu, g) in [(1.0, 0.0), (1.0, 2.0), (3.0, 1.2)] {
            let s = WilliamsonParams {
                nu,
                gamma_abs: g,
                l: 0.7,
                phi_d1: 0.3,
                phi_d2: -1.0,
                phi1: 0.2,
                theta: 0.5,
                ..Default::default()
            }
            .build()
            .unwrap();
            let r = metrological_advantage(&s).unwrap();
            assert!(r.advantage.abs() < 1e-10, "{nu} {g}: {}", r.advantage);
        }
    }

    #[test]
    fn squeezed_mixed_state_has_advantage() {
        let s = WilliamsonParams { nu: 2.0, xi1: 0.5, ..Default::default() }.build().unwrap();
        let r = metrological_advantage(&s).unwrap();
        assert!(r.advantage > 0.0);
        assert!(r.qfi_grid <= r.qfi_sphere * (1.0 + 1e-12));
        assert!(r.qfi_constructive <= r.qfi_sphere * (1.0 + 1e-12));
        assert!(close(r.qfi_grid, r.qfi_sphere, 1e-6));
    }

    #[test]
    fn pure_lemma_state_only_attains_the_limit() {
        // V < 0 with a large displacement: the interferometer alone is optimal
        // and at ν = 1 it sits exactly on the reference.
        let p = OneModeParams { nu: 1.0, xi: 0.4, phi: 0.0, gamma_abs: 6.0, phi_d: 0.0 };
        assert!(lemma_v(&p) < 0.0);
        let (strategy, qfi) = optimal_one_mode_strategy(&p);
        assert_eq!(strategy, super::Strategy::MachZehnder);
        let s = lemma_state(&p).unwrap();
        let r = metrological_advantage(&s).unwrap();
        assert!(close(r.qfi_sphere, qfi, 1e-10));
        assert!(r.v_initial.abs() < 1e-12);
        assert!(r.advantage < 1e-10, "{}", r.advantage);
    }

    #[test]
    fn lemma_strategies_match_phase_space() {
        let cases = [
            OneModeParams { nu: 1.4, xi: 0.6, phi: 0.2, gamma_abs: 1.0, phi_d: 1.5 },
            OneModeParams { nu: 2.0, xi: 0.3, phi: 0.0, gamma_abs: 0.4, phi_d: 0.1 },
            OneModeParams { nu: 1.0, xi: 0.8, phi: 1.0, gamma_abs: 5.0, phi_d: 1.0 },
        ];
        for p in cases {
            let s = lemma_state(&p).unwrap();
            let (strategy, qfi) = optimal_one_mode_strategy(&p);
            let f = pauli_fisher_matrix(&s).unwrap();
            let via_angles = quad_form(&f, strategy_angles(strategy).unwrap().generator_direction());
            assert!(close(via_angles, qfi, 1e-10), "{p:?}");
            assert!(close(sphere_optimum(&f).0, qfi, 1e-10), "{p:?}");
        }
        // ξ = 0: both routes give 4|γ|²/ν
        let p = OneModeParams { nu: 1.5, gamma_abs: 1.2, ..Default::default() };
        assert!(close(optimal_one_mode_strategy(&p).1, 4.0 * 1.44 / 1.5, 1e-13));
    }

    #[test]
    fn separability_examples() {
        let r = separability_check_n2(re(0.0), 0.4).unwrap();
        assert!(r.separable);
        let k = r.coefficients;
        assert!(k.upsilon == 0.0 && k.xi == 0.0 && close(k.phi, 0.16, 1e-15) && close(k.aleph, 0.16, 1e-15));
        let r = separability_check_n2(c(1.0, 0.5), 0.5).unwrap();
        assert!(r.separable);
        for i in 0..4 {
            assert!(close(r.pt_eigenvalues[i], r.reduced_eigenvalues[i], 1e-12));
        }
        for i in 0..3 {
            assert!(close(r.char_sums[i], r.closed_forms[i], 1e-9), "{i}: {:?} {:?}", r.char_sums, r.closed_forms);
        }
        // the −2Φ² variants do not describe this matrix
        assert!(!close(r.char_sums[1], r.alternative_forms[0], 1e-3));
    }

    #[test]
    fn exact_two_photon_substate_is_ppt() {
        for (b, t) in [(c(1.0, 0.5), 0.5), (c(-0.3, 1.2), 0.8), (c(2.0, 0.0), 0.1)] {
            let rho = n2_density_fock(b, b, t, t, 60).unwrap();
            let e = eigh(&partial_transpose(&rho)).unwrap().values;
            assert!(e[0] > -1e-10, "{b} {t}: {e:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn williamson_round_trip(v in proptest::collection::vec(0.0f64..1.0, 11)) {
            let p = random_params(&v);
            let s = p.build().unwrap();
            let back = WilliamsonParams::decompose(&s).unwrap();
            let s2 = back.build().unwrap();
            prop_assert!(max_abs(&(&s2.sigma - &s.sigma)) < 1e-10 * max_abs(&s.sigma));
            prop_assert!((&s2.d - &s.d).camax() < 1e-10);
            prop_assert!((back.nu - p.nu).abs() < 1e-10);
        }

        #[test]
        fn passive_operations_preserve_resources(v in proptest::collection::vec(0.0f64..1.0, 11), a in -3.0f64..3.0, b in -3.0f64..3.0, cc in -3.0f64..3.0) {
            let s = random_params(&v).build().unwrap();
            let t = s.apply_passive(&EulerAngles::new(a, b, cc).mode_matrix());
            prop_assert!((mean_photon_number(&t) - mean_photon_number(&s)).abs() < 1e-10 * mean_photon_number(&s).max(1.0));
            prop_assert!((t.isotropic_nu().unwrap() - s.isotropic_nu().unwrap()).abs() < 1e-10);
            let m = mode_symplectic(&EulerAngles::new(a, b, cc).mode_matrix()) * s1(v[5]) * beam_splitter(b);
            prop_assert!(symplectic_defect(&m) < 1e-11);
        }

        #[test]
        fn explicit_qfi_matches_isotropic(v in proptest::collection::vec(0.0f64..1.0, 11)) {
            let p = WilliamsonParams { theta: 0.0, psi: 0.0, ..random_params(&v) };
            let s = p.build().unwrap();
            let q = qfi_under_generator(&s, &interferometer_generator()).unwrap();
            let e = qfi_two_mode_explicit(&p).unwrap();
            prop_assert!((q.value - e).abs() < 1e-8 * e.max(1.0));
            prop_assert!((q.trace_form - q.inverse_form).abs() < 1e-9 * q.trace_form.abs().max(1.0));
        }

        #[test]
        fn fisher_matrix_predicts_rotated_qfi(v in proptest::collection::vec(0.0f64..1.0, 11), a in -3.0f64..3.0, b in -3.0f64..3.0, cc in -3.0f64..3.0) {
            let s = random_params(&v).build().unwrap();
            let e = EulerAngles::new(a, b, cc);
            let direct = qfi_under_generator(&s.apply_passive(&e.mode_matrix()), &interferometer_generator()).unwrap().value;
            let f = pauli_fisher_matrix(&s).unwrap();
            prop_assert!((quad_form(&f, e.generator_direction()) - direct).abs() < 1e-9 * direct.max(1.0));
        }

        #[test]
        fn constructive_branch_matches_phase_space(v in proptest::collection::vec(0.0f64..1.0, 11)) {
            let p = random_params(&v);
            let s = p.build().unwrap();
            let c = constructive(&p).unwrap();
            let direct = qfi_under_generator(&s.apply_passive(&c.angles.mode_matrix()), &interferometer_generator()).unwrap().value;
            prop_assert!((c.qfi - direct).abs() < 1e-8 * direct.max(1.0));
            // the branch never loses to the reference
            let r = ftql(mean_photon_number(&s), p.nu, 2);
            prop_assert!(c.qfi >= r - 1e-9 * r.max(1.0) || c.x < 0.0);
        }

        #[test]
        fn advantage_is_passive_invariant(v in proptest::collection::vec(0.0f64..1.0, 11), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let opts = AdvantageOptions { grid_step: PI / 18.0, refine: false };
            let s = random_params(&v).build().unwrap();
            let t = s.apply_passive(&EulerAngles::new(a, b, 0.5).mode_matrix());
            let r1 = metrological_advantage_with(&s, &opts).unwrap();
            let r2 = metrological_advantage_with(&t, &opts).unwrap();
            prop_assert!((r1.advantage - r2.advantage).abs() < 1e-8 * r1.qfi_opt.max(1.0));
            prop_assert!(r1.advantage >= 0.0 && r1.qfi_ref >= 0.0);
        }

        #[test]
        fn n2_partial_transpose_positive(br in -2.0f64..2.0, bi in -2.0f64..2.0, t in 0.0f64..0.99) {
            let r = separability_check_n2(c(br, bi), t).unwrap();
            prop_assert!(r.separable);
            for i in 0..3 {
                prop_assert!((r.char_sums[i] - r.closed_forms[i]).abs() < 1e-9 * r.closed_forms[i].abs().max(1.0));
            }
        }
    }
}
