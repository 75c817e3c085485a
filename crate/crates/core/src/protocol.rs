//! Critical sensing by adiabatic ramp towards the superradiant point.
//!
//! The ramp follows dg/dt = V(g) = v0·ω·g_p·(1 − g²/g_p²)^{3/2}, slowing down
//! as the gap closes. Near g_p the ground state of the Rabi model is the
//! squeezed vacuum with ξ = −¼ ln(1 − λ²), λ = g/g_p, so QFI and
//! measurement Fisher informations follow from ξ and its parameter
//! derivatives. Times are in units of 1/ω where ω is not an argument.

use alloc::format;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::effective::PhaseLabel;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::fock::{self, HamiltonianKind, ModelParams, QfiParameter};
use nalgebra::DVector;

use crate::linalg::{self, c, re, CMat, CVec};
use crate::quad;

/// Linear ramp schedule under the speed ansatz. Only λ(t) = g(t)/g_p enters
/// the dynamics, so the schedule is shared between model sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSchedule {
    pub v0: f64,
    pub omega: f64,
    pub g_p: f64,
    pub g_end: f64,
}

/// Protocol duration by quadrature (authoritative) and by the quoted closed
/// form τ = (1/(v0ω))(g/g_p)(g_p/(g_p − g))^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duration {
    pub quadrature: f64,
    pub closed_form: f64,
    /// closed_form/quadrature − 1.
    pub deviation: f64,
}

impl RampSchedule {
    pub fn new(v0: f64, omega: f64, g_p: f64, g_end: f64) -> Result<Self> {
        if !(v0 > 0.0) || !(omega > 0.0) || !(g_p > 0.0) {
            return Err(Error::domain(format!("need v0, ω, g_p > 0; got {v0}, {omega}, {g_p}")));
        }
        if !(g_end > 0.0) || g_end >= g_p {
            return Err(Error::domain(format!("ramp must end inside (0, g_p) = (0, {g_p}); got {g_end}")));
        }
        Ok(RampSchedule { v0, omega, g_p, g_end })
    }

    pub fn lambda_end(&self) -> f64 {
        self.g_end / self.g_p
    }

    /// V(g). Zero at and beyond g_p.
    pub fn speed(&self, g: f64) -> f64 {
        let u = 1.0 - (g / self.g_p).powi(2);
        if u <= 0.0 {
            return 0.0;
        }
        self.v0 * self.omega * self.g_p * u * u.sqrt()
    }

    pub fn duration(&self) -> Result<Duration> {
        protocol_duration(self.v0, self.g_end, self.omega, self.g_p)
    }

    /// Time to reach g: ∫₀^g dg'/V(g') = g/(v0ω√(g_p² − g²)).
    pub fn time_to(&self, g: f64) -> f64 {
        g / (self.v0 * self.omega * (self.g_p * self.g_p - g * g).sqrt())
    }

    /// g(t), the inverse of [`time_to`](Self::time_to): with s = v0ωt,
    /// g = g_p s/√(1 + s²).
    pub fn coupling_at(&self, t: f64) -> f64 {
        let s = self.v0 * self.omega * t;
        self.g_p * s / (1.0 + s * s).sqrt()
    }

    /// g at each time of `times` (non-decreasing, starting ≥ 0) by RK4 on
    /// dg/dt = V(g) with `steps` steps per unit of v0ωt.
    pub fn integrate_profile(&self, times: &[f64], steps: usize) -> Result<Vec<f64>> {
        let rhs = |_: f64, y: &nalgebra::DVector<f64>| nalgebra::DVector::from_element(1, self.speed(y[0]));
        let mut out = Vec::with_capacity(times.len());
        let mut y = nalgebra::DVector::from_element(1, 0.0);
        let mut t = 0.0;
        for &tk in times {
            if tk < t {
                return Err(Error::domain("profile times must be non-decreasing and non-negative"));
            }
            let n = ((tk - t) * self.v0 * self.omega * steps as f64).ceil().max(1.0) as usize;
            y = crate::ode::rk4(rhs, y, t, tk, n);
            t = tk;
            out.push(y[0]);
        }
        Ok(out)
    }
}

/// Duration of the ramp from 0 to g_end.
pub fn protocol_duration(v0: f64, g_end: f64, omega: f64, g_p: f64) -> Result<Duration> {
    let s = RampSchedule::new(v0, omega, g_p, g_end)?;
    // g = g_p sin θ tames the (g_p − g)^{-3/2} end point: V = v0ωg_p cos³θ,
    // so dg/V = dθ/(v0ω cos²θ).
    let theta_end = (g_end / g_p).asin();
    let quadrature =
        quad::integrate(|th| 1.0 / (v0 * omega * th.cos().powi(2)), 0.0, theta_end, 1e-12 * s.time_to(g_end))?;
    let lam = g_end / g_p;
    let closed_form = lam * (g_p / (g_p - g_end)).sqrt() / (v0 * omega);
    Ok(Duration { quadrature, closed_form, deviation: closed_form / quadrature - 1.0 })
}

/// ξ = −¼ ln(1 − λ²), the ground-state squeezing below g_p.
pub fn squeezing(lambda: f64) -> f64 {
    -0.25 * (-lambda * lambda).ln_1p()
}

/// ∂ξ/∂x for x = Ω or ω at fixed g; both enter λ² = 4g²/(ωΩ) as 1/x.
pub fn squeezing_derivative(lambda: f64, x: f64) -> f64 {
    let l2 = lambda * lambda;
    -l2 / (4.0 * x * (1.0 - l2))
}

/// Whether λ sits in the quadratic-regime window 1 − λ > 5η^{−2/3}, where
/// the squeezed-vacuum description holds at finite η.
pub fn in_quadratic_window(lambda: f64, eta: f64) -> bool {
    1.0 - lambda > 5.0 * eta.powf(-2.0 / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormQfi {
    pub phase: PhaseLabel,
    /// Quoted near-critical form: (1/8x²)(g_p²/(g_p² − g²))² below g_p.
    pub quoted: f64,
    /// 2(∂ₓξ)² = λ⁴/(8x²(1−λ²)²) for the squeezed vacuum; None in the
    /// superradiant phase, where only the quoted form exists.
    pub exact: Option<f64>,
    /// x·√quoted.
    pub snr_quoted: f64,
    pub snr_exact: Option<f64>,
}

/// Ground-state QFI for the estimate of Ω (`QubitFrequency`) or ω
/// (`FieldFrequency`) at coupling g. `phase` must agree with g versus g_p;
/// the superradiant form is given for Ω only.
pub fn qfi_closed_form(
    g: f64,
    omega: f64,
    omega_q: f64,
    phase: PhaseLabel,
    which: QfiParameter,
) -> Result<ClosedFormQfi> {
    if !(omega > 0.0) || !(omega_q > 0.0) || !(g >= 0.0) {
        return Err(Error::domain(format!("need ω, Ω > 0 and g ≥ 0; got {omega}, {omega_q}, {g}")));
    }
    let gp = (omega * omega_q).sqrt() / 2.0;
    let x = match which {
        QfiParameter::QubitFrequency => omega_q,
        QfiParameter::FieldFrequency => omega,
    };
    let (gp2, g2) = (gp * gp, g * g);
    match phase {
        PhaseLabel::Normal => {
            if g >= gp {
                return Err(Error::domain(format!("normal-phase QFI needs g < g_p = {gp}, got {g}")));
            }
            let quoted = (gp2 / (gp2 - g2)).powi(2) / (8.0 * x * x);
            let lam = g / gp;
            let exact = 2.0 * squeezing_derivative(lam, x).powi(2);
            Ok(ClosedFormQfi {
                phase,
                quoted,
                exact: Some(exact),
                snr_quoted: x * quoted.sqrt(),
                snr_exact: Some(x * exact.sqrt()),
            })
        }
        PhaseLabel::Ordered => {
            if g <= gp {
                return Err(Error::domain(format!("superradiant QFI needs g > g_p = {gp}, got {g}")));
            }
            if which == QfiParameter::FieldFrequency {
                return Err(Error::domain("superradiant closed form is available for Ω only"));
            }
            let (g4, gp4) = (g2 * g2, gp2 * gp2);
            let quoted = gp4 * gp4 / (2.0 * omega_q * omega_q * (g4 - gp4).powi(2))
                + gp4 * gp2 / (omega_q * omega * g4 * (g4 - gp4).sqrt());
            Ok(ClosedFormQfi { phase, quoted, exact: None, snr_quoted: omega_q * quoted.sqrt(), snr_exact: None })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonNumberFi {
    /// Σ_m p(2m)(∂ ln p(2m))², truncated once the tail bound is below 1e-12.
    pub numeric: f64,
    /// 2(∂ξ)².
    pub closed_form: f64,
    /// Σ_m p(2m) over the same terms.
    pub normalization: f64,
    pub terms: usize,
}

/// p(2m) = tanh^{2m}ξ/cosh ξ · (2m)!/(4^m (m!)²) for the squeezed vacuum.
pub fn photon_number_probability(xi: f64, m: usize) -> f64 {
    let mut ln_c = 0.0;
    for k in 1..=m {
        ln_c += ((2 * k - 1) as f64 / (2 * k) as f64).ln();
    }
    (2.0 * m as f64 * xi.tanh().ln() - xi.cosh().ln() + ln_c).exp()
}

/// Classical FI of photon counting on the squeezed vacuum, given ξ and its
/// derivative with respect to the estimated parameter.
pub fn photon_number_fi(xi: f64, dxi: f64) -> Result<PhotonNumberFi> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::domain(format!("photon-number FI needs ξ > 0, got {xi}")));
    }
    let (t, ch, sh) = (xi.tanh(), xi.cosh(), xi.sinh());
    let t2 = t * t;
    let ln_t2 = t2.ln();
    let mut ln_c = 0.0;
    let (mut fi, mut norm) = (0.0, 0.0);
    for m in 0..10_000usize {
        if m > 0 {
            ln_c += ((2 * m - 1) as f64 / (2 * m) as f64).ln();
        }
        let p = (m as f64 * ln_t2 - ch.ln() + ln_c).exp();
        // ∂_ξ ln p(2m) = 2m/(sinh ξ cosh ξ) − tanh ξ
        let score = 2.0 * m as f64 / (sh * ch) - t;
        let term = p * score * score;
        fi += term;
        norm += p;
        // Past the score's sign change successive terms shrink by at most
        // t²(1 + 1/m)², so a geometric bound covers the tail.
        if 2.0 * m as f64 > sh * sh && m > 0 {
            let r = t2 * (1.0 + 1.0 / m as f64).powi(2);
            if r < 1.0 && term * r / (1.0 - r) < 1e-12 * fi && p * r / (1.0 - r) < 1e-12 {
                let numeric = fi * dxi * dxi;
                let closed_form = 2.0 * dxi * dxi;
                if (numeric - closed_form).abs() > 1e-8 * closed_form.abs().max(f64::MIN_POSITIVE) {
                    return Err(Error::numerical(format!(
                        "photon-number FI sum {numeric:.12e} disagrees with 2(∂ξ)² = {closed_form:.12e}"
                    )));
                }
                return Ok(PhotonNumberFi { numeric, closed_form, normalization: norm, terms: m + 1 });
            }
        }
    }
    Err(Error::convergence(format!("photon-number FI series at ξ = {xi} not converged after 10⁴ terms")))
}

/// Variance of x_φ = cos φ x + sin φ p (vacuum variance 1) in the ground
/// state: x is anti-squeezed by e^{2ξ}.
pub fn quadrature_variance(lambda: f64, phi: f64) -> f64 {
    let e = (2.0 * squeezing(lambda)).exp();
    phi.cos().powi(2) * e + phi.sin().powi(2) / e
}

/// FI of homodyne detection of x_φ for Ω = ηω, from the zero-mean Gaussian
/// marginal: (∂_Ω v)²/(2v²).
pub fn homodyne_fi(lambda: f64, eta: f64, omega: f64, phi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) || !(eta > 0.0) || !(omega > 0.0) {
        return Err(Error::domain(format!("homodyne FI needs 0 ≤ λ < 1, η, ω > 0; got {lambda}, {eta}, {omega}")));
    }
    let e = (2.0 * squeezing(lambda)).exp();
    let (c2, s2) = (phi.cos().powi(2), phi.sin().powi(2));
    let v = c2 * e + s2 / e;
    let dv = 2.0 * squeezing_derivative(lambda, eta * omega) * (c2 * e - s2 / e);
    Ok(dv * dv / (2.0 * v * v))
}

/// Row lists of the nonzero entries of a real matrix.
struct RealSparse {
    rows: Vec<Vec<(usize, f64)>>,
}

impl RealSparse {
    fn from_dense(m: &CMat) -> Result<Self> {
        if !linalg::is_real(m) {
            return Err(Error::numerical("ramp Hamiltonian expected to be real"));
        }
        let rows = (0..m.nrows())
            .map(|r| (0..m.ncols()).filter(|&k| m[(r, k)].re != 0.0).map(|k| (k, m[(r, k)].re)).collect())
            .collect();
        Ok(RealSparse { rows })
    }
}

/// Which Hamiltonian the excitation dynamics uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdiabaticRoute {
    /// ω a†a − (ωλ²/4)(a + a†)², the normal-phase effective model (η → ∞).
    EffectiveQuadratic,
    /// The Rabi model at Ω = ηω.
    FullRabi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationTrace {
    pub times: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// |⟨2, ξ(t)|ψ(t)⟩|²: population of the instantaneous second excited
    /// level of the ground-state parity sector.
    pub c2_sq: Vec<f64>,
    pub ground_sq: Vec<f64>,
    /// (v0²/32)λ_end².
    pub predicted_final: f64,
    pub max_norm_drift: f64,
}

impl ExcitationTrace {
    pub fn c2_final_sq(&self) -> f64 {
        *self.c2_sq.last().expect("trace has at least one sample")
    }
}

/// Perturbative final excitation (v0²/32)(g_end/g_p)².
pub fn predicted_excitation(v0: f64, lambda_end: f64) -> f64 {
    v0 * v0 / 32.0 * lambda_end * lambda_end
}

/// Integrates the Schrödinger equation along the ramp from the g = 0 ground
/// state and projects on instantaneous eigenstates at `samples` + 1 equally
/// spaced times in [0, τ]. Fails when the ground population drops below ½.
pub fn adiabatic_excitation(
    schedule: &RampSchedule,
    eta: f64,
    cutoff: usize,
    route: AdiabaticRoute,
    samples: usize,
) -> Result<ExcitationTrace> {
    if schedule.v0 > 0.1 {
        return Err(Error::domain(format!("adiabatic analysis needs v0 ≤ 0.1, got {}", schedule.v0)));
    }
    if !(eta >= 50.0) {
        return Err(Error::domain(format!("adiabatic analysis needs η ≥ 50, got {eta}")));
    }
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let omega = schedule.omega;
    // H(λ) = h0 + f(λ)·v
    let (h0, v, f): (CMat, CMat, fn(f64, f64) -> f64) = match route {
        AdiabaticRoute::EffectiveQuadratic => {
            if cutoff < 4 {
                return Err(Error::InvalidDimension(format!("Fock cutoff must be ≥ 4, got {cutoff}")));
            }
            let a = fock::boson_lowering(cutoff);
            let x = &a + a.adjoint();
            (a.adjoint() * &a * re(omega), &x * &x * re(-omega / 4.0), |lam, _| lam * lam)
        }
        AdiabaticRoute::FullRabi => {
            let p = ModelParams::new(omega, eta * omega, 0.0, 1)?;
            let h0 = fock::build_hamiltonian(HamiltonianKind::Rabi, &p, cutoff)?.matrix;
            let h1 = fock::build_hamiltonian(HamiltonianKind::Rabi, &p.with_g(1.0), cutoff)?.matrix;
            (h0.clone(), h1 - h0, |lam, gp| lam * gp)
        }
    };
    let gp_model = (eta * omega * omega).sqrt() / 2.0;
    let ham = |lam: f64| &h0 + &v * re(f(lam, gp_model));
    let lam_at = |t: f64| schedule.coupling_at(t) / schedule.g_p;

    let tau = schedule.time_to(schedule.g_end);
    let norm_bound = linalg::norm1(&h0) + linalg::norm1(&v) * f(schedule.lambda_end(), gp_model);
    let dt_max = 0.05 / norm_bound;
    let e0 = linalg::eigh(&ham(0.0))?;
    // Both pieces are real and banded: evolve y = (Re ψ, Im ψ) with
    // d(Re ψ)/dt = H Im ψ, d(Im ψ)/dt = −H Re ψ.
    let (s0, s1) = (RealSparse::from_dense(&h0)?, RealSparse::from_dense(&v)?);
    let dim = h0.nrows();
    let ground0 = e0.vector(0);
    let mut y = DVector::from_fn(2 * dim, |i, _| if i < dim { ground0[i].re } else { ground0[i - dim].im });
    let rhs = |t: f64, y: &DVector<f64>| -> DVector<f64> {
        let fl = f(lam_at(t), gp_model);
        let mut out = DVector::zeros(2 * dim);
        for r in 0..dim {
            let (mut hu, mut hw) = (0.0, 0.0);
            for &(k, val) in &s0.rows[r] {
                hu += val * y[k];
                hw += val * y[dim + k];
            }
            for &(k, val) in &s1.rows[r] {
                hu += fl * val * y[k];
                hw += fl * val * y[dim + k];
            }
            out[r] = hw;
            out[dim + r] = -hu;
        }
        out
    };

    let mut tr = ExcitationTrace {
        times: Vec::with_capacity(samples + 1),
        lambdas: Vec::with_capacity(samples + 1),
        c2_sq: Vec::with_capacity(samples + 1),
        ground_sq: Vec::with_capacity(samples + 1),
        predicted_final: predicted_excitation(schedule.v0, schedule.lambda_end()),
        max_norm_drift: 0.0,
    };
    let mut t = 0.0;
    for k in 0..=samples {
        let tk = tau * k as f64 / samples as f64;
        if tk > t {
            let n = ((tk - t) / dt_max).ceil() as usize;
            let h = (tk - t) / n as f64;
            for j in 0..n {
                y = crate::ode::rk4_step(&rhs, t + j as f64 * h, &y, h);
            }
            t = tk;
        }
        let lam = lam_at(tk);
        let e = linalg::eigh(&ham(lam))?;
        let psi = CVec::from_fn(dim, |i, _| c(y[i], y[dim + i]));
        let p0 = linalg::inner(&e.vector(0), &psi).norm_sqr();
        let p2 = linalg::inner(&e.vector(2), &psi).norm_sqr();
        tr.max_norm_drift = tr.max_norm_drift.max((psi.norm() - 1.0).abs());
        if p0 < 0.5 {
            return Err(Error::convergence(format!(
                "adiabaticity failure: ground-state population {p0:.3} at λ = {lam:.4}"
            )));
        }
        tr.times.push(tk);
        tr.lambdas.push(lam);
        tr.c2_sq.push(p2);
        tr.ground_sq.push(p0);
    }
    if tr.max_norm_drift > 1e-6 {
        return Err(Error::convergence(format!("norm drift {:.3e} in ramp evolution", tr.max_norm_drift)));
    }
    Ok(tr)
}

/// Summary of one ramp: duration, QFI for Ω, and what the two ideal
/// measurements extract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolReport {
    pub lambda: f64,
    pub eta: f64,
    pub omega: f64,
    pub tau: Duration,
    /// Exact squeezed-vacuum QFI for Ω.
    pub qfi: f64,
    pub qfi_quoted: f64,
    /// Ω√qfi.
    pub snr: f64,
    pub fi_photon_number: f64,
    pub c2_final_sq: Option<f64>,
    pub in_window: bool,
}

impl ProtocolReport {
    pub fn fi_homodyne(&self, phi: f64) -> f64 {
        homodyne_fi(self.lambda, self.eta, self.omega, phi).expect("report built from a valid λ")
    }
}

/// Builds the report; `excitation` = Some((route, cutoff)) also integrates
/// the ramp dynamics.
pub fn protocol_report(
    schedule: &RampSchedule,
    eta: f64,
    excitation: Option<(AdiabaticRoute, usize)>,
) -> Result<ProtocolReport> {
    let omega = schedule.omega;
    let lam = schedule.lambda_end();
    let omega_q = eta * omega;
    let g = lam * (omega * omega_q).sqrt() / 2.0;
    let q = qfi_closed_form(g, omega, omega_q, PhaseLabel::Normal, QfiParameter::QubitFrequency)?;
    let qfi = q.exact.expect("normal phase has the exact form");
    let pn = photon_number_fi(squeezing(lam), squeezing_derivative(lam, omega_q))?;
    let c2_final_sq = match excitation {
        Some((route, cutoff)) => Some(adiabatic_excitation(schedule, eta, cutoff, route, 1)?.c2_final_sq()),
        None => None,
    };
    Ok(ProtocolReport {
        lambda: lam,
        eta,
        omega,
        tau: schedule.duration()?,
        qfi,
        qfi_quoted: q.quoted,
        snr: omega_q * qfi.sqrt(),
        fi_photon_number: pn.numeric,
        c2_final_sq,
        in_window: in_quadratic_window(lam, eta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub lambda: f64,
    pub tau_quadrature: f64,
    pub tau_closed_form: f64,
    pub qfi_exact: f64,
    pub qfi_quoted: f64,
    /// I·8η²/(v0⁴ω²τ⁴) with the exact I and quadrature τ.
    pub prefactor_ratio: f64,
    /// The same with the quoted I and closed-form τ.
    pub prefactor_ratio_quoted: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tau4Scaling {
    pub points: Vec<ScalingPoint>,
    /// log I_exact vs log τ_quadrature over in-window points.
    pub fit: LineFit,
    /// log I_quoted vs log τ_quadrature over the same points.
    pub fit_quoted: LineFit,
    /// Static-phase baseline I = τ² on the same durations.
    pub ramsey: LineFit,
}

/// QFI of a static phase Ωτ imprinted on an equal superposition: τ².
pub fn ramsey_qfi(tau: f64) -> f64 {
    tau * tau
}

/// QFI-vs-duration scaling for ramps ending at λ ∈ `lambdas`. Points outside
/// the quadratic-regime window are kept in the output but excluded from the
/// fits; fewer than three remaining points is a regime error.
pub fn tau4_scaling(v0: f64, eta: f64, omega: f64, lambdas: &[f64]) -> Result<Tau4Scaling> {
    let omega_q = eta * omega;
    let gp = (omega * omega_q).sqrt() / 2.0;
    let mut points = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let d = protocol_duration(v0, lam * gp, omega, gp)?;
        let q = qfi_closed_form(lam * gp, omega, omega_q, PhaseLabel::Normal, QfiParameter::QubitFrequency)?;
        let exact = q.exact.expect("normal phase");
        let scale = |tau: f64| 8.0 * eta * eta / (v0.powi(4) * omega * omega * tau.powi(4));
        points.push(ScalingPoint {
            lambda: lam,
            tau_quadrature: d.quadrature,
            tau_closed_form: d.closed_form,
            qfi_exact: exact,
            qfi_quoted: q.quoted,
            prefactor_ratio: exact * scale(d.quadrature),
            prefactor_ratio_quoted: q.quoted * scale(d.closed_form),
            in_window: in_quadratic_window(lam, eta),
        });
    }
    let valid: Vec<&ScalingPoint> = points.iter().filter(|p| p.in_window).collect();
    if valid.len() < 3 {
        return Err(Error::domain(format!(
            "only {} of {} grid points satisfy 1 − λ > 5η^(−2/3) = {:.4}; the fit leaves the quadratic regime",
            valid.len(),
            points.len(),
            5.0 * eta.powf(-2.0 / 3.0)
        )));
    }
    let taus: Vec<f64> = valid.iter().map(|p| p.tau_quadrature).collect();
    let fit = loglog_fit(&taus, &valid.iter().map(|p| p.qfi_exact).collect::<Vec<_>>())?;
    let fit_quoted = loglog_fit(&taus, &valid.iter().map(|p| p.qfi_quoted).collect::<Vec<_>>())?;
    let ramsey = loglog_fit(&taus, &taus.iter().map(|&t| ramsey_qfi(t)).collect::<Vec<_>>())?;
    Ok(Tau4Scaling { points, fit, fit_quoted, ramsey })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sched(v0: f64, lam: f64) -> RampSchedule {
        RampSchedule::new(v0, 1.0, 5.0, lam * 5.0).unwrap()
    }

    #[test]
    fn duration_matches_analytic_integral() {
        for &lam in &[0.1, 0.5, 0.9, 0.99, 0.999] {
            let s = sched(0.05, lam);
            let d = s.duration().unwrap();
            let want = lam / (0.05 * (1.0 - lam * lam).sqrt());
            assert!((d.quadrature - want).abs() < 1e-9 * want, "{lam}: {} vs {want}", d.quadrature);
        }
    }

    #[test]
    fn duration_small_coupling_is_linear() {
        let d = protocol_duration(0.05, 1e-4, 1.0, 5.0).unwrap();
        let want = 1e-4 / (0.05 * 5.0);
        assert!((d.quadrature - want).abs() < 1e-6 * want);
        assert!((d.closed_form - want).abs() < 1e-4 * want);
    }

    #[test]
    fn quoted_duration_has_inverse_square_root_law() {
        // 1 − λ log-spaced from 0.1 to 0.001
        let gaps: Vec<f64> = (0..9).map(|k| 10f64.powf(-1.0 - k as f64 / 4.0)).collect();
        let taus: Vec<f64> = gaps.iter().map(|&d| sched(0.05, 1.0 - d).duration().unwrap().closed_form).collect();
        let f = loglog_fit(&gaps, &taus).unwrap();
        assert!((f.slope + 0.5).abs() < 0.02, "{}", f.slope);
    }

    #[test]
    fn closed_form_over_quadrature_tends_to_sqrt_two() {
        let d = sched(0.05, 1.0 - 1e-7).duration().unwrap();
        assert!((d.deviation + 1.0 - core::f64::consts::SQRT_2).abs() < 1e-6, "{}", d.deviation);
    }

    #[test]
    fn duration_refuses_end_at_or_beyond_critical_point() {
        assert!(matches!(protocol_duration(0.05, 5.0, 1.0, 5.0), Err(Error::Domain(_))));
        assert!(matches!(protocol_duration(0.05, 6.0, 1.0, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_reaches_end_at_duration() {
        let s = sched(0.05, 0.99);
        let tau = s.duration().unwrap().quadrature;
        assert!((s.coupling_at(tau) - s.g_end).abs() < 1e-8 * s.g_end);
        let g = s.integrate_profile(&[0.25 * tau, 0.5 * tau, tau], 2000).unwrap();
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((g[2] - s.g_end).abs() < 1e-8 * s.g_end, "{} vs {}", g[2], s.g_end);
        assert!((g[0] - s.coupling_at(0.25 * tau)).abs() < 1e-10);
    }

    #[test]
    fn zero_coupling_qfi_is_one_over_eight_omega_squared() {
        let q = qfi_closed_form(0.0, 1.0, 3.0, PhaseLabel::Normal, QfiParameter::QubitFrequency).unwrap();
        assert!((q.quoted - 1.0 / 72.0).abs() < 1e-15);
        assert_eq!(q.exact, Some(0.0));
    }

    #[test]
    fn field_and_qubit_snr_coincide() {
        let (w, om): (f64, f64) = (1.0, 50.0);
        let gp = (w * om).sqrt() / 2.0;
        for &lam in &[0.3, 0.8, 0.99] {
            let a = qfi_closed_form(lam * gp, w, om, PhaseLabel::Normal, QfiParameter::QubitFrequency).unwrap();
            let b = qfi_closed_form(lam * gp, w, om, PhaseLabel::Normal, QfiParameter::FieldFrequency).unwrap();
            assert!((a.snr_quoted - b.snr_quoted).abs() < 1e-12 * a.snr_quoted);
            assert!((a.snr_exact.unwrap() - b.snr_exact.unwrap()).abs() < 1e-12 * a.snr_quoted);
            let want = gp * gp / (gp * gp - (lam * gp).powi(2)) / (2.0 * 2f64.sqrt());
            assert!((a.snr_quoted - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn qfi_phase_mismatch_is_domain_error() {
        let gp = 0.5;
        assert!(qfi_closed_form(0.6, 1.0, 1.0, PhaseLabel::Normal, QfiParameter::QubitFrequency).is_err());
        assert!(qfi_closed_form(0.4, 1.0, 1.0, PhaseLabel::Ordered, QfiParameter::QubitFrequency).is_err());
        assert!(qfi_closed_form(gp, 1.0, 1.0, PhaseLabel::Ordered, QfiParameter::QubitFrequency).is_err());
        let s = qfi_closed_form(0.6, 1.0, 1.0, PhaseLabel::Ordered, QfiParameter::QubitFrequency).unwrap();
        assert!(s.quoted > 0.0 && s.exact.is_none());
    }

    #[test]
    fn exact_qfi_equals_fidelity_susceptibility_of_squeezed_vacuum() {
        // Independent route: ground state of ω a†a − (ωλ²/4)x² by exact
        // diagonalisation, infidelity under Ω → Ω ± δ.
        let (om, lam): (f64, f64) = (10.0, 0.7);
        let n = 60;
        let a = fock::boson_lowering(n);
        let x = &a + a.adjoint();
        let ground = |omq: f64| {
            let l2 = 4.0 * (lam * om.sqrt() / 2.0).powi(2) / omq;
            let h = a.adjoint() * &a - &x * &x * re(l2 / 4.0);
            linalg::eigh(&h).unwrap().vector(0)
        };
        let d = 1e-3;
        let inf = fock::infidelity(&ground(om - d), &ground(om + d));
        let numeric = 8.0 * inf / (2.0 * d).powi(2);
        let q =
            qfi_closed_form(lam * om.sqrt() / 2.0, 1.0, om, PhaseLabel::Normal, QfiParameter::QubitFrequency).unwrap();
        let exact = q.exact.unwrap();
        assert!((numeric - exact).abs() < 1e-4 * exact, "{numeric} vs {exact}");
    }

    #[test]
    fn photon_distribution_normalised() {
        let s: f64 = (0..400).map(|m| photon_number_probability(0.8, m)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let r = photon_number_fi(0.8, 1.0).unwrap();
        assert!((r.normalization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn photon_number_fi_reaches_eighteen() {
        let r = photon_number_fi(0.5, 3.0).unwrap();
        assert!((r.numeric - 18.0).abs() < 1e-8 * 18.0, "{}", r.numeric);
        assert_eq!(r.closed_form, 18.0);
    }

    #[test]
    fn photon_number_fi_saturates_exact_qfi() {
        let om = 100.0;
        for &lam in &[0.3, 0.9, 0.999] {
            let r = photon_number_fi(squeezing(lam), squeezing_derivative(lam, om)).unwrap();
            let q = qfi_closed_form(lam * om.sqrt() / 2.0, 1.0, om, PhaseLabel::Normal, QfiParameter::QubitFrequency)
                .unwrap()
                .exact
                .unwrap();
            assert!((r.numeric - q).abs() < 1e-8 * q, "{lam}: {} vs {q}", r.numeric);
        }
    }

    #[test]
    fn photon_number_fi_refuses_vacuum() {
        assert!(photon_number_fi(0.0, 1.0).is_err());
    }

    #[test]
    fn homodyne_on_x_and_p_saturates_qfi() {
        for &lam in &[0.1, 0.5, 0.9, 0.999] {
            let q = 2.0 * squeezing_derivative(lam, 100.0).powi(2);
            for phi in [0.0, core::f64::consts::FRAC_PI_2] {
                let f = homodyne_fi(lam, 100.0, 1.0, phi).unwrap();
                assert!((f / q - 1.0).abs() < 1e-8, "λ={lam} φ={phi}: {}", f / q);
            }
        }
    }

    #[test]
    fn diagonal_homodyne_ratio_is_tanh_squared() {
        // v = cosh 2ξ along φ = π/4, so FI/QFI = tanh²(2ξ) → 1 as λ → 1.
        let phi = core::f64::consts::FRAC_PI_4;
        let mut last = 0.0;
        for &lam in &[0.5, 0.9, 0.99, 0.995, 0.999, 0.9999] {
            let q = 2.0 * squeezing_derivative(lam, 100.0).powi(2);
            let r = homodyne_fi(lam, 100.0, 1.0, phi).unwrap() / q;
            let want = (2.0 * squeezing(lam)).tanh().powi(2);
            assert!((r - want).abs() < 1e-12, "{lam}: {r} vs {want}");
            assert!(r > last);
            last = r;
        }
        // 0.99 is reached only from λ ≈ 0.99875 on; at λ = 0.995 the ratio is 0.961.
        let r =
            |lam: f64| homodyne_fi(lam, 100.0, 1.0, phi).unwrap() / (2.0 * squeezing_derivative(lam, 100.0).powi(2));
        assert!((r(0.995) - 0.9610).abs() < 1e-3);
        assert!(r(0.999) >= 0.99);
    }

    #[test]
    fn report_obeys_cramer_rao_and_snr_definition() {
        let s = RampSchedule::new(0.05, 1.0, 5.0, 4.5).unwrap();
        let r = protocol_report(&s, 1e4, None).unwrap();
        assert!(r.fi_photon_number <= r.qfi * (1.0 + 1e-8));
        for k in 0..32 {
            assert!(r.fi_homodyne(k as f64 * 0.1) <= r.qfi * (1.0 + 1e-8));
        }
        assert!((r.snr - 1e4 * r.qfi.sqrt()).abs() < 1e-12 * r.snr);
        assert!(r.in_window);
        // 5η^{-2/3} = 0.23 at η = 100: λ = 0.9 is outside the window there.
        assert!(!protocol_report(&s, 100.0, None).unwrap().in_window);
    }

    #[test]
    fn slow_ramp_barely_excites() {
        let a = adiabatic_excitation(&sched(0.01, 0.9), 100.0, 30, AdiabaticRoute::EffectiveQuadratic, 4).unwrap();
        let b = adiabatic_excitation(&sched(0.04, 0.9), 100.0, 30, AdiabaticRoute::EffectiveQuadratic, 4).unwrap();
        assert!(a.c2_final_sq() < 1e-4);
        assert!(a.c2_final_sq() < b.c2_final_sq() / 8.0);
        assert!(a.ground_sq.iter().all(|&p| p > 0.999));
    }

    #[test]
    fn effective_ramp_matches_perturbative_excitation() {
        let tr = adiabatic_excitation(&sched(0.05, 0.9), 100.0, 40, AdiabaticRoute::EffectiveQuadratic, 10).unwrap();
        let ratio = tr.c2_final_sq() / tr.predicted_final;
        assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
        assert!(tr.max_norm_drift < 1e-8);
    }

    #[test]
    fn adiabatic_preconditions() {
        assert!(adiabatic_excitation(&sched(0.2, 0.9), 100.0, 30, AdiabaticRoute::EffectiveQuadratic, 4).is_err());
        assert!(adiabatic_excitation(&sched(0.05, 0.9), 10.0, 30, AdiabaticRoute::EffectiveQuadratic, 4).is_err());
    }

    #[test]
    fn tau4_slope_and_prefactor() {
        let lams = [0.9, 0.93, 0.95, 0.97, 0.98, 0.985, 0.99, 0.995, 0.999];
        let s = tau4_scaling(0.05, 1e4, 1.0, &lams).unwrap();
        assert!((s.fit.slope - 4.0).abs() < 0.1, "{}", s.fit.slope);
        assert!((s.ramsey.slope - 2.0).abs() < 0.05);
        assert!(s.points.iter().filter(|p| !p.in_window).count() >= 2);
        for p in &s.points {
            assert!((0.2..=5.0).contains(&p.prefactor_ratio), "{p:?}");
        }
    }

    #[test]
    fn tau4_refuses_grid_outside_window() {
        assert!(matches!(tau4_scaling(0.05, 100.0, 1.0, &[0.9, 0.95, 0.99]), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn qfi_increases_with_coupling(a in 0.01f64..0.98, b in 0.01f64..0.98) {
            prop_assume!((a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let q = |l: f64| qfi_closed_form(l * 2.5, 1.0, 25.0, PhaseLabel::Normal, QfiParameter::QubitFrequency).unwrap();
            prop_assert!(q(hi).quoted > q(lo).quoted);
            prop_assert!(q(hi).exact.unwrap() > q(lo).exact.unwrap());
        }

        #[test]
        fn homodyne_never_beats_qfi(lam in 0.0f64..0.9999, phi in 0.0f64..6.3) {
            let q = 2.0 * squeezing_derivative(lam, 50.0).powi(2);
            prop_assert!(homodyne_fi(lam, 50.0, 1.0, phi).unwrap() <= q * (1.0 + 1e-8) + 1e-300);
        }

        #[test]
        fn inverse_profile_round_trip(lam in 0.01f64..0.9999) {
            let s = sched(0.07, lam);
            let tau = s.duration().unwrap().quadrature;
            prop_assert!((s.coupling_at(tau) - s.g_end).abs() < 1e-8 * s.g_end);
        }
    }
}
