//! Closed-form approximate spectra, potentials and mean-field solutions,
//! each tagged with the regime it is valid in.
//!
//! Squeezing signs: the one-photon normal phase returns ξ = −¼ln(1−λ²) (a
//! positive number, x̂ anti-squeezed), the two-photon normal phase returns
//! ξ_b = +¼ln(1−λ²). Compare |ξ| or variances, not raw signs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::special::{artanh, coth, laguerre};

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSpectrum {
    /// (label, energy), ascending in energy.
    pub levels: Vec<(String, f64)>,
    pub validity_note: &'static str,
    pub squeezing: Option<f64>,
    /// E₁ − E₀ when at least two levels are reported.
    pub gap: Option<f64>,
    /// ⟨x²⟩ of the ground state when the model predicts it.
    pub x2: Option<f64>,
    /// (quadratic, quartic) coefficients of the field potential in units of ω.
    pub potential: Option<(f64, f64)>,
}

impl EffectiveSpectrum {
    fn from_levels(mut levels: Vec<(String, f64)>, validity_note: &'static str) -> Self {
        levels.sort_by(|a, b| a.1.total_cmp(&b.1));
        let gap = (levels.len() >= 2).then(|| levels[1].1 - levels[0].1);
        EffectiveSpectrum { levels, validity_note, squeezing: None, gap, x2: None, potential: None }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.1).collect()
    }
}

fn ladder(e0: f64, step: f64, count: usize) -> Vec<(String, f64)> {
    (0..count).map(|m| (format!("m={m}"), e0 + m as f64 * step)).collect()
}

/// Jaynes–Cummings doublet of the n-th excitation manifold, energies
/// measured with the qubit ground state at zero:
/// nω + (ω+Ω)/2 ± √((ω−Ω)²/4 + g²(n+1)); at resonance (n+1)ω ± g√(n+1).
pub fn jc_doublet(n: usize, g: f64, omega: f64, omega_q: f64) -> EffectiveSpectrum {
    let nf = n as f64;
    let det = omega - omega_q;
    let root = (det * det / 4.0 + g * g * (nf + 1.0)).sqrt();
    let mid = nf * omega + 0.5 * (omega + omega_q);
    EffectiveSpectrum::from_levels(
        alloc::vec![(format!("{n},-"), mid - root), (format!("{n},+"), mid + root)],
        "exact for the rotating-wave model; Rabi physics when g/ω ≲ 0.1",
    )
}

/// ω_BS = g²/(ω+Ω).
pub fn bloch_siegert_shift(g: f64, omega: f64, omega_q: f64) -> f64 {
    g * g / (omega + omega_q)
}

/// Bloch–Siegert levels in the symmetric qubit reference (|↓,0⟩ at −Ω/2
/// when g = 0). n = 0 gives the ground level −Ω/2 − ω_BS; n ≥ 1 gives the
/// doublet (n−½)ω − ω_BS ± √((Ω−ω+2nω_BS)²/4 + n g²).
pub fn bloch_siegert_spectrum(n: usize, g: f64, omega: f64, omega_q: f64) -> EffectiveSpectrum {
    let wbs = bloch_siegert_shift(g, omega, omega_q);
    let note = "second order in g; use for g/ω ≲ 0.3";
    if n == 0 {
        return EffectiveSpectrum::from_levels(alloc::vec![(String::from("0"), -omega_q / 2.0 - wbs)], note);
    }
    let nf = n as f64;
    let d = omega_q - omega + 2.0 * nf * wbs;
    let root = (d * d / 4.0 + nf * g * g).sqrt();
    let mid = (nf - 0.5) * omega - wbs;
    EffectiveSpectrum::from_levels(alloc::vec![(format!("{n},-"), mid - root), (format!("{n},+"), mid + root)], note)
}

/// Generalised-RWA doublet (N − α₀²)ω ± (Ω/2)e^{−2α₀²}L_N(4α₀²).
pub fn grwa_spectrum(n: usize, alpha0: f64, omega: f64, omega_q: f64) -> EffectiveSpectrum {
    let a2 = alpha0 * alpha0;
    let split = 0.5 * omega_q * (-2.0 * a2).exp() * laguerre(n, 4.0 * a2);
    let mid = (n as f64 - a2) * omega;
    EffectiveSpectrum::from_levels(
        alloc::vec![(format!("{n},-"), mid - split.abs()), (format!("{n},+"), mid + split.abs())],
        "deep-strong coupling, perturbative in Ω/ω",
    )
}

/// The lowest `count` gRWA levels over all manifolds, ascending.
pub fn grwa_levels(count: usize, alpha0: f64, omega: f64, omega_q: f64) -> Vec<f64> {
    let mut all: Vec<f64> = (0..count + 2).flat_map(|n| grwa_spectrum(n, alpha0, omega, omega_q).energies()).collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2Renormalized {
    pub omega_eff: f64,
    pub g_eff: f64,
    /// 4g_eff²/(ω_eff Ω).
    pub ratio: f64,
    pub superradiance_possible: bool,
}

/// Absorbs a diamagnetic term of strength r·g²/Ω into the field.
pub fn a2_renormalize(omega: f64, omega_q: f64, g: f64, r: f64) -> Result<A2Renormalized> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("diamagnetic strength r must be positive, got {r}")));
    }
    let s = 1.0 + 4.0 * r * g * g / (omega * omega_q);
    let omega_eff = omega * s.sqrt();
    let g_eff = g / s.powf(0.25);
    let ratio = 4.0 * g_eff * g_eff / (omega_eff * omega_q);
    Ok(A2Renormalized { omega_eff, g_eff, ratio, superradiance_possible: ratio >= 1.0 })
}

/// Normal-phase polariton energies E₋ ≤ E₊ of the linearised Dicke model,
/// E±² = ½(ω² + Ω² ± √((ω²−Ω²)² + 16g²ωΩ)).
pub fn dicke_polaritons(omega: f64, omega_q: f64, g_coll: f64) -> Result<EffectiveSpectrum> {
    let gp = (omega * omega_q).sqrt() / 2.0;
    if g_coll > gp {
        return Err(Error::domain(format!("g = {g_coll} exceeds g_p = {gp}: E₋ is imaginary (normal phase invalid)")));
    }
    let s = omega * omega + omega_q * omega_q;
    let d = omega * omega - omega_q * omega_q;
    let ep2 = 0.5 * (s + (d * d + 16.0 * g_coll * g_coll * omega * omega_q).sqrt());
    // E₊²E₋² = ω²Ω²(1 − λ²) with λ = g/g_p, exact zero at g = g_p.
    let lam = if gp > 0.0 { g_coll / gp } else { 0.0 };
    let em2 = (omega * omega_q).powi(2) * (1.0 - lam) * (1.0 + lam) / ep2;
    Ok(EffectiveSpectrum::from_levels(
        alloc::vec![(String::from("E-"), em2.max(0.0).sqrt()), (String::from("E+"), ep2.sqrt())],
        "Holstein–Primakoff linearisation, normal phase",
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseLabel {
    Normal,
    Ordered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSolution {
    /// Non-negative branch: α_g for the Rabi field, β for the two-photon
    /// Holstein–Primakoff mode. The other minimum is its negative.
    pub order_parameter: f64,
    pub ground_energy: f64,
    /// Rotation of the spin quantisation axis away from z (radians).
    pub spin_tilt: f64,
    pub phase: PhaseLabel,
    /// Field squeezing parameter where the model has one (two-photon).
    pub squeezing: f64,
}

/// Rabi mean field in units ω = 1, Ω = η.
/// α_g = √η·√((λ⁴−1)/(4λ²)), E_G = −η/2 (λ ≤ 1) or −(η/4)(λ⁴+1)/λ²,
/// spin tilt arccos(1/λ²).
pub fn rabi_mean_field(lambda: f64, eta: f64) -> Result<MeanFieldSolution> {
    if !(eta > 0.0) || !(lambda >= 0.0) {
        return Err(Error::domain(format!("need η > 0 and λ ≥ 0, got η={eta}, λ={lambda}")));
    }
    if lambda <= 1.0 {
        return Ok(MeanFieldSolution {
            order_parameter: 0.0,
            ground_energy: -eta / 2.0,
            spin_tilt: 0.0,
            phase: PhaseLabel::Normal,
            squeezing: 0.0,
        });
    }
    let l2 = lambda * lambda;
    let l4 = l2 * l2;
    Ok(MeanFieldSolution {
        order_parameter: eta.sqrt() * ((l4 - 1.0) / (4.0 * l2)).sqrt(),
        ground_energy: -(eta / 4.0) * (l4 + 1.0) / l2,
        spin_tilt: (1.0 / l2).acos(),
        phase: PhaseLabel::Ordered,
        squeezing: 0.0,
    })
}

/// Spin amplitudes (c_↑, c_↓) of the mean-field qubit state on the
/// positive-α branch: (−sin(θ/2), cos(θ/2)) with θ the spin tilt. This is
/// |↓⟩ in the normal phase.
pub fn rabi_mean_field_spin(lambda: f64) -> (f64, f64) {
    if lambda <= 1.0 {
        return (0.0, 1.0);
    }
    let l2 = lambda * lambda;
    (-((l2 - 1.0) / (2.0 * l2)).sqrt(), ((l2 + 1.0) / (2.0 * l2)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialPhase {
    Normal,
    Superradiant,
    Quartic,
}

/// Harmonic (or quartic) field potential from the order-2 (order-4)
/// Schrieffer–Wolff expansion of the Rabi model, ω = 1, Ω = η.
pub fn rabi_effective_potential(lambda: f64, eta: f64, phase: PotentialPhase) -> Result<EffectiveSpectrum> {
    match phase {
        PotentialPhase::Normal => {
            if !(0.0..1.0).contains(&lambda) {
                return Err(Error::domain(format!("normal-phase potential needs 0 ≤ λ < 1, got {lambda}")));
            }
            let s = 1.0 - lambda * lambda;
            let gap = s.sqrt();
            let e0 = -eta / 2.0 + 0.5 * (gap - 1.0);
            let mut spec = EffectiveSpectrum::from_levels(ladder(e0, gap, 5), "η → ∞, λ < 1");
            spec.squeezing = Some(-0.25 * s.ln());
            spec.x2 = Some(1.0 / gap);
            Ok(spec)
        }
        PotentialPhase::Superradiant => {
            if !(lambda > 1.0) {
                return Err(Error::domain(format!("superradiant potential needs λ > 1, got {lambda}")));
            }
            let s = 1.0 - lambda.powi(-4);
            let gap = s.sqrt();
            let e0 = rabi_mean_field(lambda, eta)?.ground_energy + 0.5 * (gap - 1.0);
            let mut spec = EffectiveSpectrum::from_levels(ladder(e0, gap, 5), "η → ∞, λ > 1");
            spec.squeezing = Some(-0.25 * s.ln());
            spec.x2 = Some(1.0 / gap);
            Ok(spec)
        }
        PotentialPhase::Quartic => {
            let mut spec = EffectiveSpectrum::from_levels(Vec::new(), "|1 − λ| ≲ η^{-2/3}");
            spec.potential = Some(((1.0 - lambda * lambda) / 4.0, lambda.powi(4) / (16.0 * eta)));
            Ok(spec)
        }
    }
}

/// Squeezed-vacuum ansatz ⟨x²⟩ = y near the critical point: the positive
/// root of −1/y² + (1−λ²) + 3λ⁴y/(2η) = 0, i.e. of
/// (3λ⁴/2η)y³ + (1−λ²)y² − 1 = 0, which has exactly one positive root.
pub fn rabi_critical_ansatz(eta: f64, lambda: f64) -> Result<f64> {
    if !(eta >= 10.0) {
        return Err(Error::domain(format!("ansatz needs η ≥ 10, got {eta}")));
    }
    let a = 1.5 * lambda.powi(4) / eta;
    let b = 1.0 - lambda * lambda;
    let f = |y: f64| (a * y + b) * y * y - 1.0;
    if a == 0.0 && b <= 0.0 {
        return Err(Error::domain("no positive root: quartic term vanishes and λ ≥ 1"));
    }
    // Bracket: f(0) = −1 < 0; grow until positive.
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::domain("no positive root of the ansatz cubic"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteTemperature {
    pub omega: f64,
    pub omega_q: f64,
    pub temperature: f64,
    /// g_p(T) = √((ωΩ/4)coth(Ω/2k_BT)).
    pub g_p: f64,
}

impl FiniteTemperature {
    /// ⟨x²⟩ = (1−λ)^{−1/2} coth(ω√(1−λ)/k_BT) with λ = g/g_p(T).
    pub fn fluctuations(&self, lambda: f64) -> Result<f64> {
        if !(lambda < 1.0) {
            return Err(Error::domain(format!("fluctuations need λ < 1, got {lambda}")));
        }
        let s = (1.0 - lambda).sqrt();
        let th = if self.temperature == 0.0 { 1.0 } else { coth(self.omega * s / self.temperature) };
        Ok(th / s)
    }
}

/// Units k_B = 1.
pub fn finite_temperature(omega: f64, omega_q: f64, temperature: f64) -> Result<FiniteTemperature> {
    if !(temperature >= 0.0) {
        return Err(Error::domain(format!("temperature must be ≥ 0, got {temperature}")));
    }
    let c = if temperature == 0.0 { 1.0 } else { coth(omega_q / (2.0 * temperature)) };
    Ok(FiniteTemperature { omega, omega_q, temperature, g_p: (omega * omega_q / 4.0 * c).sqrt() })
}

/// Two-photon Dicke critical couplings (g_p, g_c) = (√(ωΩN/4), ω/2).
pub fn two_photon_couplings(omega: f64, omega_q: f64, n: usize) -> (f64, f64) {
    ((omega * omega_q * n as f64 / 4.0).sqrt(), omega / 2.0)
}

/// g_α = g(β+β*)√(1−β²) for real β.
pub fn two_photon_g_alpha(g: f64, beta: f64) -> f64 {
    2.0 * g * beta * (1.0 - beta * beta).sqrt()
}

/// Mean field of the two-photon Dicke model with the Holstein–Primakoff
/// mode in a coherent state √N β. Ground energy
/// √(ω²/4 − g_α²) + NΩβ² − NΩ/2 − ω/2; squeezing ξ_b = ½artanh(2g_α/ω).
pub fn two_photon_mean_field(g: f64, omega: f64, omega_q: f64, n: usize) -> Result<MeanFieldSolution> {
    let (gp, gc) = two_photon_couplings(omega, omega_q, n);
    if !(g < gc) {
        return Err(Error::domain(format!("g = {g} at or beyond the spectral collapse g_c = {gc}")));
    }
    let nf = n as f64;
    let beta = if g <= gp {
        0.0
    } else {
        let rc = (g / gc).powi(2);
        let rp = (g / gp).powi(4);
        (0.5 * (1.0 - ((1.0 - rc) / (rp - rc)).sqrt())).sqrt()
    };
    let ga = two_photon_g_alpha(g, beta);
    let energy = (omega * omega / 4.0 - ga * ga).sqrt() + nf * omega_q * beta * beta - nf * omega_q / 2.0 - omega / 2.0;
    Ok(MeanFieldSolution {
        order_parameter: beta,
        ground_energy: energy,
        // ⟨Jz⟩ = N(β² − ½): the collective spin leaves −z by arccos(1 − 2β²).
        spin_tilt: (1.0 - 2.0 * beta * beta).acos(),
        phase: if beta > 0.0 { PhaseLabel::Ordered } else { PhaseLabel::Normal },
        squeezing: 0.5 * artanh(2.0 * ga / omega),
    })
}

/// Mean-field energy E_G(β) for any β, used to check the minimiser.
pub fn two_photon_energy(beta: f64, g: f64, omega: f64, omega_q: f64, n: usize) -> f64 {
    let ga = two_photon_g_alpha(g, beta);
    let nf = n as f64;
    (omega * omega / 4.0 - ga * ga).sqrt() + nf * omega_q * beta * beta - nf * omega_q / 2.0 - omega / 2.0
}

/// Squeezed-Fock ladders of the two-photon Dicke Holstein–Primakoff mode.
/// Normal (λ < 1): ξ_b = ¼ln(1−λ²), E_m = mΩ√(1−λ²).
/// Squeezed (λ > 1, g < g_c): ξ_b = −¼ln(λ⁴/(4(λ⁴−1))·(1+√((1−r)/(λ⁴−r)))²),
/// E_m = mΩ√((λ⁴−r)(1−λ⁻⁴)/(1−r)), r = g²/g_c².
pub fn two_photon_phase_spectra(lambda: f64, g: f64, g_c: f64, omega_q: f64) -> Result<EffectiveSpectrum> {
    if (0.0..1.0).contains(&lambda) {
        let s = 1.0 - lambda * lambda;
        let mut spec = EffectiveSpectrum::from_levels(ladder(0.0, omega_q * s.sqrt(), 5), "normal phase, N → ∞");
        spec.squeezing = Some(0.25 * s.ln());
        return Ok(spec);
    }
    if lambda > 1.0 && g < g_c {
        let r = (g / g_c).powi(2);
        let l4 = lambda.powi(4);
        let inner = 1.0 + ((1.0 - r) / (l4 - r)).sqrt();
        let xi = -0.25 * (l4 / (4.0 * (l4 - 1.0)) * inner * inner).ln();
        let step = omega_q * ((l4 - r) * (1.0 - 1.0 / l4) / (1.0 - r)).sqrt();
        let mut spec = EffectiveSpectrum::from_levels(ladder(0.0, step, 5), "squeezed phase, N → ∞, below collapse");
        spec.squeezing = Some(xi);
        return Ok(spec);
    }
    Err(Error::domain(format!(
        "two-photon ladder defined for 0 ≤ λ < 1 or λ > 1 with g < g_c; got λ={lambda}, g={g}, g_c={g_c}"
    )))
}

/// Wineland spin-squeezing ratio e^{2ξ_b} of the normal phase.
pub fn wineland_ratio(lambda: f64) -> Result<f64> {
    let spec = two_photon_phase_spectra(lambda, 0.0, 1.0, 1.0)?;
    Ok((2.0 * spec.squeezing.unwrap_or(0.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalRegime {
    /// Ground-state quantum phase transition.
    Qpt,
    /// Classical (finite-temperature) transition.
    Cpt,
    /// Non-equilibrium steady state.
    Ness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalExponents {
    pub beta_exp: f64,
    pub gamma_exp: f64,
    pub zeta_exp: f64,
    pub regime: CriticalRegime,
}

impl CriticalExponents {
    pub fn table(regime: CriticalRegime) -> Self {
        match regime {
            CriticalRegime::Qpt => CriticalExponents { beta_exp: 0.5, gamma_exp: 0.5, zeta_exp: 1.0 / 3.0, regime },
            CriticalRegime::Cpt | CriticalRegime::Ness => {
                CriticalExponents { beta_exp: 0.5, gamma_exp: 1.0, zeta_exp: 0.5, regime }
            }
        }
    }
}

/// Log-log slope of (control, observable). Needs ≥ 6 points spanning at
/// least 1.5 decades of the control parameter.
pub fn critical_exponent_fit(series: &[(f64, f64)]) -> Result<LineFit> {
    if series.len() < 6 {
        return Err(Error::domain(format!("exponent fit needs ≥ 6 points, got {}", series.len())));
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < 1.5 - 1e-12 {
        return Err(Error::domain(format!("control range [{lo}, {hi}] spans less than 1.5 decades")));
    }
    loglog_fit(&xs, &ys)
}
