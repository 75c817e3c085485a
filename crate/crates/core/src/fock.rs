//! Truncated Fock ⊗ spin space: operators, model Hamiltonians, exact
//! diagonalisation, time evolution and fidelity-susceptibility QFI.
//!
//! Basis index = spin_index · dim_boson + n, spin states ordered
//! m = +j, …, −j (spin up first). The boson cutoff is the number of Fock
//! states kept, so `cutoff = 3` spans |0⟩, |1⟩, |2⟩.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, c, re, CMat, CVec, Eigh};

/// Primary model parameters. Derived ratios are methods, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Boson frequency ω.
    pub omega: f64,
    /// Qubit splitting Ω.
    pub omega_q: f64,
    pub g: f64,
    pub n_qubits: usize,
}

impl ModelParams {
    pub fn new(omega: f64, omega_q: f64, g: f64, n_qubits: usize) -> Result<Self> {
        let p = ModelParams { omega, omega_q, g, n_qubits };
        p.validate()?;
        Ok(p)
    }

    /// Single qubit with ω = 1, Ω = η and g = λ g_p for the given model.
    pub fn from_eta_lambda(kind: HamiltonianKind, eta: f64, lambda: f64) -> Result<Self> {
        let mut p = ModelParams::new(1.0, eta, 0.0, 1)?;
        p.g = lambda * kind.critical_coupling(&p);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.omega_q >= 0.0) || !(self.g >= 0.0) || self.n_qubits == 0 {
            return Err(Error::domain(format!(
                "need ω > 0, Ω ≥ 0, g ≥ 0, N ≥ 1; got ω={}, Ω={}, g={}, N={}",
                self.omega, self.omega_q, self.g, self.n_qubits
            )));
        }
        Ok(())
    }

    /// η = Ω/ω.
    pub fn eta(&self) -> f64 {
        self.omega_q / self.omega
    }

    /// η̃ = NΩ/ω.
    pub fn eta_tilde(&self) -> f64 {
        self.n_qubits as f64 * self.omega_q / self.omega
    }

    /// λ = g/g_p for the given model.
    pub fn lambda(&self, kind: HamiltonianKind) -> f64 {
        self.g / kind.critical_coupling(self)
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }
}

/// Dense operator on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub dim_boson: usize,
    pub dim_spin: usize,
    pub matrix: CMat,
    pub hermitian: bool,
}

impl TruncatedOperator {
    pub fn new(dim_boson: usize, dim_spin: usize, matrix: CMat, hermitian: bool) -> Result<Self> {
        let d = dim_boson * dim_spin;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidDimension(format!(
                "matrix is {}x{}, declared {}·{} = {}",
                matrix.nrows(),
                matrix.ncols(),
                dim_boson,
                dim_spin,
                d
            )));
        }
        if hermitian {
            let defect = linalg::hermiticity_defect(&matrix);
            if defect > 1e-12 {
                return Err(Error::numerical(format!("operator flagged Hermitian has max|M − M†| = {defect:.3e}")));
            }
        }
        Ok(TruncatedOperator { dim_boson, dim_spin, matrix, hermitian })
    }

    pub fn dim(&self) -> usize {
        self.dim_boson * self.dim_spin
    }

    /// Same operator with the Fock space cut to its lowest `cutoff` states.
    /// Every model here has cutoff-independent matrix elements, so this is
    /// exactly the Hamiltonian that would be built at the smaller cutoff.
    pub fn truncate_boson(&self, cutoff: usize) -> Result<Self> {
        if cutoff < 2 || cutoff > self.dim_boson {
            return Err(Error::InvalidDimension(format!("cannot cut {} Fock states to {}", self.dim_boson, cutoff)));
        }
        let keep: Vec<usize> =
            (0..self.dim_spin).flat_map(|s| (0..cutoff).map(move |n| s * self.dim_boson + n)).collect();
        let m = CMat::from_fn(keep.len(), keep.len(), |i, j| self.matrix[(keep[i], keep[j])]);
        Ok(TruncatedOperator { dim_boson: cutoff, dim_spin: self.dim_spin, matrix: m, hermitian: self.hermitian })
    }
}

/// Boson matrices (a, a†, a†a) on `cutoff` Fock states.
pub fn build_boson_ops(cutoff: usize) -> Result<(TruncatedOperator, TruncatedOperator, TruncatedOperator)> {
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("Fock cutoff must be ≥ 2, got {cutoff}")));
    }
    let a = boson_lowering(cutoff);
    let ad = a.adjoint();
    let num = boson_number(cutoff);
    Ok((
        TruncatedOperator::new(cutoff, 1, a, false)?,
        TruncatedOperator::new(cutoff, 1, ad, false)?,
        TruncatedOperator::new(cutoff, 1, num, true)?,
    ))
}

pub(crate) fn boson_lowering(cutoff: usize) -> CMat {
    let mut a = CMat::zeros(cutoff, cutoff);
    for m in 0..cutoff - 1 {
        a[(m, m + 1)] = re(((m + 1) as f64).sqrt());
    }
    a
}

fn boson_number(cutoff: usize) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(cutoff, |n, _| re(n as f64)))
}

/// a² built entrywise (no truncation loss from multiplying truncated a).
fn boson_lowering_sq(cutoff: usize) -> CMat {
    let mut a2 = CMat::zeros(cutoff, cutoff);
    for m in 0..cutoff.saturating_sub(2) {
        a2[(m, m + 2)] = re((((m + 1) * (m + 2)) as f64).sqrt());
    }
    a2
}

/// Collective spin operators for spin j = n_spins/2.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub jx: CMat,
    pub jy: CMat,
    pub jz: CMat,
    pub jp: CMat,
    pub jm: CMat,
}

pub fn spin_ops(n_spins: usize) -> SpinOps {
    let d = n_spins + 1;
    let j = n_spins as f64 / 2.0;
    let mut jz = CMat::zeros(d, d);
    let mut jp = CMat::zeros(d, d);
    for i in 0..d {
        let m = j - i as f64;
        jz[(i, i)] = re(m);
        if i > 0 {
            // J+|m⟩ = √(j(j+1) − m(m+1)) |m+1⟩, |m+1⟩ sits at index i−1
            jp[(i - 1, i)] = re((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * re(0.5);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    SpinOps { jx, jy, jz, jp, jm }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HamiltonianKind {
    /// ωa†a + (Ω/2)σz + g(aσ₊ + a†σ₋)
    JaynesCummings,
    /// ωa†a + (Ω/2)σz + g(a + a†)σx
    Rabi,
    /// ωa†a + ΩJz + (2g/√N)(a + a†)Jx
    Dicke,
    /// ωa†a + ΩJz + (2g/N)Jx(a² + a†²); N = 1 is the two-photon Rabi model.
    TwoPhotonDicke,
    /// ωa†a + g(a + a†)σx: the deep-strong-coupling limit where the qubit
    /// splitting is dropped (Ω is ignored).
    DscInteraction,
}

impl HamiltonianKind {
    pub const ALL: [HamiltonianKind; 5] = [
        HamiltonianKind::JaynesCummings,
        HamiltonianKind::Rabi,
        HamiltonianKind::Dicke,
        HamiltonianKind::TwoPhotonDicke,
        HamiltonianKind::DscInteraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HamiltonianKind::JaynesCummings => "jc",
            HamiltonianKind::Rabi => "rabi",
            HamiltonianKind::Dicke => "dicke",
            HamiltonianKind::TwoPhotonDicke => "two-photon-dicke",
            HamiltonianKind::DscInteraction => "dsc-interaction",
        }
    }

    /// g_p: √(ωΩ)/2 for the one-photon models, √(ωΩN/4) for two-photon Dicke.
    pub fn critical_coupling(self, p: &ModelParams) -> f64 {
        match self {
            HamiltonianKind::TwoPhotonDicke => (p.omega * p.omega_q * p.n_qubits as f64 / 4.0).sqrt(),
            _ => (p.omega * p.omega_q).sqrt() / 2.0,
        }
    }

    pub fn spin_dim(self, p: &ModelParams) -> usize {
        match self {
            HamiltonianKind::Dicke | HamiltonianKind::TwoPhotonDicke => p.n_qubits + 1,
            _ => 2,
        }
    }

    pub fn is_single_qubit(self) -> bool {
        matches!(self, HamiltonianKind::JaynesCummings | HamiltonianKind::Rabi | HamiltonianKind::DscInteraction)
    }
}

impl FromStr for HamiltonianKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jc" | "jaynes-cummings" => Ok(HamiltonianKind::JaynesCummings),
            "rabi" => Ok(HamiltonianKind::Rabi),
            "dicke" => Ok(HamiltonianKind::Dicke),
            "two-photon-dicke" | "two-photon-rabi" => Ok(HamiltonianKind::TwoPhotonDicke),
            "dsc-interaction" | "dsc" => Ok(HamiltonianKind::DscInteraction),
            other => Err(Error::domain(format!("unknown Hamiltonian kind `{other}`"))),
        }
    }
}

/// Builds the model Hamiltonian on `cutoff` Fock states.
pub fn build_hamiltonian(kind: HamiltonianKind, p: &ModelParams, cutoff: usize) -> Result<TruncatedOperator> {
    p.validate()?;
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("Fock cutoff must be ≥ 2, got {cutoff}")));
    }
    if kind.is_single_qubit() && p.n_qubits != 1 {
        return Err(Error::domain(format!("{} is a single-qubit model, got N = {}", kind.name(), p.n_qubits)));
    }
    let ds = kind.spin_dim(p);
    let s = spin_ops(ds - 1);
    let ib = CMat::identity(cutoff, cutoff);
    let is = CMat::identity(ds, ds);
    let a = boson_lowering(cutoff);
    let ad = a.adjoint();
    let num = boson_number(cutoff);
    let nf = p.n_qubits as f64;

    let field = linalg::kron(&is, &(num * re(p.omega)));
    let h = match kind {
        HamiltonianKind::JaynesCummings => {
            field
                + linalg::kron(&(&s.jz * re(p.omega_q)), &ib)
                + (linalg::kron(&s.jp, &a) + linalg::kron(&s.jm, &ad)) * re(p.g)
        }
        HamiltonianKind::Rabi => {
            field + linalg::kron(&(&s.jz * re(p.omega_q)), &ib) + linalg::kron(&(&s.jx * re(2.0 * p.g)), &(&a + &ad))
        }
        HamiltonianKind::DscInteraction => field + linalg::kron(&(&s.jx * re(2.0 * p.g)), &(&a + &ad)),
        HamiltonianKind::Dicke => {
            field
                + linalg::kron(&(&s.jz * re(p.omega_q)), &ib)
                + linalg::kron(&(&s.jx * re(2.0 * p.g / nf.sqrt())), &(&a + &ad))
        }
        HamiltonianKind::TwoPhotonDicke => {
            let a2 = boson_lowering_sq(cutoff);
            let x2 = &a2 + a2.adjoint();
            field + linalg::kron(&(&s.jz * re(p.omega_q)), &ib) + linalg::kron(&(&s.jx * re(2.0 * p.g / nf)), &x2)
        }
    };
    let defect = linalg::hermiticity_defect(&h);
    assert!(defect <= 1e-12, "{} Hamiltonian built non-Hermitian (defect {defect:e})", kind.name());
    TruncatedOperator::new(cutoff, ds, h, true)
}

/// Operators embedded in the full product space.
pub fn field_operator(op: &CMat, dim_spin: usize) -> CMat {
    linalg::kron(&CMat::identity(dim_spin, dim_spin), op)
}

pub fn spin_operator(op: &CMat, dim_boson: usize) -> CMat {
    linalg::kron(op, &CMat::identity(dim_boson, dim_boson))
}

/// x = a + a† on the full space.
pub fn quadrature_x(dim_boson: usize, dim_spin: usize) -> CMat {
    let a = boson_lowering(dim_boson);
    field_operator(&(&a + a.adjoint()), dim_spin)
}

/// The symmetry generator the model commutes with: e^{iπ(a†a + Jz + j)} for
/// the one-photon models, and a → ia, Jx → −Jx for two-photon Dicke.
pub fn symmetry_operator(kind: HamiltonianKind, dim_boson: usize, dim_spin: usize) -> CMat {
    let d = dim_boson * dim_spin;
    CMat::from_diagonal(&CVec::from_fn(d, |k, _| {
        let (si, n) = (k / dim_boson, k % dim_boson);
        // (−1)^{j−m}; differs from (−1)^{j+m} by the constant (−1)^{2j}
        let spin_flip = if si % 2 == 0 { 1.0 } else { -1.0 };
        match kind {
            HamiltonianKind::TwoPhotonDicke => {
                // e^{−iπn/2}
                let ph = [re(1.0), c(0.0, -1.0), re(-1.0), c(0.0, 1.0)][n % 4];
                ph * spin_flip
            }
            _ => re(if n % 2 == 0 { spin_flip } else { -spin_flip }),
        }
    }))
}

/// Lowest eigenpairs with a cutoff-halving convergence margin.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors for `eigenvalues`.
    pub eigenvectors: CMat,
    pub cutoff: usize,
    /// |E_k(cutoff) − E_k(cutoff/2)| per reported level.
    pub convergence_margin: Vec<f64>,
}

impl SpectrumResult {
    pub fn converged(&self, k: usize, tol: f64) -> bool {
        self.convergence_margin[k] <= tol
    }

    pub fn ground_state(&self) -> CVec {
        self.eigenvectors.column(0).into_owned()
    }

    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

fn lowest(h: &CMat, n_levels: usize) -> Result<Eigh> {
    let e = linalg::eigh(h)?;
    let k = n_levels.min(e.values.len());
    Ok(Eigh { values: e.values[..k].to_vec(), vectors: e.vectors.columns(0, k).into_owned() })
}

/// Diagonalises `h` and reports margins against the same operator cut to
/// half its Fock cutoff (levels the half space cannot host get margin ∞).
pub fn diagonalize(h: &TruncatedOperator, n_levels: usize) -> Result<SpectrumResult> {
    if !h.hermitian {
        return Err(Error::domain("diagonalize needs a Hermitian-flagged operator"));
    }
    let full = lowest(&h.matrix, n_levels)?;
    let margin = if h.dim_boson >= 4 {
        let half = lowest(&h.truncate_boson(h.dim_boson / 2)?.matrix, n_levels)?;
        full.values
            .iter()
            .enumerate()
            .map(|(k, e)| half.values.get(k).map_or(f64::INFINITY, |eh| (e - eh).abs()))
            .collect()
    } else {
        alloc::vec![f64::INFINITY; full.values.len()]
    };
    Ok(SpectrumResult {
        eigenvalues: full.values,
        eigenvectors: full.vectors,
        cutoff: h.dim_boson,
        convergence_margin: margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiParameter {
    /// Qubit splitting Ω.
    QubitFrequency,
    /// Boson frequency ω.
    FieldFrequency,
}

fn shifted(p: &ModelParams, which: QfiParameter, d: f64) -> ModelParams {
    let mut q = *p;
    match which {
        QfiParameter::QubitFrequency => q.omega_q += d,
        QfiParameter::FieldFrequency => q.omega += d,
    }
    q
}

/// Ground state plus refusal when it is (numerically) degenerate.
fn nondegenerate_ground(kind: HamiltonianKind, p: &ModelParams, cutoff: usize) -> Result<CVec> {
    let h = build_hamiltonian(kind, p, cutoff)?;
    let e = lowest(&h.matrix, 2)?;
    let scale = linalg::norm1(&h.matrix);
    let gap = e.values[1] - e.values[0];
    if gap < 1e3 * f64::EPSILON * scale {
        return Err(Error::domain(format!(
            "ground state degenerate (gap {gap:.3e} vs ‖H‖ {scale:.3e}); fidelity susceptibility undefined"
        )));
    }
    Ok(e.vectors.column(0).into_owned())
}

/// 1 − |⟨u|v⟩| computed as ½‖u − e^{−i arg⟨u|v⟩} v‖², which avoids the
/// cancellation of the direct form.
pub fn infidelity(u: &CVec, v: &CVec) -> f64 {
    let ov = linalg::inner(u, v);
    let ph = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { re(1.0) };
    0.5 * (u - v * ph.conj()).norm_squared()
}

fn fidelity_qfi(kind: HamiltonianKind, p: &ModelParams, which: QfiParameter, delta: f64, cutoff: usize) -> Result<f64> {
    let plus = nondegenerate_ground(kind, &shifted(p, which, delta), cutoff)?;
    let minus = nondegenerate_ground(kind, &shifted(p, which, -delta), cutoff)?;
    Ok(8.0 * infidelity(&minus, &plus) / (2.0 * delta).powi(2))
}

/// Ground-state QFI by central-difference fidelity susceptibility,
/// 8(1 − |⟨ψ(x−δ)|ψ(x+δ)⟩|)/(2δ)², evaluated at δ and δ/2. The δ/2 value is
/// returned; disagreement above 1% is an unstable-derivative error.
pub fn ground_state_qfi_numeric(
    kind: HamiltonianKind,
    p: &ModelParams,
    which: QfiParameter,
    delta: f64,
    cutoff: usize,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::domain("finite-difference step must be positive"));
    }
    nondegenerate_ground(kind, p, cutoff)?;
    let coarse = fidelity_qfi(kind, p, which, delta, cutoff)?;
    let fine = fidelity_qfi(kind, p, which, 0.5 * delta, cutoff)?;
    let scale = coarse.abs().max(fine.abs());
    // Both values at round-off level means the state does not move.
    if scale > 1e-300 && (coarse - fine).abs() > 0.01 * scale && scale * delta * delta > 1e-13 {
        return Err(Error::convergence(format!("unstable derivative: QFI {coarse:.6e} at δ vs {fine:.6e} at δ/2")));
    }
    Ok(fine)
}

/// Output of [`time_evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CVec>,
    /// max over output points of |‖ψ‖ − 1|.
    pub max_norm_drift: f64,
    /// Set when the drift exceeded 1e-8 (but stayed below the 1e-6 error).
    pub drift_warning: Option<String>,
}

/// Fixed-step RK4 for i dψ/dt = H(t)ψ with no renormalisation; the norm
/// drift is the accuracy diagnostic. Steps satisfy ‖H‖·dt ≤ 0.1 with ‖H‖
/// bounded by the 1-norm at both ends of each output interval.
pub fn time_evolve<F>(h_of_t: F, psi0: &CVec, t_grid: &[f64]) -> Result<Trajectory>
where
    F: Fn(f64) -> CMat,
{
    if t_grid.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    let minus_i = c(0.0, -1.0);
    let rhs = |t: f64, y: &CVec| -> CVec { (h_of_t(t) * y) * minus_i };
    let mut psi = psi0.clone();
    let mut states = Vec::with_capacity(t_grid.len());
    let mut max_drift = (psi.norm() - 1.0).abs();
    states.push(psi.clone());
    for w in t_grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 < t0 {
            return Err(Error::domain("time grid must be non-decreasing"));
        }
        let hn = linalg::norm1(&h_of_t(t0)).max(linalg::norm1(&h_of_t(t1)));
        let steps = ((t1 - t0) * hn / 0.1).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / steps as f64;
        for k in 0..steps {
            psi = crate::ode::rk4_step(&rhs, t0 + k as f64 * dt, &psi, dt);
        }
        let drift = (psi.norm() - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > 1e-6 {
            return Err(Error::convergence(format!("norm drift {drift:.3e} at t = {t1}; reduce the step")));
        }
        states.push(psi.clone());
    }
    let drift_warning = (max_drift > 1e-8).then(|| format!("norm drift {max_drift:.3e} exceeds 1e-8"));
    Ok(Trajectory { times: t_grid.to_vec(), states, max_norm_drift: max_drift, drift_warning })
}

/// Product state |spin⟩ ⊗ |n⟩.
pub fn product_state(spin: &CVec, n: usize, dim_boson: usize) -> CVec {
    let mut f = CVec::zeros(dim_boson);
    f[n] = re(1.0);
    spin.kronecker(&f)
}

/// Spin-½ σx eigenstate |←⟩ = (|↑⟩ − |↓⟩)/√2.
pub fn spin_left() -> CVec {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    CVec::from_vec(alloc::vec![re(s), re(-s)])
}

/// Probability of finding the field in |0⟩ (summed over spin).
pub fn vacuum_probability(psi: &CVec, dim_boson: usize) -> f64 {
    (0..psi.len() / dim_boson).map(|s| psi[s * dim_boson].norm_sqr()).sum()
}

/// ⟨x²⟩ with x = a + a†.
pub fn expectation_x2(psi: &CVec, dim_boson: usize, dim_spin: usize) -> f64 {
    let x = quadrature_x(dim_boson, dim_spin);
    let v = &x * psi;
    linalg::inner(&v, &v).re
}

pub fn unit(d: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[k] = re(1.0);
    v
}
