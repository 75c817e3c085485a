//! Numerical Schrieffer–Wolff transformations for Hamiltonians of the form
//!
//!   H = P_z + ελ P_x Q_x + ε² Q_z
//!
//! where P and Q are each an SU(2) spin, an SU(1,1) two-photon algebra or a
//! single boson. With O_x = (O₊+O₋)/2 and O_y = i(O₋−O₊)/2 the generators
//! S = εS₁ + ε³S₃ + ε⁴S₄ are built as truncated matrices, H is conjugated
//! exactly with the matrix exponential, and what is left off the P_z blocks
//! is measured.
//!
//! Two generator sets exist. `Quoted` reproduces the usual published
//! coefficients verbatim; `Corrected` holds the ones that actually cancel
//! each order (checked against [`solve_generator`], which inverts
//! [·, P_z] entry by entry). They differ in the Rabi-like S₃ and S₄ and in
//! the sign of the two-photon S₄ terms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::TruncatedOperator;
use crate::linalg::{self, RMat};

const BLOCK_TOL: f64 = 1e-12;

/// One factor of the product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algebra {
    /// Spin j = two_j/2, basis m = j, j−1, …, −j.
    Su2 {
        two_j: usize,
    },
    /// K₀ = ½(a†a + ½), K₊ = ½a†² on `cutoff` Fock states.
    Su11 {
        cutoff: usize,
    },
    Boson {
        cutoff: usize,
    },
}

impl Algebra {
    pub fn dim(self) -> usize {
        match self {
            Algebra::Su2 { two_j } => two_j + 1,
            Algebra::Su11 { cutoff } | Algebra::Boson { cutoff } => cutoff,
        }
    }

    fn validate(self) -> Result<()> {
        if self.dim() < 2 {
            return Err(Error::InvalidDimension(format!("{self:?}: representation needs at least 2 states")));
        }
        Ok(())
    }

    /// Rows below this index are trusted; the top 10% of a truncated ladder
    /// is masked because the commutation relations fail there.
    pub fn kept_rows(self) -> usize {
        match self {
            Algebra::Su2 { two_j } => two_j + 1,
            Algebra::Su11 { cutoff } | Algebra::Boson { cutoff } => cutoff - cutoff.div_ceil(10),
        }
    }

    /// Rows where low-order perturbation theory is expected to hold: four
    /// ladder steps (K± moves the Fock index by two).
    pub fn window_rows(self) -> usize {
        match self {
            Algebra::Su2 { two_j } => two_j + 1,
            Algebra::Su11 { .. } => 8.min(self.kept_rows()),
            Algebra::Boson { .. } => 4.min(self.kept_rows()),
        }
    }

    /// (O_z, O₊) on this factor alone.
    pub fn local_ops(self) -> Result<(RMat, RMat)> {
        self.validate()?;
        let d = self.dim();
        let mut z = RMat::zeros(d, d);
        let mut p = RMat::zeros(d, d);
        match self {
            Algebra::Su2 { two_j } => {
                let j = two_j as f64 / 2.0;
                for k in 0..d {
                    z[(k, k)] = j - k as f64;
                }
                for k in 1..d {
                    let m = j - k as f64;
                    p[(k - 1, k)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
                }
            }
            Algebra::Su11 { cutoff } => {
                for n in 0..cutoff {
                    z[(n, n)] = 0.5 * (n as f64 + 0.5);
                }
                for n in 0..cutoff.saturating_sub(2) {
                    p[(n + 2, n)] = 0.5 * (((n + 1) * (n + 2)) as f64).sqrt();
                }
            }
            Algebra::Boson { cutoff } => {
                for n in 0..cutoff {
                    z[(n, n)] = n as f64;
                }
                for n in 0..cutoff - 1 {
                    p[(n + 1, n)] = ((n + 1) as f64).sqrt();
                }
            }
        }
        Ok((z, p))
    }

    /// max |[O₊,O₋] − expected| over kept rows and columns, where expected is
    /// 2O_z, −2O_z or −1.
    pub fn commutator_defect(self) -> Result<f64> {
        let (z, p) = self.local_ops()?;
        let m = p.transpose();
        let mut d = commutator(&p, &m);
        match self {
            Algebra::Su2 { .. } => d -= &z * 2.0,
            Algebra::Su11 { .. } => d += &z * 2.0,
            Algebra::Boson { .. } => d += RMat::identity(z.nrows(), z.nrows()),
        }
        let k = self.kept_rows();
        Ok(d.view((0, 0), (k, k)).amax())
    }
}

/// The pair (P, Q); basis index = p·dim(Q) + q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgebraClass {
    pub p: Algebra,
    pub q: Algebra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelClass {
    /// P spin, Q boson (Rabi and Dicke in the large-frequency-ratio limit).
    RabiLike,
    /// P two-photon SU(1,1), Q boson (spins after Holstein–Primakoff).
    TwoPhotonDicke,
    /// P two-photon SU(1,1), Q spin.
    TwoPhotonRabi,
    BosonBoson,
}

impl ModelClass {
    pub const ALL: [ModelClass; 4] =
        [ModelClass::RabiLike, ModelClass::TwoPhotonDicke, ModelClass::TwoPhotonRabi, ModelClass::BosonBoson];

    pub fn name(self) -> &'static str {
        match self {
            ModelClass::RabiLike => "rabi-like",
            ModelClass::TwoPhotonDicke => "two-photon-dicke",
            ModelClass::TwoPhotonRabi => "two-photon-rabi",
            ModelClass::BosonBoson => "boson-boson",
        }
    }

    /// Representation sizes small enough that the whole unmasked region is
    /// perturbative at ε = 0.2, large enough that the truncation edge does
    /// not leak into it below order ε⁵.
    pub fn default_class(self) -> AlgebraClass {
        match self {
            ModelClass::RabiLike => AlgebraClass { p: Algebra::Su2 { two_j: 3 }, q: Algebra::Boson { cutoff: 40 } },
            ModelClass::TwoPhotonDicke => {
                AlgebraClass { p: Algebra::Su11 { cutoff: 16 }, q: Algebra::Boson { cutoff: 8 } }
            }
            ModelClass::TwoPhotonRabi => AlgebraClass { p: Algebra::Su11 { cutoff: 20 }, q: Algebra::Su2 { two_j: 1 } },
            ModelClass::BosonBoson => {
                AlgebraClass { p: Algebra::Boson { cutoff: 40 }, q: Algebra::Boson { cutoff: 12 } }
            }
        }
    }

    fn accepts(self, class: &AlgebraClass) -> bool {
        use Algebra::*;
        matches!(
            (self, class.p, class.q),
            (ModelClass::RabiLike, Su2 { .. }, Boson { .. })
                | (ModelClass::TwoPhotonDicke, Su11 { .. }, Boson { .. })
                | (ModelClass::TwoPhotonRabi, Su11 { .. }, Su2 { .. })
                | (ModelClass::BosonBoson, Boson { .. }, Boson { .. })
        )
    }
}

impl FromStr for ModelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rabi-like" | "rabi" => Ok(ModelClass::RabiLike),
            "two-photon-dicke" | "tpd" => Ok(ModelClass::TwoPhotonDicke),
            "two-photon-rabi" | "tpr" => Ok(ModelClass::TwoPhotonRabi),
            "boson-boson" | "bb" => Ok(ModelClass::BosonBoson),
            _ => Err(Error::domain(format!("unknown model class '{s}'"))),
        }
    }
}

/// Class operators embedded in the product space, with the row masks.
#[derive(Debug, Clone)]
pub struct ClassOperators {
    pub class: AlgebraClass,
    pub pz: RMat,
    pub pp: RMat,
    pub pm: RMat,
    pub qz: RMat,
    pub qp: RMat,
    pub qm: RMat,
    /// Diagonal of P_z, the block label of each basis state.
    pub pz_diag: Vec<f64>,
    /// Rows outside the truncation edges.
    pub kept: Vec<usize>,
    /// Low-lying rows used for closed-form comparisons.
    pub window: Vec<usize>,
}

impl ClassOperators {
    pub fn dim(&self) -> usize {
        self.pz.nrows()
    }
    pub fn px(&self) -> RMat {
        (&self.pp + &self.pm) * 0.5
    }
    /// iP_y = (P₊ − P₋)/2, real. Every generator is a real combination of
    /// these, so the whole transformation stays in real arithmetic.
    pub fn i_py(&self) -> RMat {
        (&self.pp - &self.pm) * 0.5
    }
    pub fn qx(&self) -> RMat {
        (&self.qp + &self.qm) * 0.5
    }
    pub fn i_qy(&self) -> RMat {
        (&self.qp - &self.qm) * 0.5
    }

    fn same_block(&self, i: usize, j: usize) -> bool {
        (self.pz_diag[i] - self.pz_diag[j]).abs() <= BLOCK_TOL
    }
}

pub fn build_class_operators(class: &AlgebraClass) -> Result<ClassOperators> {
    let (pz, pp) = class.p.local_ops()?;
    let (qz, qp) = class.q.local_ops()?;
    let (dp, dq) = (class.p.dim(), class.q.dim());
    let ip = RMat::identity(dp, dp);
    let iq = RMat::identity(dq, dq);
    let pm = pp.transpose();
    let qm = qp.transpose();
    let rows =
        |np: usize, nq: usize| -> Vec<usize> { (0..np).flat_map(|a| (0..nq).map(move |b| a * dq + b)).collect() };
    let ops = ClassOperators {
        class: *class,
        pz: pz.kronecker(&iq),
        pp: pp.kronecker(&iq),
        pm: pm.kronecker(&iq),
        qz: ip.kronecker(&qz),
        qp: ip.kronecker(&qp),
        qm: ip.kronecker(&qm),
        pz_diag: (0..dp * dq).map(|k| pz[(k / dq, k / dq)]).collect(),
        kept: rows(class.p.kept_rows(), class.q.kept_rows()),
        window: rows(class.p.window_rows(), class.q.window_rows()),
    };
    Ok(ops)
}

/// H = P_z + ελP_xQ_x + ε²Q_z.
pub fn class_hamiltonian(ops: &ClassOperators, eps: f64, lambda: f64) -> RMat {
    &ops.pz + ops.px() * ops.qx() * (eps * lambda) + &ops.qz * (eps * eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generators {
    Quoted,
    Corrected,
}

#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub s1: RMat,
    pub s3: RMat,
    pub s4: RMat,
}

fn cube(x: &RMat) -> RMat {
    x * x * x
}

fn commutator(a: &RMat, b: &RMat) -> RMat {
    a * b - b * a
}

pub fn generators(model: ModelClass, ops: &ClassOperators, lambda: f64, set: Generators) -> GeneratorSet {
    // i·P_y and i·Q_y absorb the explicit i of each generator term
    let (px, ipy, qx, iqy) = (ops.px(), ops.i_py(), ops.qx(), ops.i_qy());
    let l = lambda;
    let l3 = l * l * l;
    let p2 = &ops.pp * &ops.pp - &ops.pm * &ops.pm; // P₊² − P₋²
    let s1 = &ipy * &qx * l; // iλP_yQ_x
    let quoted = set == Generators::Quoted;
    let (s3, s4) = match model {
        ModelClass::RabiLike => {
            let s3 = if quoted {
                // −i(λ³/3)Q_x³P_y + iλP_xQ_y
                cube(&qx) * &ipy * (-l3 / 3.0) + &px * &iqy * l
            } else {
                // −i(λ³/3)P_yQ_x³ − iλP_xQ_y
                &ipy * cube(&qx) * (-l3 / 3.0) - &px * &iqy * l
            };
            (s3, p2 * if quoted { l * l / 16.0 } else { l * l / 32.0 })
        }
        ModelClass::TwoPhotonDicke => {
            // −iλQ_yP_x + i(λ³/3)P_yQ_x³
            let s3 = &iqy * &px * -l + &ipy * cube(&qx) * (l3 / 3.0);
            (s3, p2 * if quoted { -l * l / 32.0 } else { l * l / 32.0 })
        }
        ModelClass::TwoPhotonRabi => {
            let s3 = &iqy * &px * -l + &ipy * cube(&qx) * (l3 / 3.0);
            // printed as −(λ²/16)(P₋²−P₊²)Q_z
            let coef = if quoted { l * l / 16.0 } else { -l * l / 16.0 };
            (s3, p2 * &ops.qz * coef)
        }
        ModelClass::BosonBoson => (&iqy * &px * -l, p2 * (l * l / 32.0)),
    };
    GeneratorSet { s1, s3, s4 }
}

/// Frobenius norm of the part of `m` coupling distinct P_z blocks, over the
/// kept rows and columns.
pub fn offdiag_norm(m: &RMat, ops: &ClassOperators) -> f64 {
    offdiag_norm_on(m, ops, &ops.kept)
}

fn offdiag_norm_on(m: &RMat, ops: &ClassOperators, rows: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in rows {
        for &j in rows {
            if !ops.same_block(i, j) {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

pub fn block_diagonal_part(m: &RMat, ops: &ClassOperators) -> RMat {
    RMat::from_fn(m.nrows(), m.ncols(), |i, j| if ops.same_block(i, j) { m[(i, j)] } else { 0.0 })
}

/// Inverts X + [S, P_z] = 0 on the off-block entries:
/// S_ij = X_ij / (p_i − p_j). Block-diagonal entries of S are set to zero.
pub fn solve_generator(x: &RMat, ops: &ClassOperators) -> RMat {
    let p = &ops.pz_diag;
    RMat::from_fn(x.nrows(), x.ncols(), |i, j| if ops.same_block(i, j) { 0.0 } else { x[(i, j)] / (p[i] - p[j]) })
}

pub type Poly = Vec<Option<RMat>>;

fn poly_commutator(a: &Poly, b: &Poly, max_order: usize) -> Poly {
    let mut out: Poly = vec![None; max_order + 1];
    for (i, ai) in a.iter().enumerate() {
        let Some(ai) = ai else { continue };
        for (j, bj) in b.iter().enumerate() {
            let Some(bj) = bj else { continue };
            if i + j > max_order {
                continue;
            }
            let t = commutator(ai, bj);
            out[i + j] = Some(match out[i + j].take() {
                Some(acc) => acc + t,
                None => t,
            });
        }
    }
    out
}

/// Taylor coefficients in ε of e^{S}He^{−S}, where `s[k]` and `h[k]` are the
/// ε^k coefficients (use `None` for absent powers). Exact order by order:
/// no exponential is evaluated.
pub fn conjugation_series(s: &Poly, h: &Poly, max_order: usize) -> Vec<RMat> {
    let n = h.iter().flatten().next().map(|m| m.nrows()).unwrap_or(0);
    let mut total: Vec<RMat> =
        (0..=max_order).map(|k| h.get(k).cloned().flatten().unwrap_or_else(|| RMat::zeros(n, n))).collect();
    let mut term: Poly = (0..=max_order).map(|k| h.get(k).cloned().flatten()).collect();
    for k in 1..=max_order {
        term = poly_commutator(s, &term, max_order);
        for t in term.iter_mut().flatten() {
            *t *= 1.0 / k as f64;
        }
        if term.iter().all(Option::is_none) {
            break;
        }
        for (acc, t) in total.iter_mut().zip(&term) {
            if let Some(t) = t {
                *acc += t;
            }
        }
    }
    total
}

/// ε-coefficients of H and of S = εS₁ + ε³S₃ + ε⁴S₄ (truncated at `order`).
pub fn series_inputs(ops: &ClassOperators, gens: &GeneratorSet, lambda: f64, order: usize) -> (Poly, Poly) {
    let h: Poly = vec![Some(ops.pz.clone()), Some(ops.px() * ops.qx() * lambda), Some(ops.qz.clone())];
    let mut s: Poly = vec![None, Some(gens.s1.clone()), None, None, None];
    if order >= 3 {
        s[3] = Some(gens.s3.clone());
    }
    if order >= 4 {
        s[4] = Some(gens.s4.clone());
    }
    (s, h)
}

/// Off-block norm of the ε² coefficient after the first-order generator
/// alone. Zero (up to the masked edge) means no S₂ is needed.
pub fn second_order_offdiag(model: ModelClass, ops: &ClassOperators, lambda: f64) -> f64 {
    let gens = generators(model, ops, lambda, Generators::Corrected);
    let (s, h) = series_inputs(ops, &gens, lambda, 1);
    let coeffs = conjugation_series(&s, &h, 2);
    offdiag_norm(&coeffs[2], ops)
}

#[derive(Debug, Clone)]
pub struct SWResult {
    pub model: ModelClass,
    pub epsilon: f64,
    pub lambda: f64,
    pub order: usize,
    pub transformed_h: TruncatedOperator,
    /// Masked off-block Frobenius norm by order; key 0 is the untransformed H.
    pub residual_offdiag_norm: BTreeMap<usize, f64>,
    pub generators: GeneratorSet,
    pub unitarity_defect: f64,
}

impl SWResult {
    pub fn residual(&self) -> f64 {
        self.residual_offdiag_norm[&self.order]
    }
}

/// H' = e^{S}He^{−S} with S = εS₁ (+ε³S₃ (+ε⁴S₄)) for order 1, 3 or 4.
pub fn sw_transform(
    model: ModelClass,
    class: &AlgebraClass,
    epsilon: f64,
    lambda: f64,
    order: usize,
    set: Generators,
) -> Result<SWResult> {
    if !(0.0..=0.3).contains(&epsilon) {
        return Err(Error::domain(format!("ε = {epsilon} outside [0, 0.3]")));
    }
    if !lambda.is_finite() {
        return Err(Error::domain("λ must be finite"));
    }
    if !matches!(order, 1 | 3 | 4) {
        return Err(Error::domain(format!("order must be 1, 3 or 4, got {order}")));
    }
    if !model.accepts(class) {
        return Err(Error::domain(format!("{} does not act on {:?} ⊗ {:?}", model.name(), class.p, class.q)));
    }
    let ops = build_class_operators(class)?;
    let gens = generators(model, &ops, lambda, set);
    let h = class_hamiltonian(&ops, epsilon, lambda);
    let mut s = &gens.s1 * epsilon;
    if order >= 3 {
        s += &gens.s3 * epsilon.powi(3);
    }
    if order >= 4 {
        s += &gens.s4 * epsilon.powi(4);
    }
    let u = linalg::expm_real(&s)?;
    let n = ops.dim();
    let unitarity_defect = (&u * u.transpose() - RMat::identity(n, n)).amax();
    if unitarity_defect > 1e-9 {
        return Err(Error::numerical(format!("e^S deviates from unitarity by {unitarity_defect:.3e}")));
    }
    let mut hp = &u * &h * u.transpose();
    // restore exact symmetry lost to rounding
    hp = (&hp + hp.transpose()) * 0.5;
    let mut residual = BTreeMap::new();
    residual.insert(0, offdiag_norm(&h, &ops));
    residual.insert(order, offdiag_norm(&hp, &ops));
    let transformed_h = TruncatedOperator::new(class.q.dim(), class.p.dim(), linalg::complexify(&hp), true)?;
    Ok(SWResult {
        model,
        epsilon,
        lambda,
        order,
        transformed_h,
        residual_offdiag_norm: residual,
        generators: gens,
        unitarity_defect,
    })
}

/// Coefficients of the block-diagonal transformed Hamiltonian through ε⁴:
///
/// - Rabi-like, two-photon Dicke: P_z + ε²(Q_z + a·Q_x²P_z) + ε⁴(b·(P₊P₋+P₋P₊) + c·Q_x⁴P_z)
/// - two-photon Rabi: P_z + ε²(Q_z + a·Q_x²P_z) + ε⁴(b·(P₊P₋+P₋P₊)Q_z + c·Q_x⁴P_z)
/// - boson-boson: P_z + ε²(Q_z + a·Q_x²) + ε⁴ b·(P₊P₋+P₋P₊)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub quadratic: f64,
    pub ladder_pair: f64,
    pub quartic: f64,
}

impl ClosedForm {
    /// The commonly quoted coefficients.
    pub fn quoted(model: ModelClass, lambda: f64) -> Self {
        let (l2, l4) = (lambda * lambda, lambda.powi(4));
        match model {
            ModelClass::RabiLike => ClosedForm { quadratic: l2 / 2.0, ladder_pair: l2 / 8.0, quartic: -l4 / 8.0 },
            ModelClass::TwoPhotonDicke => {
                ClosedForm { quadratic: -l2 / 2.0, ladder_pair: l2 / 8.0, quartic: -l4 / 8.0 }
            }
            ModelClass::TwoPhotonRabi => {
                ClosedForm { quadratic: -l2 / 2.0, ladder_pair: -l2 / 8.0, quartic: -l4 / 8.0 }
            }
            ModelClass::BosonBoson => ClosedForm { quadratic: -l2 / 4.0, ladder_pair: l2 / 8.0, quartic: 0.0 },
        }
    }

    /// Coefficients produced by the exact order-by-order expansion.
    pub fn corrected(model: ModelClass, lambda: f64) -> Self {
        let mut f = Self::quoted(model, lambda);
        if model != ModelClass::TwoPhotonRabi {
            f.ladder_pair = lambda * lambda / 16.0;
        }
        f
    }

    pub fn hamiltonian(&self, model: ModelClass, ops: &ClassOperators, eps: f64) -> RMat {
        let (e2, e4) = (eps * eps, eps.powi(4));
        let qx = ops.qx();
        let qx2 = &qx * &qx;
        let pair = &ops.pp * &ops.pm + &ops.pm * &ops.pp;
        let mut h = &ops.pz + &ops.qz * e2;
        match model {
            ModelClass::BosonBoson => {
                h += qx2 * (e2 * self.quadratic) + pair * (e4 * self.ladder_pair);
            }
            _ => {
                h += &qx2 * &ops.pz * (e2 * self.quadratic);
                h += &qx2 * &qx2 * &ops.pz * (e4 * self.quartic);
                let pair = if model == ModelClass::TwoPhotonRabi { pair * &ops.qz } else { pair };
                h += pair * (e4 * self.ladder_pair);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concordance {
    /// max |block-diagonal(H') − closed form| over the low-lying window.
    pub max_deviation: f64,
    /// ε⁵‖H‖₂ with H restricted to the same window.
    pub tolerance: f64,
}

impl Concordance {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

fn restrict(m: &RMat, rows: &[usize]) -> RMat {
    RMat::from_fn(rows.len(), rows.len(), |i, j| m[(rows[i], rows[j])])
}

/// Compares the block-diagonal part of an order-4 result with a closed form.
pub fn concordance(result: &SWResult, class: &AlgebraClass, form: &ClosedForm) -> Result<Concordance> {
    let ops = build_class_operators(class)?;
    let eps = result.epsilon;
    let hp = linalg::real_part(&result.transformed_h.matrix);
    let diff = block_diagonal_part(&hp, &ops) - form.hamiltonian(result.model, &ops, eps);
    let max_deviation = restrict(&diff, &ops.window).amax();
    let hw = restrict(&class_hamiltonian(&ops, eps, result.lambda), &ops.window);
    let spec = linalg::eigh(&linalg::complexify(&hw))?;
    let norm = spec.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(Concordance { max_deviation, tolerance: eps.powi(5) * norm })
}

/// Projection of the order-1 two-photon Dicke result onto the lowest K₀
/// block (K₀ = 1/4), compared with ¼ + ε²(d†d − c(d+d†)²).
///
/// `lambda` is the physical normalised coupling g/g_p. The physical
/// Hamiltonian 2K₀ + (η̃/N)d†d + 2√(η̃/N)λK_x(d+d†), divided by 2ω, has the
/// class form with ε² = η̃/(2N) and class coupling 2√2·λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCheck {
    pub epsilon: f64,
    /// Deviation from c = λ²/4.
    pub deviation_quarter: f64,
    /// Deviation from c = λ².
    pub deviation_full: f64,
    /// Order-1 off-block residual on the low-lying window divided by ε²,
    /// the size of what was dropped.
    pub tolerance: f64,
}

pub fn two_photon_projection(epsilon: f64, lambda: f64, class: &AlgebraClass) -> Result<ProjectionCheck> {
    let class_lambda = 2.0 * core::f64::consts::SQRT_2 * lambda;
    let r = sw_transform(ModelClass::TwoPhotonDicke, class, epsilon, class_lambda, 1, Generators::Corrected)?;
    let ops = build_class_operators(class)?;
    let nq = class.q.window_rows();
    let e2 = epsilon * epsilon;
    let (qz, qp) = class.q.local_ops()?;
    let x = &qp + qp.transpose(); // d + d†
    let x2 = &x * &x;
    let hp = linalg::real_part(&r.transformed_h.matrix);
    let low = RMat::from_fn(nq, nq, |i, j| {
        let shift = if i == j { 0.25 } else { 0.0 };
        (hp[(i, j)] - shift) / e2
    });
    let dev = |cf: f64| -> f64 {
        let mut m = 0.0f64;
        for i in 0..nq {
            for j in 0..nq {
                let want = qz[(i, j)] - x2[(i, j)] * cf;
                m = m.max((low[(i, j)] - want).abs());
            }
        }
        m
    };
    Ok(ProjectionCheck {
        epsilon,
        deviation_quarter: dev(lambda * lambda / 4.0),
        deviation_full: dev(lambda * lambda),
        tolerance: offdiag_norm_on(&hp, &ops, &ops.window) / e2,
    })
}

/// True when the boson-boson quadratic coefficient (1 − λ²/4)ε² is not
/// positive, i.e. the transformed Hamiltonian is unbounded below.
pub fn boson_boson_instability_check(epsilon: f64, lambda: f64) -> bool {
    (1.0 - lambda * lambda / 4.0) * epsilon * epsilon <= 0.0
}

/// Ground energy of the untransformed boson-boson Hamiltonian at each of the
/// given per-mode cutoffs. It converges below λ = 2 and runs away with the
/// cutoff above it.
pub fn boson_boson_ground_energies(epsilon: f64, lambda: f64, cutoffs: &[usize]) -> Result<Vec<f64>> {
    cutoffs
        .iter()
        .map(|&n| {
            let class = AlgebraClass { p: Algebra::Boson { cutoff: n }, q: Algebra::Boson { cutoff: n } };
            let ops = build_class_operators(&class)?;
            let e = linalg::eigh(&linalg::complexify(&class_hamiltonian(&ops, epsilon, lambda)))?;
            Ok(e.values[0])
        })
        .collect()
}

/// Short label used in reports.
pub fn describe(class: &AlgebraClass) -> String {
    let f = |a: Algebra| match a {
        Algebra::Su2 { two_j } => format!("SU2(j={}/2)", two_j),
        Algebra::Su11 { cutoff } => format!("SU11({cutoff})"),
        Algebra::Boson { cutoff } => format!("boson({cutoff})"),
    };
    format!("{} x {}", f(class.p), f(class.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log2_ratio(a: f64, b: f64) -> f64 {
        (a / b).ln() / core::f64::consts::LN_2
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let (z, p) = Algebra::Su2 { two_j: 1 }.local_ops().unwrap();
        assert_eq!(z[(0, 0)], 0.5);
        assert_eq!(z[(1, 1)], -0.5);
        let d = commutator(&p, &p.transpose()) - &z * 2.0;
        assert_eq!(d.amax(), 0.0);
    }

    #[test]
    fn class_commutators_hold_away_from_edge() {
        for a in [
            Algebra::Su2 { two_j: 1 },
            Algebra::Su2 { two_j: 3 },
            Algebra::Su11 { cutoff: 60 },
            Algebra::Boson { cutoff: 40 },
        ] {
            assert!(a.commutator_defect().unwrap() < 1e-10, "{a:?}");
        }
    }

    #[test]
    fn su11_rows_up_to_55_at_cutoff_60() {
        let a = Algebra::Su11 { cutoff: 60 };
        let (z, p) = a.local_ops().unwrap();
        let d = commutator(&p, &p.transpose()) + &z * 2.0;
        assert!(d.view((0, 0), (56, 56)).amax() <= 1e-10);
        // and the edge really is broken
        assert!(d[(59, 59)].abs() > 1.0);
    }

    #[test]
    fn degenerate_representation_rejected() {
        assert!(Algebra::Su2 { two_j: 0 }.local_ops().is_err());
        assert!(Algebra::Boson { cutoff: 1 }.local_ops().is_err());
        assert!("spin-boson-tree".parse::<ModelClass>().is_err());
    }

    #[test]
    fn zero_epsilon_is_identity() {
        for m in ModelClass::ALL {
            let class = m.default_class();
            let r = sw_transform(m, &class, 0.0, 0.5, 4, Generators::Corrected).unwrap();
            let ops = build_class_operators(&class).unwrap();
            assert!((linalg::real_part(&r.transformed_h.matrix) - &ops.pz).amax() < 1e-14);
            assert_eq!(r.residual(), r.residual_offdiag_norm[&0]);
            assert_eq!(r.residual(), 0.0);
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        let class = ModelClass::RabiLike.default_class();
        assert!(sw_transform(ModelClass::RabiLike, &class, 0.31, 0.5, 4, Generators::Corrected).is_err());
        assert!(sw_transform(ModelClass::RabiLike, &class, 0.1, 0.5, 2, Generators::Corrected).is_err());
        let wrong = ModelClass::BosonBoson.default_class();
        assert!(sw_transform(ModelClass::RabiLike, &wrong, 0.1, 0.5, 4, Generators::Corrected).is_err());
    }

    #[test]
    fn generators_are_antisymmetric() {
        for m in ModelClass::ALL {
            let ops = build_class_operators(&m.default_class()).unwrap();
            for set in [Generators::Quoted, Generators::Corrected] {
                let g = generators(m, &ops, 0.7, set);
                for s in [&g.s1, &g.s3, &g.s4] {
                    assert!((s + s.transpose()).amax() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn no_second_order_generator_needed() {
        for m in ModelClass::ALL {
            let ops = build_class_operators(&m.default_class()).unwrap();
            assert!(second_order_offdiag(m, &ops, 0.7) < 1e-10, "{}", m.name());
        }
    }

    #[test]
    fn first_order_generator_cancels_coupling() {
        for m in ModelClass::ALL {
            let ops = build_class_operators(&m.default_class()).unwrap();
            let g = generators(m, &ops, 0.7, Generators::Corrected);
            let x1 = ops.px() * ops.qx() * 0.7;
            let solved = solve_generator(&x1, &ops);
            assert!((solved - &g.s1).amax() < 1e-12, "{}", m.name());
        }
    }

    /// The closed-form generators against the entry-wise solution of
    /// X + [S, P_z] = 0, order 3 and order 4.
    fn generator_mismatch(m: ModelClass, set: Generators) -> (f64, f64) {
        let lambda = 0.7;
        let ops = build_class_operators(&m.default_class()).unwrap();
        let g = generators(m, &ops, lambda, set);
        let (s, h) = series_inputs(&ops, &g, lambda, 1);
        let x3 = conjugation_series(&s, &h, 3).swap_remove(3);
        let s3 = solve_generator(&x3, &ops);
        let (s, h) = series_inputs(&ops, &g, lambda, 3);
        let x4 = conjugation_series(&s, &h, 4).swap_remove(4);
        let s4 = solve_generator(&x4, &ops);
        let on_kept = |a: &RMat| restrict(a, &ops.kept).amax();
        (on_kept(&(s3 - &g.s3)), on_kept(&(s4 - &g.s4)))
    }

    #[test]
    fn corrected_generators_match_entrywise_solution() {
        for m in ModelClass::ALL {
            let (d3, d4) = generator_mismatch(m, Generators::Corrected);
            assert!(d3 < 1e-9 && d4 < 1e-9, "{}: {d3:e} {d4:e}", m.name());
        }
    }

    #[test]
    fn quoted_generators_differ_where_expected() {
        let (d3, d4) = generator_mismatch(ModelClass::RabiLike, Generators::Quoted);
        assert!(d3 > 1e-3 && d4 > 1e-3);
        let (d3, d4) = generator_mismatch(ModelClass::TwoPhotonDicke, Generators::Quoted);
        assert!(d3 < 1e-9 && d4 > 1e-3);
        let (d3, d4) = generator_mismatch(ModelClass::TwoPhotonRabi, Generators::Quoted);
        assert!(d3 < 1e-9 && d4 > 1e-3);
        let (d3, d4) = generator_mismatch(ModelClass::BosonBoson, Generators::Quoted);
        assert!(d3 < 1e-9 && d4 < 1e-9);
    }

    #[test]
    fn series_block_diagonal_matches_corrected_closed_form() {
        // Coefficients of ε² and ε⁴ directly, free of higher-order terms.
        let lambda = 0.7;
        for m in ModelClass::ALL {
            let ops = build_class_operators(&m.default_class()).unwrap();
            let g = generators(m, &ops, lambda, Generators::Corrected);
            let (s, h) = series_inputs(&ops, &g, lambda, 4);
            let coeffs = conjugation_series(&s, &h, 4);
            for (form, should_match) in
                [(ClosedForm::corrected(m, lambda), true), (ClosedForm::quoted(m, lambda), false)]
            {
                // isolate the ε⁴ closed-form part by differencing two ε values
                let f = |e: f64| form.hamiltonian(m, &ops, e);
                let c4 = (f(2.0) - f(1.0) * 4.0 + &ops.pz * 3.0) / 12.0;
                let c2 = f(1.0) - &ops.pz - &c4;
                let d2 = restrict(&(block_diagonal_part(&coeffs[2], &ops) - c2), &ops.window).amax();
                let d4 = restrict(&(block_diagonal_part(&coeffs[4], &ops) - c4), &ops.window).amax();
                assert!(d2 < 1e-10, "{} ε²: {d2:e}", m.name());
                let quoted_is_exact = m == ModelClass::TwoPhotonRabi;
                if should_match || quoted_is_exact {
                    assert!(d4 < 1e-10, "{} ε⁴: {d4:e}", m.name());
                } else {
                    assert!(d4 > 1e-3, "{} ε⁴ quoted unexpectedly exact", m.name());
                }
            }
        }
    }

    #[test]
    fn exact_and_series_transform_agree() {
        let m = ModelClass::RabiLike;
        let class = m.default_class();
        let (eps, lambda) = (0.05, 0.7);
        let r = sw_transform(m, &class, eps, lambda, 4, Generators::Corrected).unwrap();
        let ops = build_class_operators(&class).unwrap();
        let g = generators(m, &ops, lambda, Generators::Corrected);
        let (s, h) = series_inputs(&ops, &g, lambda, 4);
        let coeffs = conjugation_series(&s, &h, 6);
        let approx = coeffs
            .iter()
            .enumerate()
            .fold(RMat::zeros(ops.dim(), ops.dim()), |acc, (k, ck)| acc + ck * eps.powi(k as i32));
        let d = restrict(&(approx - linalg::real_part(&r.transformed_h.matrix)), &ops.window);
        assert!(d.amax() < 1e-7);
    }

    #[test]
    fn order_four_residual_scales_as_fifth_power() {
        for m in ModelClass::ALL {
            let class = m.default_class();
            let r: Vec<f64> = [0.1, 0.05]
                .iter()
                .map(|&e| sw_transform(m, &class, e, 0.5, 4, Generators::Corrected).unwrap().residual())
                .collect();
            let k = log2_ratio(r[0], r[1]);
            assert!((k - 5.0).abs() < 0.3, "{}: exponent {k}", m.name());
        }
    }

    #[test]
    fn quoted_rabi_generators_stall_at_third_order() {
        let class = ModelClass::RabiLike.default_class();
        let r: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&e| sw_transform(ModelClass::RabiLike, &class, e, 0.5, 4, Generators::Quoted).unwrap().residual())
            .collect();
        assert!((log2_ratio(r[0], r[1]) - 3.0).abs() < 0.1);
    }

    #[test]
    fn residual_falls_with_order() {
        for m in ModelClass::ALL {
            let class = m.default_class();
            let r: Vec<f64> = [1, 3, 4]
                .iter()
                .map(|&k| sw_transform(m, &class, 0.2, 0.5, k, Generators::Corrected).unwrap().residual())
                .collect();
            assert!(r[2] < r[1] && r[1] < r[0], "{}: {r:?}", m.name());
        }
    }

    #[test]
    fn spectrum_is_preserved() {
        let class = AlgebraClass { p: Algebra::Su11 { cutoff: 12 }, q: Algebra::Boson { cutoff: 8 } };
        let ops = build_class_operators(&class).unwrap();
        let r = sw_transform(ModelClass::TwoPhotonDicke, &class, 0.2, 0.5, 4, Generators::Corrected).unwrap();
        let a = linalg::eigh(&linalg::complexify(&class_hamiltonian(&ops, 0.2, 0.5))).unwrap().values;
        let b = linalg::eigh(&r.transformed_h.matrix).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn two_photon_projection_prefers_quarter() {
        let class = AlgebraClass { p: Algebra::Su11 { cutoff: 16 }, q: Algebra::Boson { cutoff: 12 } };
        let p = two_photon_projection(0.02, 0.5, &class).unwrap();
        assert!(p.deviation_quarter < p.tolerance, "{p:?}");
        assert!(p.deviation_full > p.tolerance, "{p:?}");
    }

    #[test]
    fn instability_flag() {
        assert!(!boson_boson_instability_check(0.1, 0.0));
        assert!(!boson_boson_instability_check(0.1, 1.99));
        assert!(boson_boson_instability_check(0.1, 2.0));
        assert!(boson_boson_instability_check(0.1, 2.5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn transform_stays_unitary(eps in 0.0f64..0.3, lambda in -1.0f64..1.0, k in 0usize..4) {
            let m = ModelClass::ALL[k];
            let class = match m {
                ModelClass::RabiLike => AlgebraClass { p: Algebra::Su2 { two_j: 2 }, q: Algebra::Boson { cutoff: 10 } },
                ModelClass::TwoPhotonDicke => AlgebraClass { p: Algebra::Su11 { cutoff: 10 }, q: Algebra::Boson { cutoff: 6 } },
                ModelClass::TwoPhotonRabi => AlgebraClass { p: Algebra::Su11 { cutoff: 10 }, q: Algebra::Su2 { two_j: 1 } },
                ModelClass::BosonBoson => AlgebraClass { p: Algebra::Boson { cutoff: 8 }, q: Algebra::Boson { cutoff: 8 } },
            };
            let r = sw_transform(m, &class, eps, lambda, 4, Generators::Corrected).unwrap();
            prop_assert!(r.unitarity_defect < 1e-9);
        }
    }
}
