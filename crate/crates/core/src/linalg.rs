//! Dense linear algebra used by every model: Hermitian eigensolver with
//! block detection, Padé matrix exponential, Kronecker products.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// max |M − M†|.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn complexify(m: &RMat) -> CMat {
    m.map(re)
}

/// Operator 1-norm (max absolute column sum).
pub fn norm1<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.clone().abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }
}

/// Connected components of the sparsity graph of `m` (entries exactly zero
/// are treated as absent). For the model Hamiltonians these are the symmetry
/// sectors, so diagonalising block by block is exact and much cheaper.
pub fn sparsity_blocks(m: &CMat) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != C64::new(0.0, 0.0) || m[(j, i)] != C64::new(0.0, 0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[label[r]].push(i);
    }
    blocks
}

fn max_iterations(n: usize) -> usize {
    1000 + 200 * n
}

/// Full Hermitian eigen-decomposition. Splits into sparsity blocks and uses
/// the real symmetric solver whenever a block has no imaginary part.
pub fn eigh(m: &CMat) -> Result<Eigh> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidDimension(alloc::format!("{}x{} is not square", n, m.ncols())));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n); // (value, block, local index)
    let blocks = sparsity_blocks(m);
    let mut local_vecs: Vec<CMat> = Vec::with_capacity(blocks.len());
    for (b, idx) in blocks.iter().enumerate() {
        let k = idx.len();
        let sub = CMat::from_fn(k, k, |i, j| m[(idx[i], idx[j])]);
        let (vals, vecs) = if is_real(&sub) {
            let r = real_part(&sub);
            let e = nalgebra::SymmetricEigen::try_new(r, f64::EPSILON, max_iterations(k)).ok_or_else(|| {
                Error::numerical(alloc::format!(
                    "real symmetric eigensolver did not converge on a block of size {k} (norm1 {:.3e})",
                    norm1(&sub)
                ))
            })?;
            (e.eigenvalues.iter().copied().collect::<Vec<_>>(), complexify(&e.eigenvectors))
        } else {
            let e =
                nalgebra::SymmetricEigen::try_new(sub.clone(), f64::EPSILON, max_iterations(k)).ok_or_else(|| {
                    Error::numerical(alloc::format!(
                        "Hermitian eigensolver did not converge on a block of size {k} (norm1 {:.3e})",
                        norm1(&sub)
                    ))
                })?;
            (e.eigenvalues.iter().copied().collect::<Vec<_>>(), e.eigenvectors)
        };
        for (l, v) in vals.iter().enumerate() {
            pairs.push((*v, b, l));
        }
        local_vecs.push(vecs);
    }
    // Stable order: value, then block, then local index.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &(v, b, l)) in pairs.iter().enumerate() {
        values.push(v);
        let idx = &blocks[b];
        for (r, &row) in idx.iter().enumerate() {
            vectors[(row, col)] = local_vecs[b][(r, l)];
        }
    }
    Ok(Eigh { values, vectors })
}

/// Eigenvalues of a general real matrix (unsorted).
pub fn eigenvalues_general(m: &RMat) -> Vec<C64> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// Largest real part of the spectrum of a real matrix.
pub fn max_real_eigenvalue(m: &RMat) -> f64 {
    eigenvalues_general(m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn expm_generic<T: nalgebra::ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let nrm = norm1(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = T::from_real(2f64.powi(-s));
    let a = a * scale;
    let id = DMatrix::<T>::identity(n, n);
    let b = |k: usize| T::from_real(PADE13[k]);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::numerical("singular Padé denominator in matrix exponential"))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Matrix exponential by Padé(13) scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    if is_real(a) {
        return Ok(complexify(&expm_generic(&real_part(a))?));
    }
    expm_generic(a)
}

pub fn expm_real(a: &RMat) -> Result<RMat> {
    expm_generic(a)
}

/// ⟨u|v⟩.
pub fn inner(u: &CVec, v: &CVec) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// ⟨v|M|v⟩ for normalised v.
pub fn expectation(m: &CMat, v: &CVec) -> C64 {
    inner(v, &(m * v))
}

/// Solves A x = b for real square A.
pub fn solve_real(a: &RMat, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone().lu().solve(b).ok_or_else(|| Error::numerical("singular linear system"))
}
