//! Phase-space QFI against the mixed-state QFI of the same state built in a
//! truncated Fock space.

use qcrit_core::gaussian::{
    interferometer_generator, one_mode_state, qfi_under_generator, OneModeParams, WilliamsonParams,
};
use qcrit_core::linalg::{c, eigh, expm, kron, re, CMat, C64};

fn annihilation(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) })
}

fn thermal(n: usize, nu: f64) -> CMat {
    let t = (nu - 1.0) / (nu + 1.0);
    CMat::from_fn(n, n, |i, j| if i == j { re((1.0 - t) * t.powi(i as i32)) } else { re(0.0) })
}

/// exp(ξ(a² − a†²)/2): a → cosh ξ a − sinh ξ a†.
fn squeezer(a: &CMat, xi: f64) -> CMat {
    let ad = a.adjoint();
    expm(&((a * a - &ad * &ad) * re(0.5 * xi))).unwrap()
}

fn displacement(a: &CMat, g: C64) -> CMat {
    expm(&(a.adjoint() * g - a * g.conj())).unwrap()
}

/// 2 Σ (λᵢ−λⱼ)²/(λᵢ+λⱼ) |⟨i|G|j⟩|².
fn sld_qfi(rho: &CMat, g: &CMat) -> f64 {
    let e = eigh(&((rho + rho.adjoint()) * re(0.5))).unwrap();
    let gm = e.vectors.adjoint() * g * &e.vectors;
    let n = rho.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (e.values[i].max(0.0), e.values[j].max(0.0));
            if a + b > 1e-14 {
                acc += 2.0 * (a - b).powi(2) / (a + b) * gm[(i, j)].norm_sqr();
            }
        }
    }
    acc
}

#[test]
fn one_mode_qfi_matches_truncated_fock() {
    let n = 40;
    let a = annihilation(n);
    let num = a.adjoint() * &a;
    for &(nu, xi, phi, g, pd) in &[(1.05, 0.2, 0.3, 0.5, 1.1), (1.2, 0.3, -0.8, 0.8, 0.2), (1.0, 0.25, 0.0, 0.6, 0.0)] {
        let p = OneModeParams { nu, xi, phi, gamma_abs: g, phi_d: pd };
        let phase = space_phase(&num, phi);
        let gamma = c(0.0, 1.0) * C64::from_polar(g, -pd);
        let u = displacement(&a, gamma) * phase * squeezer(&a, xi);
        let rho = &u * thermal(n, nu) * u.adjoint();
        let fock = sld_qfi(&rho, &num);
        let phase_space = qfi_under_generator(&one_mode_state(&p).unwrap(), &CMat::identity(1, 1)).unwrap().value;
        assert!((fock - phase_space).abs() < 0.01 * phase_space, "{p:?}: {fock} vs {phase_space}");
    }
}

fn space_phase(num: &CMat, phi: f64) -> CMat {
    CMat::from_fn(
        num.nrows(),
        num.ncols(),
        |i, j| if i == j { C64::from_polar(1.0, -phi * num[(i, i)].re) } else { re(0.0) },
    )
}

#[test]
fn two_mode_interferometer_qfi_matches_truncated_fock() {
    let n = 12;
    let a1 = kron(&annihilation(n), &CMat::identity(n, n));
    let a2 = kron(&CMat::identity(n, n), &annihilation(n));
    let p = WilliamsonParams {
        nu: 1.1,
        phi1: 0.4,
        phi2: -0.3,
        theta: 0.5,
        psi: 0.2,
        xi1: 0.2,
        xi2: 0.1,
        gamma_abs: 0.5,
        l: 0.6,
        phi_d1: 0.3,
        phi_d2: 1.2,
    };
    // Passive part from its mode matrix u = e^{−iH}: the Fock unitary is
    // exp(−i Σ aᵢ† Hᵢⱼ aⱼ).
    let passive = |h: [[C64; 2]; 2]| {
        let ops = [&a1, &a2];
        let mut gen = CMat::zeros(n * n, n * n);
        for i in 0..2 {
            for j in 0..2 {
                gen += ops[i].adjoint() * ops[j] * h[i][j];
            }
        }
        expm(&(gen * c(0.0, -1.0))).unwrap()
    };
    let z = re(0.0);
    let n1 = [[re(1.0), z], [z, z]];
    let n2 = [[z, z], [z, re(1.0)]];
    let scale = |h: [[C64; 2]; 2], s: f64| h.map(|r| r.map(|v| v * s));
    // b(θ) = exp(−iθ(−σ_y)), σ_y = [[0,−i],[i,0]]
    let minus_sy = [[z, c(0.0, 1.0)], [c(0.0, -1.0), z]];
    let r_as = |psi: f64| {
        let mut h = scale(n1, psi);
        h[1][1] = re(-psi);
        h
    };
    let g = p.gamma();
    let single = |op: &CMat, xi: f64| {
        let ad = op.adjoint();
        expm(&((op * op - &ad * &ad) * re(0.5 * xi))).unwrap()
    };
    let disp = expm(&(a1.adjoint() * g[0] - &a1 * g[0].conj() + a2.adjoint() * g[1] - &a2 * g[1].conj())).unwrap();
    let u = disp
        * passive(scale(n1, p.phi1))
        * passive(scale(n2, p.phi2))
        * passive(scale(minus_sy, p.theta))
        * passive(r_as(p.psi))
        * single(&a1, p.xi1)
        * single(&a2, p.xi2);
    let rho = &u * kron(&thermal(n, p.nu), &thermal(n, p.nu)) * u.adjoint();
    // Ĝ = a₁†(σ_y)a₂ + … = −i a₁†a₂ + i a₂†a₁
    let gen = (a1.adjoint() * &a2) * c(0.0, -1.0) + (a2.adjoint() * &a1) * c(0.0, 1.0);
    let fock = sld_qfi(&rho, &gen);
    let phase_space = qfi_under_generator(&p.build().unwrap(), &interferometer_generator()).unwrap().value;
    assert!((fock - phase_space).abs() < 0.01 * phase_space, "{fock} vs {phase_space}");
}

fn sqrtm_psd(m: &CMat) -> CMat {
    let e = eigh(&((m + m.adjoint()) * re(0.5))).unwrap();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        e.values.len(),
        e.values.iter().map(|v| re(v.max(0.0).sqrt())),
    ));
    &e.vectors * d * e.vectors.adjoint()
}

/// Tr √(√ρ σ √ρ), the root fidelity.
fn root_fidelity(rho: &CMat, sigma: &CMat) -> f64 {
    let s = sqrtm_psd(rho);
    let inner = &s * sigma * &s;
    eigh(&((&inner + inner.adjoint()) * re(0.5))).unwrap().values.iter().map(|v| v.max(0.0).sqrt()).sum()
}

#[test]
fn mixed_family_qfi_matches_bures_metric() {
    use nalgebra::Matrix2;
    use qcrit_core::gaussian::qfi_one_mode_xp;
    // ξ(θ) = 0.3 + 0.5θ, ν(θ) = 1.4 + 0.8θ at θ = 0. The squeezer maps
    // x → e^{−ξ}x, so σ_xp = (ν/2) diag(e^{−2ξ}, e^{2ξ}).
    let n = 60;
    let a = annihilation(n);
    let rho = |th: f64| {
        let s = squeezer(&a, 0.3 + 0.5 * th);
        &s * thermal(n, 1.4 + 0.8 * th) * s.adjoint()
    };
    let d = 2e-3;
    let bures = 8.0 * (1.0 - root_fidelity(&rho(-d), &rho(d))) / (2.0 * d).powi(2);
    let (xi, nu) = (0.3f64, 1.4f64);
    let sigma = Matrix2::new((-2.0 * xi).exp(), 0.0, 0.0, (2.0 * xi).exp()) * (nu / 2.0);
    // ν̇ = 0.8, ξ̇ = 0.5
    let dsig = Matrix2::new((-2.0 * xi).exp() * (0.4 - 0.5 * nu), 0.0, 0.0, (2.0 * xi).exp() * (0.4 + 0.5 * nu));
    let q = qfi_one_mode_xp(&sigma, &dsig).unwrap();
    assert!(q.purity_term > 0.01 * q.value);
    assert!((bures - q.value).abs() < 0.01 * q.value, "{bures} vs {}", q.value);
}
