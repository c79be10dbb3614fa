#![allow(dead_code)]

use cphase_bsa::state::{c, CMatrix, CVector, DensityMatrix, PureState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_pair(r: &mut impl Rng) -> (f64, f64) {
    // Box-Muller
    let u: f64 = r.random_range(1e-12..1.0);
    let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let m = (-2.0 * u.ln()).sqrt();
    (m * t.cos(), m * t.sin())
}

/// Haar-random pure state.
pub fn random_ket(r: &mut impl Rng, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        let (x, y) = gaussian_pair(r);
        c(x, y)
    });
    let n = v.norm();
    v / c(n, 0.)
}

/// Random full-rank state from the Ginibre ensemble.
pub fn random_density(r: &mut impl Rng, labels: &[&str]) -> DensityMatrix {
    let dim = 1 << labels.len();
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let (x, y) = gaussian_pair(r);
        c(x, y)
    });
    DensityMatrix::from_unnormalized(&g * g.adjoint(), labels).unwrap()
}

pub fn random_pure(r: &mut impl Rng, labels: &[&str]) -> PureState {
    PureState::new(random_ket(r, 1 << labels.len()), labels).unwrap()
}

/// `e^{iα} Rz(β) Ry(γ) Rz(δ)`.
pub fn unitary_from_angles(a: f64, b: f64, g: f64, d: f64) -> CMatrix {
    let rz = |t: f64| {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0., -t / 2.).exp(),
                c(0., 0.),
                c(0., 0.),
                c(0., t / 2.).exp(),
            ],
        )
    };
    let ry = CMatrix::from_row_slice(
        2,
        2,
        &[
            c((g / 2.).cos(), 0.),
            c(-(g / 2.).sin(), 0.),
            c((g / 2.).sin(), 0.),
            c((g / 2.).cos(), 0.),
        ],
    );
    rz(b) * ry * rz(d) * c(0., a).exp()
}

pub fn random_unitary(r: &mut impl Rng) -> CMatrix {
    let mut angle = || r.random_range(0.0..std::f64::consts::TAU);
    unitary_from_angles(angle(), angle(), angle(), angle())
}

/// Seed strategy for proptest cases that build states from an RNG.
pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}
