//! Figures of merit: fidelity, logarithmic negativity, CHSH, and Poisson
//! bootstrap error bars.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::protocols::TildeBell;
use crate::state::{
    analyzer_observable, expectation, trace_norm, CMatrix, DensityMatrix, PureState,
};

/// `⟨χ| U ρ U† |χ⟩`, with `U` acting on the whole register when given.
pub fn fidelity_pure(
    rho: &DensityMatrix,
    target: &PureState,
    correction: Option<&CMatrix>,
) -> Result<f64> {
    let f = match correction {
        Some(u) => {
            let labels = rho.label_refs();
            rho.conjugate(u, &labels)?.fidelity_to_pure(target)?
        }
        None => rho.fidelity_to_pure(target)?,
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `log2 ‖ρ^{T_A}‖₁` for a two-qubit state, transposing the first qubit.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "log-negativity needs two qubits, got {}",
            rho.num_qubits()
        )));
    }
    let pt = rho.partial_transpose(&rho.labels()[0])?;
    Ok(trace_norm(&pt)?.log2().max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChshVariant {
    /// `+⟨ÂD̂⟩ − ⟨Âd̂⟩ + ⟨âD̂⟩ + ⟨âd̂⟩`
    #[serde(rename = "S+")]
    Plus,
    /// `−⟨ÂD̂⟩ + ⟨Âd̂⟩ + ⟨âD̂⟩ + ⟨âd̂⟩`
    #[serde(rename = "S-")]
    Minus,
}

/// Sign variant that reaches `|S| = 2√2` on each tilde Bell state at the
/// standard angles. Derived by evaluating both variants on the ideal states.
pub const SWAP_CHSH_VARIANTS: [(TildeBell, ChshVariant); 4] = [
    (TildeBell::PhiPlus, ChshVariant::Plus),
    (TildeBell::PsiPlus, ChshVariant::Minus),
    (TildeBell::PhiMinus, ChshVariant::Minus),
    (TildeBell::PsiMinus, ChshVariant::Plus),
];

pub fn chsh_variant_for(bell: TildeBell) -> ChshVariant {
    SWAP_CHSH_VARIANTS
        .iter()
        .find(|(b, _)| *b == bell)
        .map(|(_, v)| *v)
        .expect("table covers every state")
}

/// Analyzer angles in degrees. `a_*` act on the first qubit, `d_*` on the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSpec {
    pub a_small: f64,
    pub d_big: f64,
    pub a_big: f64,
    pub d_small: f64,
    pub variant: ChshVariant,
}

impl ChshSpec {
    pub fn standard(variant: ChshVariant) -> Self {
        Self {
            a_small: 0.0,
            d_big: -22.5,
            a_big: -45.0,
            d_small: -67.5,
            variant,
        }
    }
}

/// Signed CHSH combination on a two-qubit state.
pub fn chsh(rho: &DensityMatrix, spec: &ChshSpec) -> Result<f64> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "CHSH needs two qubits, got {}",
            rho.num_qubits()
        )));
    }
    let (first, second) = (&rho.labels()[0], &rho.labels()[1]);
    let corr = |alpha: f64, beta: f64| -> Result<f64> {
        let obs = analyzer_observable(alpha, first).tensor(&analyzer_observable(beta, second))?;
        expectation(rho, &obs)
    };
    let big_big = corr(spec.a_big, spec.d_big)?;
    let big_small = corr(spec.a_big, spec.d_small)?;
    let small_big = corr(spec.a_small, spec.d_big)?;
    let small_small = corr(spec.a_small, spec.d_small)?;
    let sign = match spec.variant {
        ChshVariant::Plus => 1.0,
        ChshVariant::Minus => -1.0,
    };
    Ok(sign * (big_big - big_small) + small_big + small_small)
}

/// Parametric Poisson bootstrap. Every raw count `c` is redrawn from
/// `Poisson(c)`, corrected with the row's efficiency and fed to `estimator`.
/// Returns the estimate on the original table and the sample standard
/// deviation over resamples.
pub fn bootstrap_error<F>(
    counts: &CountTable,
    estimator: F,
    n_resamples: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&CountTable) -> Result<f64> + Sync,
{
    let out = bootstrap_many(counts, |t| estimator(t).map(|x| vec![x]), n_resamples, seed)?;
    Ok(out[0])
}

/// [`bootstrap_error`] for an estimator producing several quantities from the
/// same resample. Resample `i` draws from its own ChaCha stream, so results
/// do not depend on thread scheduling. A resample is skipped when the
/// estimator fails or returns a non-finite value.
pub fn bootstrap_many<F>(
    counts: &CountTable,
    estimator: F,
    n_resamples: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&CountTable) -> Result<Vec<f64>> + Sync,
{
    if n_resamples < 100 {
        return Err(Error::OutOfRange(format!(
            "bootstrap needs at least 100 resamples, got {n_resamples}"
        )));
    }
    let values = estimator(counts)?;
    let samples: Vec<Option<Vec<f64>>> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let raw: Vec<u64> = counts
                .rows()
                .iter()
                .map(|r| {
                    if r.raw == 0 {
                        0
                    } else {
                        Poisson::new(r.raw as f64)
                            .expect("positive rate")
                            .sample(&mut rng) as u64
                    }
                })
                .collect();
            estimator(&counts.with_raw(&raw))
                .ok()
                .filter(|x| x.len() == values.len() && x.iter().all(|v| v.is_finite()))
        })
        .collect();
    let good: Vec<Vec<f64>> = samples.into_iter().flatten().collect();
    let skipped = n_resamples - good.len();
    if skipped * 10 > n_resamples || good.len() < 2 {
        return Err(Error::Bootstrap {
            skipped,
            total: n_resamples,
        });
    }
    let n = good.len() as f64;
    Ok(values
        .iter()
        .enumerate()
        .map(|(k, &value)| {
            let mean = good.iter().map(|s| s[k]).sum::<f64>() / n;
            let var = good.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (value, var.sqrt())
        })
        .collect())
}
