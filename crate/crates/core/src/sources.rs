//! Entangled pairs and single-photon inputs with white-noise admixture.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{c, identity, ket, CVector, DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiPlus, Bell::PsiMinus];

    pub fn state(self, labels: [&str; 2]) -> PureState {
        let s = FRAC_1_SQRT_2;
        let amps = match self {
            Bell::PhiPlus => [s, 0., 0., s],
            Bell::PhiMinus => [s, 0., 0., -s],
            Bell::PsiPlus => [0., s, s, 0.],
            Bell::PsiMinus => [0., s, -s, 0.],
        };
        PureState::new(
            CVector::from_iterator(4, amps.iter().map(|&x| c(x, 0.))),
            &labels,
        )
        .expect("Bell states are normalized")
    }
}

fn check_mixedness(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::OutOfRange(format!(
            "mixedness {lambda} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Bell pair with white-noise weight `mixedness`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub target: Bell,
    pub mixedness: f64,
}

impl Default for PairSpec {
    fn default() -> Self {
        Self {
            target: Bell::PhiPlus,
            mixedness: 0.0,
        }
    }
}

impl PairSpec {
    pub fn new(target: Bell, mixedness: f64) -> Result<Self> {
        check_mixedness(mixedness)?;
        Ok(Self { target, mixedness })
    }
}

/// `(1 − λ)|Bell⟩⟨Bell| + λ I/4` on the two given modes.
pub fn make_pair(spec: &PairSpec, labels: [&str; 2]) -> Result<DensityMatrix> {
    check_mixedness(spec.mixedness)?;
    let pure = spec.target.state(labels).to_density();
    let lambda = spec.mixedness;
    let m = pure.entries() * c(1.0 - lambda, 0.) + identity(4) * c(lambda / 4.0, 0.);
    DensityMatrix::new(m, &labels)
}

/// Single-qubit polarization to be teleported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InputState {
    H,
    V,
    #[serde(rename = "+")]
    Plus,
    R,
    /// `α|H⟩ + β|V⟩` given as `(Re α, Im α, Re β, Im β)`.
    #[serde(rename = "custom")]
    Custom([f64; 4]),
}

impl InputState {
    pub fn name(&self) -> String {
        match self {
            InputState::H => "H".into(),
            InputState::V => "V".into(),
            InputState::Plus => "+".into(),
            InputState::R => "R".into(),
            InputState::Custom(a) => format!("({}{:+}i, {}{:+}i)", a[0], a[1], a[2], a[3]),
        }
    }

    pub fn ket(&self) -> Result<CVector> {
        let v = match self {
            InputState::H => ket::h(),
            InputState::V => ket::v(),
            InputState::Plus => ket::plus(),
            InputState::R => ket::r(),
            InputState::Custom(a) => CVector::from_vec(vec![c(a[0], a[1]), c(a[2], a[3])]),
        };
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "|α|² + |β|² = {} is not 1",
                norm * norm
            )));
        }
        Ok(v)
    }

    pub fn pure(&self, label: &str) -> Result<PureState> {
        PureState::new(self.ket()?, &[label])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub state: InputState,
    pub mixedness: f64,
}

impl InputSpec {
    pub fn new(state: InputState, mixedness: f64) -> Result<Self> {
        check_mixedness(mixedness)?;
        state.ket()?;
        Ok(Self { state, mixedness })
    }

    pub fn pure(state: InputState) -> Self {
        Self {
            state,
            mixedness: 0.0,
        }
    }
}

/// `(1 − λ)|χ⟩⟨χ| + λ I/2`.
pub fn make_input(spec: &InputSpec, label: &str) -> Result<DensityMatrix> {
    check_mixedness(spec.mixedness)?;
    let pure = spec.state.pure(label)?.to_density();
    let lambda = spec.mixedness;
    let m = pure.entries() * c(1.0 - lambda, 0.) + identity(2) * c(lambda / 2.0, 0.);
    DensityMatrix::new(m, &[label])
}

/// `H, V, +, R`: Bloch vectors z, −z, x, y.
pub fn tomographic_input_set() -> [InputState; 4] {
    [
        InputState::H,
        InputState::V,
        InputState::Plus,
        InputState::R,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{max_abs_diff, sigma_y, TOL};

    #[test]
    fn pair_limits() {
        let pure = make_pair(&PairSpec::default(), ["a", "b"]).unwrap();
        let bell = Bell::PhiPlus.state(["a", "b"]).to_density();
        assert!(max_abs_diff(pure.entries(), bell.entries()) < TOL);

        let white = make_pair(&PairSpec::new(Bell::PhiPlus, 1.0).unwrap(), ["a", "b"]).unwrap();
        assert!(max_abs_diff(white.entries(), &(identity(4) * c(0.25, 0.))) < TOL);
    }

    #[test]
    fn pair_fidelity_with_noise() {
        let rho = make_pair(&PairSpec::new(Bell::PhiPlus, 0.2).unwrap(), ["a", "b"]).unwrap();
        let f = rho
            .fidelity_to_pure(&Bell::PhiPlus.state(["a", "b"]))
            .unwrap();
        assert!((f - 0.85).abs() < TOL);
    }

    #[test]
    fn bell_marginals_are_white() {
        for b in Bell::ALL {
            let rho = make_pair(&PairSpec::new(b, 0.0).unwrap(), ["a", "b"]).unwrap();
            for keep in ["a", "b"] {
                let m = rho.partial_trace(&[keep]).unwrap();
                assert!(max_abs_diff(m.entries(), &(identity(2) * c(0.5, 0.))) < 1e-12);
            }
        }
    }

    #[test]
    fn input_examples() {
        let h = make_input(&InputSpec::pure(InputState::H), "c").unwrap();
        assert!((h.entries()[(0, 0)].re - 1.0).abs() < TOL);

        let r = make_input(&InputSpec::pure(InputState::R), "c").unwrap();
        let expected = (identity(2) + sigma_y()) * c(0.5, 0.);
        assert!(max_abs_diff(r.entries(), &expected) < TOL);

        let plus = make_input(&InputSpec::new(InputState::Plus, 0.1).unwrap(), "c").unwrap();
        assert!((plus.purity() - 0.905).abs() < TOL);
    }

    #[test]
    fn custom_input_must_be_normalized() {
        assert!(InputSpec::new(InputState::Custom([1.0, 0.0, 1.0, 0.0]), 0.0).is_err());
        let s = FRAC_1_SQRT_2;
        assert!(InputSpec::new(InputState::Custom([s, 0.0, 0.0, s]), 0.0).is_ok());
        assert!(PairSpec::new(Bell::PhiPlus, 1.5).is_err());
    }

    #[test]
    fn tomographic_set_spans_bloch_space() {
        use crate::state::pauli_basis;
        let set = tomographic_input_set();
        assert_eq!(set.len(), 4);
        let bloch: Vec<[f64; 3]> = set
            .iter()
            .map(|s| {
                let rho = s.pure("c").unwrap().to_density();
                let p = pauli_basis();
                [1, 2, 3].map(|k| (rho.entries() * &p[k]).trace().re)
            })
            .collect();
        let expected = [[0., 0., 1.], [0., 0., -1.], [1., 0., 0.], [0., 1., 0.]];
        for (b, e) in bloch.iter().zip(expected) {
            for k in 0..3 {
                assert!((b[k] - e[k]).abs() < TOL);
            }
        }
    }

    #[test]
    fn purity_formula() {
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let lambda = i as f64 / 10.0;
            let rho = make_input(&InputSpec::new(InputState::R, lambda).unwrap(), "c").unwrap();
            let expected = 1.0 - lambda + lambda * lambda / 2.0;
            assert!((rho.purity() - expected).abs() < TOL);
            assert!(rho.purity() < last);
            last = rho.purity();
        }
    }
}
