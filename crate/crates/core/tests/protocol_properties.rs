mod common;

use common::{random_density, random_ket, rng, seeds};
use cphase_bsa::fock::{gate_channel, Overlap};
use cphase_bsa::metrics::fidelity_pure;
use cphase_bsa::protocols::{swap, teleport};
use cphase_bsa::sources::{
    make_input, make_pair, tomographic_input_set, Bell, InputSpec, InputState, PairSpec,
};
use cphase_bsa::state::PureState;
use proptest::prelude::*;

fn average_fidelity(v: f64, input: InputState, pair_mixedness: f64) -> f64 {
    let channel = gate_channel(Overlap::new(v).unwrap()).unwrap();
    let pair = make_pair(
        &PairSpec::new(Bell::PhiPlus, pair_mixedness).unwrap(),
        ["a", "b"],
    )
    .unwrap();
    let rho = make_input(&InputSpec::pure(input), "c").unwrap();
    let out = teleport(&rho, &pair, &channel, true)
        .unwrap()
        .pooled_state()
        .unwrap();
    fidelity_pure(&out, &input.pure("a").unwrap(), None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ideal_teleportation_of_random_inputs(seed in seeds()) {
        let psi = random_ket(&mut rng(seed), 2);
        let input = PureState::new(psi.clone(), &["c"]).unwrap().to_density();
        let target = PureState::new(psi, &["a"]).unwrap();
        let pair = make_pair(&PairSpec::default(), ["a", "b"]).unwrap();
        let result = teleport(&input, &pair, &gate_channel(Overlap::ideal()).unwrap(), true).unwrap();
        for o in &result.outcomes {
            prop_assert!((o.probability - 1.0 / 36.0).abs() < 1e-12);
            let f = fidelity_pure(o.state.as_ref().unwrap(), &target, None).unwrap();
            prop_assert!((f - 1.0).abs() < 1e-10, "{}: {}", o.bell, f);
        }
    }

    #[test]
    fn swapped_states_are_valid(seed in seeds(), v in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let ab = random_density(&mut r, &["a", "b"]);
        let cd = random_density(&mut r, &["c", "d"]);
        let result = swap(&ab, &cd, &gate_channel(Overlap::new(v).unwrap()).unwrap()).unwrap();
        prop_assert!(result.success_probability() <= 1.0 + 1e-12);
        prop_assert!((result.success_probability() + result.failure_probability - 1.0).abs() < 1e-10);
        for o in &result.outcomes {
            prop_assert!(o.probability >= 0.0);
            if let Some(s) = &o.state {
                prop_assert!(s.is_physical());
                prop_assert_eq!(s.label_refs(), vec!["a", "d"]);
            }
        }
    }
}

#[test]
fn teleport_fidelity_non_decreasing_in_overlap() {
    for input in tomographic_input_set() {
        let grid: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&v| average_fidelity(v, input, 0.0))
            .collect();
        assert!(
            grid.windows(2).all(|w| w[1] >= w[0] - 1e-12),
            "{}: {grid:?}",
            input.name()
        );
    }
}

#[test]
fn h_teleportation_ignores_overlap() {
    let reference = average_fidelity(1.0, InputState::H, 0.1);
    for v in [0.0, 0.2, 0.5, 0.9] {
        assert!((average_fidelity(v, InputState::H, 0.1) - reference).abs() < 1e-10);
    }
}

#[test]
fn separable_pair_stays_below_classical_limit() {
    for v in [0.0, 0.5, 1.0] {
        let avg: f64 = tomographic_input_set()
            .iter()
            .map(|&s| average_fidelity(v, s, 1.0))
            .sum::<f64>()
            / 4.0;
        assert!(avg <= 2.0 / 3.0 + 0.01, "v = {v}: {avg}");
    }
}
