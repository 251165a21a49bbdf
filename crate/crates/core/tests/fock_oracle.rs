//! Transition amplitudes against an independent second-quantized evolution:
//! the input state is built by applying `Σ_i U_ij a_i†` once per photon in
//! mode `j` to the vacuum, with no permanents involved.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use polyvqc::fock::{FockBasis, FockState};
use polyvqc::interferometer::UnitaryMatrix;
use polyvqc::simulator::{ideal_distribution, transition_amplitude};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Ket = HashMap<Vec<usize>, Complex64>;

fn evolve(u: &UnitaryMatrix, input: &FockState) -> Ket {
    let m = u.modes();
    let mut ket: Ket = HashMap::from([(vec![0; m], Complex64::new(1.0, 0.0))]);
    let mut norm = 1.0;
    for (j, &n) in input.occupations().iter().enumerate() {
        for k in 1..=n {
            norm *= k as f64;
            let mut next = Ket::new();
            for (occ, amp) in &ket {
                for i in 0..m {
                    let mut o = occ.clone();
                    o[i] += 1;
                    let c = u.get(i, j) * amp * (o[i] as f64).sqrt();
                    *next.entry(o).or_default() += c;
                }
            }
            ket = next;
        }
    }
    let s = 1.0 / norm.sqrt();
    ket.values_mut().for_each(|a| *a *= s);
    ket
}

fn random_input(rng: &mut ChaCha8Rng, photons: usize, modes: usize) -> FockState {
    let mut occ = vec![0; modes];
    for _ in 0..photons {
        occ[rng.random_range(0..modes)] += 1;
    }
    FockState::new(occ)
}

#[test]
fn amplitudes_match_second_quantized_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let modes = rng.random_range(2..=5);
        let photons = rng.random_range(1..=4);
        let u = UnitaryMatrix::haar_random(modes, &mut rng);
        let input = random_input(&mut rng, photons, modes);
        let ket = evolve(&u, &input);
        let basis = FockBasis::enumerate(photons, modes).unwrap();
        for out in basis.states() {
            let want = ket.get(out.occupations()).copied().unwrap_or_default();
            let got = transition_amplitude(&u, &input, out).unwrap();
            assert!((got - want).norm() < 1e-9, "{input} -> {out}: {got} vs {want}");
        }
    }
}

fn permuted(u: &UnitaryMatrix, perm: &[usize]) -> UnitaryMatrix {
    let m = u.modes();
    let mut p = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
    for (i, &j) in perm.iter().enumerate() {
        p[(j, i)] = Complex64::new(1.0, 0.0);
    }
    UnitaryMatrix::new(&p * u.matrix() * p.adjoint(), 1e-10).unwrap()
}

fn relabel(s: &FockState, perm: &[usize]) -> FockState {
    let mut occ = vec![0; s.modes()];
    for (i, &j) in perm.iter().enumerate() {
        occ[j] = s.occupations()[i];
    }
    FockState::new(occ)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Renaming the modes consistently in the unitary and in both states
    /// leaves every transition probability unchanged.
    #[test]
    fn mode_relabelling_invariance(seed in any::<u64>(), modes in 2usize..=5, photons in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = UnitaryMatrix::haar_random(modes, &mut rng);
        let input = random_input(&mut rng, photons, modes);
        let mut perm: Vec<usize> = (0..modes).collect();
        for i in (1..modes).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let v = permuted(&u, &perm);
        let basis = Arc::new(FockBasis::enumerate(photons, modes).unwrap());
        let d = ideal_distribution(&u, &input, &basis).unwrap();
        let d2 = ideal_distribution(&v, &relabel(&input, &perm), &basis).unwrap();
        for (s, p) in basis.states().iter().zip(d.probabilities()) {
            let q = d2.probability(&relabel(s, &perm)).unwrap();
            prop_assert!((p - q).abs() < 1e-10);
        }
    }
}
