use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use wqed_core::observables::{g2, g3, site_populations};
use wqed_core::{AmplitudeState, BasisIndex, EntropyMode, InterfaceCut, LatticeGeometry, SiteMoments};

/// Joint occupation distribution over all 2^N configurations. The ground
/// configuration carries the norm lost from the sector.
fn joint_distribution(state: &AmplitudeState) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, f64)> = state
        .basis()
        .masks()
        .iter()
        .zip(state.amplitudes())
        .map(|(&m, a)| (m, a.norm_sqr()))
        .collect();
    out.push((0, 1.0 - state.norm_sqr()));
    out
}

fn expect(dist: &[(u64, f64)], sites: &[usize]) -> f64 {
    dist.iter()
        .filter(|(m, _)| sites.iter().all(|&s| m & (1 << s) != 0))
        .map(|(_, p)| p)
        .sum()
}

/// Partial trace of the full 2^N density matrix over the disordered zone,
/// followed by a dense Hermitian eigensolve.
fn embedded_entropy(state: &AmplitudeState, geo: &LatticeGeometry, conditional: bool) -> f64 {
    let nc = geo.n_clean();
    let nd = geo.n_disordered();
    let na = 1usize << nc;
    let nb = 1usize << nd;
    let mut psi = DMatrix::<Complex64>::zeros(na, nb);
    let norm = state.norm_sqr();
    let scale = if conditional { 1.0 / norm.sqrt() } else { 1.0 };
    let clean: Vec<usize> = geo.clean_indices().collect();
    let dis: Vec<usize> = geo.disordered_indices().collect();
    for (&mask, a) in state.basis().masks().iter().zip(state.amplitudes()) {
        let ra = clean.iter().enumerate().fold(0, |acc, (b, &s)| acc | (((mask >> s) & 1) << b));
        let rb = dis.iter().enumerate().fold(0, |acc, (b, &s)| acc | (((mask >> s) & 1) << b));
        psi[(ra as usize, rb as usize)] = a * scale;
    }
    let mut rho = &psi * psi.adjoint();
    if !conditional {
        rho[(0, 0)] += Complex64::new(1.0 - norm, 0.0);
    }
    rho.symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 1e-12)
        .map(|&l| -l * l.ln())
        .sum()
}

fn state_from(basis: Arc<BasisIndex>, raw: &[(f64, f64)], norm: f64) -> AmplitudeState {
    let mut amps: Vec<Complex64> = raw.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let f = if total > 0.0 { (norm / total).sqrt() } else { 0.0 };
    for a in &mut amps {
        *a *= f;
    }
    AmplitudeState::new(basis, amps, 0.0).unwrap()
}

fn random_case() -> impl Strategy<Value = (usize, usize, usize, Vec<(f64, f64)>, f64)> {
    (1usize..=4, 1usize..=4, 1usize..=3)
        .prop_filter("M ≤ N", |(nc, nd, m)| m <= &(nc + nd))
        .prop_flat_map(|(nc, nd, m)| {
            let dim = BasisIndex::new(nc + nd, m).unwrap().dim();
            (
                Just(nc),
                Just(nd),
                Just(m),
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim),
                0.05f64..=1.0,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn entropy_matches_full_partial_trace((nc, nd, m, raw, norm) in random_case()) {
        let geo = LatticeGeometry::new(nc, nd, 0.7, 1.1).unwrap();
        let basis = Arc::new(BasisIndex::new(nc + nd, m).unwrap());
        let state = state_from(basis.clone(), &raw, norm);
        prop_assume!(state.norm_sqr() > 1e-6);
        let cut = InterfaceCut::new(basis, &geo).unwrap();
        let s = cut.entropy(&state, EntropyMode::GroundCompleted);
        prop_assert!((s - embedded_entropy(&state, &geo, false)).abs() < 1e-10);
        let sc = cut.entropy(&state, EntropyMode::Conditional);
        prop_assert!((sc - embedded_entropy(&state, &geo, true)).abs() < 1e-10);
        prop_assert!(s >= -1e-14 && s <= (nc as f64) * std::f64::consts::LN_2 + 1e-10);
        let trace: f64 = cut.reduced_spectrum(&state, EntropyMode::GroundCompleted).iter().sum();
        prop_assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cumulants_match_joint_distribution((nc, nd, m, raw, norm) in random_case()) {
        let n = nc + nd;
        let basis = Arc::new(BasisIndex::new(n, m).unwrap());
        let state = state_from(basis, &raw, norm);
        let dist = joint_distribution(&state);
        let mom = SiteMoments::from_state(&state, m >= 3).unwrap();
        let pop = site_populations(&state);
        for i in 0..n {
            prop_assert!((pop[i] - expect(&dist, &[i])).abs() < 1e-13);
            for j in 0..n {
                let ej = expect(&dist, &[i, j]);
                let want = ej - expect(&dist, &[i]) * expect(&dist, &[j]);
                prop_assert!((g2(&mom, i, j) - want).abs() < 1e-13);
                if m >= 3 {
                    for k in 0..n {
                        let (ei, ek) = (expect(&dist, &[i]), expect(&dist, &[k]));
                        let want = expect(&dist, &[i, j, k])
                            - ei * expect(&dist, &[j, k])
                            - expect(&dist, &[j]) * expect(&dist, &[k, i])
                            - ek * ej
                            + 2.0 * ei * expect(&dist, &[j]) * ek;
                        prop_assert!((g3(&mom, i, j, k).unwrap() - want).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn cumulants_are_symmetric((nc, nd, raw, norm) in (1usize..=3, 2usize..=4).prop_flat_map(|(nc, nd)| {
        let dim = BasisIndex::new(nc + nd, 3).unwrap().dim();
        (Just(nc), Just(nd), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim), 0.1f64..=1.0)
    })) {
        let n = nc + nd;
        let basis = Arc::new(BasisIndex::new(n, 3).unwrap());
        let mom = SiteMoments::from_state(&state_from(basis, &raw, norm), true).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g2(&mom, i, j), g2(&mom, j, i));
                for k in 0..n {
                    let v = g3(&mom, i, j, k).unwrap();
                    for w in [g3(&mom, j, i, k), g3(&mom, k, j, i), g3(&mom, i, k, j), g3(&mom, j, k, i)] {
                        prop_assert!((v - w.unwrap()).abs() < 1e-14);
                    }
                }
            }
        }
    }

    /// Relabelling sites inside the disordered zone is a local unitary on B.
    #[test]
    fn entropy_ignores_relabelling_inside_b((nc, nd, m, raw, norm) in random_case(), seed in any::<u64>()) {
        let n = nc + nd;
        let geo = LatticeGeometry::new(nc, nd, 0.7, 1.1).unwrap();
        let basis = Arc::new(BasisIndex::new(n, m).unwrap());
        let state = state_from(basis.clone(), &raw, norm);
        prop_assume!(state.norm_sqr() > 1e-6);

        // deterministic shuffle of the disordered indices
        let mut perm: Vec<usize> = (0..n).collect();
        let mut x = seed | 1;
        for a in (nc + 1..n).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            let b = nc + (x % (a - nc + 1) as u64) as usize;
            perm.swap(a, b);
        }
        let mut moved = vec![Complex64::new(0.0, 0.0); basis.dim()];
        for (s, a) in state.amplitudes().iter().enumerate() {
            let sites: Vec<usize> = basis.state(s).iter().map(|&i| perm[i as usize]).collect();
            let mut sorted = sites.clone();
            sorted.sort_unstable();
            moved[basis.rank(&sorted).unwrap()] = *a;
        }
        let moved = AmplitudeState::new(basis.clone(), moved, 0.0).unwrap();
        let cut = InterfaceCut::new(basis, &geo).unwrap();
        let (s0, s1) = (cut.entropy(&state, EntropyMode::GroundCompleted), cut.entropy(&moved, EntropyMode::GroundCompleted));
        prop_assert!((s0 - s1).abs() < 1e-10);
    }
}

#[test]
fn bell_pair_across_larger_cut() {
    // (|e_a g_b⟩ + |g_a e_b⟩)/√2 on one clean and one disordered site of a longer chain
    let geo = LatticeGeometry::new(3, 3, 1.0, 1.0).unwrap();
    let basis = Arc::new(BasisIndex::new(6, 1).unwrap());
    let h = Complex64::new(0.5f64.sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 6];
    amps[1] = h;
    amps[4] = -h;
    let state = AmplitudeState::new(basis.clone(), amps, 0.0).unwrap();
    let cut = InterfaceCut::new(basis, &geo).unwrap();
    let s = cut.entropy(&state, EntropyMode::GroundCompleted);
    assert!((s - std::f64::consts::LN_2).abs() < 1e-12);
}
