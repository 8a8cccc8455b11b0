//! Non-Hermitian no-jump generator of the chiral waveguide model.
//!
//! Time is measured in units of `1/γ`, so the total guided decay rate is 1.
//! In the single-excitation sector the generator `G = -i H_eff` reads
//!
//! ```text
//! G[μ][ν] = -γ_R exp(i(φ_μ - φ_ν))   μ > ν
//! G[μ][ν] = -γ_L exp(i(φ_ν - φ_μ))   μ < ν
//! G[μ][μ] = -(γ + γ_ng) / 2
//! ```
//!
//! where the ordering uses site labels, never the disorder-shifted phases.
//! The `M`-excitation generator `V` copies `G[μ][ν]` onto every hop that moves
//! one excitation from `ν` to `μ` and sums the diagonal over occupied sites.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisIndex;
use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};

/// Decay rates, with the guided rate `γ` fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    directionality: f64,
    beta: f64,
}

impl PhysicalParams {
    pub fn new(directionality: f64, beta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&directionality) {
            return Err(Error::config(
                "directionality",
                format!("must lie in [-1, 1], got {directionality}"),
            ));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::config("beta", format!("must lie in (0, 1], got {beta}")));
        }
        Ok(Self { directionality, beta })
    }

    /// Reciprocal coupling with no loss to non-guided modes.
    pub fn reciprocal() -> Self {
        Self {
            directionality: 0.0,
            beta: 1.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        1.0
    }

    pub fn directionality(&self) -> f64 {
        self.directionality
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma_right(&self) -> f64 {
        0.5 * (1.0 + self.directionality)
    }

    pub fn gamma_left(&self) -> f64 {
        0.5 * (1.0 - self.directionality)
    }

    /// Non-guided decay rate `γ (1/β - 1)`; exactly 0 when `β = 1`.
    pub fn gamma_ng(&self) -> f64 {
        if self.beta == 1.0 {
            0.0
        } else {
            1.0 / self.beta - 1.0
        }
    }
}

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Single-excitation generator `G` over dense site indices.
pub fn single_excitation_coupling(realization: &DisorderRealization, params: &PhysicalParams) -> DMatrix<Complex64> {
    let phi = realization.phases();
    let n = phi.len();
    let (gr, gl) = (params.gamma_right(), params.gamma_left());
    let diag = Complex64::new(-0.5 * (params.gamma() + params.gamma_ng()), 0.0);
    DMatrix::from_fn(n, n, |mu, nu| match mu.cmp(&nu) {
        std::cmp::Ordering::Greater => -gr * cis(phi[mu] - phi[nu]),
        std::cmp::Ordering::Less => -gl * cis(phi[nu] - phi[mu]),
        std::cmp::Ordering::Equal => diag,
    })
}

/// Hermitian single-excitation decay matrix `Γ`, with `G + G† = -Γ`.
pub fn decay_matrix(realization: &DisorderRealization, params: &PhysicalParams) -> DMatrix<Complex64> {
    let phi = realization.phases();
    let n = phi.len();
    let (gr, gl, gng) = (params.gamma_right(), params.gamma_left(), params.gamma_ng());
    DMatrix::from_fn(n, n, |mu, nu| {
        let d = phi[mu] - phi[nu];
        let mut v = gr * cis(d) + gl * cis(-d);
        if mu == nu {
            v += gng;
        }
        v
    })
}

/// Realization-independent sparsity structure of `V` on a basis.
///
/// Rows are stored in compressed form with ascending columns. Each stored
/// entry remembers the site pair `(μ, ν)` whose single-excitation coupling it
/// copies; diagonal entries carry [`HopPattern::DIAGONAL`].
#[derive(Debug, Clone)]
pub struct HopPattern {
    n_sites: usize,
    n_excitations: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    pairs: Vec<(u16, u16)>,
    /// Occupied sites per bare state, `dim × M`.
    states: Vec<u16>,
}

impl HopPattern {
    pub const DIAGONAL: (u16, u16) = (u16::MAX, u16::MAX);

    pub fn new(basis: &BasisIndex) -> Self {
        let dim = basis.dim();
        let per_row = basis.n_excitations() * (basis.n_sites() - basis.n_excitations()) + 1;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(dim * per_row);
        let mut pairs = Vec::with_capacity(dim * per_row);
        let mut row: Vec<(u32, (u16, u16))> = Vec::with_capacity(per_row);
        row_ptr.push(0);
        for s in 0..dim {
            row.clear();
            row.push((s as u32, Self::DIAGONAL));
            // hop from s to s' vacates `from` and fills `to`, so V[s][s'] = G[from][to]
            row.extend(
                basis
                    .hop_neighbors(s)
                    .into_iter()
                    .map(|h| (h.neighbor as u32, (h.from as u16, h.to as u16))),
            );
            row.sort_unstable_by_key(|e| e.0);
            for &(c, p) in &row {
                cols.push(c);
                pairs.push(p);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_sites: basis.n_sites(),
            n_excitations: basis.n_excitations(),
            row_ptr,
            cols,
            pairs,
            states: (0..dim).flat_map(|s| basis.state(s).iter().copied()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }
}

/// Sparse `M`-excitation generator for one disorder realization.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pattern: Arc<HopPattern>,
    values: Vec<Complex64>,
}

impl CouplingMatrix {
    /// Fills `pattern` with the entries of the single-excitation generator `g`.
    pub fn assemble(pattern: Arc<HopPattern>, g: &DMatrix<Complex64>) -> Result<Self> {
        if g.nrows() != pattern.n_sites || g.ncols() != pattern.n_sites {
            return Err(Error::Dimension(format!(
                "single-excitation coupling is {}x{}, basis has {} sites",
                g.nrows(),
                g.ncols(),
                pattern.n_sites
            )));
        }
        let m = pattern.n_excitations;
        let mut values = Vec::with_capacity(pattern.nnz());
        for s in 0..pattern.dim() {
            let occupied = &pattern.states[s * m..(s + 1) * m];
            for &(mu, nu) in &pattern.pairs[pattern.row_ptr[s]..pattern.row_ptr[s + 1]] {
                values.push(if (mu, nu) == HopPattern::DIAGONAL {
                    occupied.iter().map(|&i| g[(i as usize, i as usize)]).sum()
                } else {
                    g[(mu as usize, nu as usize)]
                });
            }
        }
        Ok(Self { pattern, values })
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<HopPattern> {
        &self.pattern
    }

    /// Entry `V[row][col]`, zero off the pattern.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let (lo, hi) = (self.pattern.row_ptr[row], self.pattern.row_ptr[row + 1]);
        match self.pattern.cols[lo..hi].binary_search(&(col as u32)) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Nonzero entries of one row as `(col, value)`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (lo, hi) = (self.pattern.row_ptr[row], self.pattern.row_ptr[row + 1]);
        self.pattern.cols[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `y = V x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let ptr = &self.pattern.row_ptr;
        let cols = &self.pattern.cols;
        for (r, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (ptr[r], ptr[r + 1]);
            let (mut re, mut im) = (0.0, 0.0);
            for (&c, v) in cols[lo..hi].iter().zip(&self.values[lo..hi]) {
                let xc = x[c as usize];
                re += v.re * xc.re - v.im * xc.im;
                im += v.re * xc.im + v.im * xc.re;
            }
            *out = Complex64::new(re, im);
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Writes `V` as sparse triplets.
    ///
    /// Format: one header line `# wqed-triplets v1 dim=<n> nnz=<k>`, then one
    /// line per stored entry `row col re im`, rows ascending and columns
    /// ascending within a row, floats in `{:.17e}`.
    pub fn write_triplets(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "# wqed-triplets v1 dim={} nnz={}", self.dim(), self.nnz())?;
        for r in 0..self.dim() {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Parses the output of [`CouplingMatrix::write_triplets`].
pub fn read_triplets(input: impl BufRead) -> io::Result<Vec<(usize, usize, Complex64)>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(format!("line {}: expected 4 fields", lineno + 1)));
        }
        let parse_err = |e: &dyn std::fmt::Display| bad(format!("line {}: {e}", lineno + 1));
        let r = f[0].parse().map_err(|e| parse_err(&e))?;
        let c = f[1].parse().map_err(|e| parse_err(&e))?;
        let re = f[2].parse().map_err(|e| parse_err(&e))?;
        let im = f[3].parse().map_err(|e| parse_err(&e))?;
        out.push((r, c, Complex64::new(re, im)));
    }
    Ok(out)
}

/// Builds `V` directly from a basis and single-excitation generator.
pub fn assemble_generator(basis: &BasisIndex, g: &DMatrix<Complex64>) -> Result<CouplingMatrix> {
    CouplingMatrix::assemble(Arc::new(HopPattern::new(basis)), g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeGeometry;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_setup(n_clean: usize, n_dis: usize, seed: u64) -> (LatticeGeometry, DisorderRealization) {
        let g = LatticeGeometry::new(n_clean, n_dis, 0.3 + 0.1 * (seed % 7) as f64, FRAC_PI_4).unwrap();
        let r = DisorderRealization::sample(&g, 0.9 * PI, seed).unwrap();
        (g, r)
    }

    #[test]
    fn rates_split() {
        for d in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            let p = PhysicalParams::new(d, 1.0).unwrap();
            assert_eq!(p.gamma_left() + p.gamma_right(), 1.0);
            assert_eq!(p.gamma_ng(), 0.0);
        }
        let p = PhysicalParams::new(0.0, 0.9).unwrap();
        assert!((p.gamma_ng() - (1.0 / 0.9 - 1.0)).abs() < 1e-15);
        assert!(PhysicalParams::new(1.5, 1.0).is_err());
        assert!(PhysicalParams::new(0.0, 0.0).is_err());
        assert!(PhysicalParams::new(0.0, 1.1).is_err());
    }

    #[test]
    fn two_atoms_at_full_wavelength() {
        let g = LatticeGeometry::new(1, 1, TAU, TAU).unwrap();
        let r = DisorderRealization::clean(&g);
        let m = single_excitation_coupling(&r, &PhysicalParams::reciprocal());
        for v in m.iter() {
            assert!((v - c(-0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn chiral_coupling_is_lower_triangular() {
        let (_, r) = random_setup(4, 5, 3);
        let m = single_excitation_coupling(&r, &PhysicalParams::new(1.0, 1.0).unwrap());
        for mu in 0..9 {
            for nu in mu + 1..9 {
                assert_eq!(m[(mu, nu)], c(0.0, 0.0));
            }
        }
        let m = single_excitation_coupling(&r, &PhysicalParams::new(-1.0, 1.0).unwrap());
        for mu in 0..9 {
            for nu in 0..mu {
                assert_eq!(m[(mu, nu)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn reciprocal_coupling_is_symmetric_with_abs_phase() {
        for seed in 0..20 {
            let (_, r) = random_setup(3, 6, seed);
            let m = single_excitation_coupling(&r, &PhysicalParams::reciprocal());
            let phi = r.phases();
            for mu in 0..9 {
                for nu in 0..9 {
                    if mu == nu {
                        continue;
                    }
                    // labels never reorder, but disorder may reverse phase order;
                    // the symmetric form uses the label-ordered difference
                    let d = if mu > nu { phi[mu] - phi[nu] } else { phi[nu] - phi[mu] };
                    assert!((m[(mu, nu)] - (-0.5) * cis(d)).norm() < 1e-14);
                    assert!((m[(mu, nu)] - m[(nu, mu)]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn reciprocal_clean_matches_abs_phase_form() {
        let g = LatticeGeometry::new(4, 4, 0.7, 0.7).unwrap();
        let r = DisorderRealization::clean(&g);
        let m = single_excitation_coupling(&r, &PhysicalParams::reciprocal());
        let phi = r.phases();
        for mu in 0..8 {
            for nu in 0..8 {
                if mu != nu {
                    assert!((m[(mu, nu)] + 0.5 * cis((phi[mu] - phi[nu]).abs())).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn decay_matrix_limits() {
        // a single atom sees only its own rate
        let g = LatticeGeometry::new(1, 1, 1.0, 1.0).unwrap();
        let p = PhysicalParams::new(0.3, 0.8).unwrap();
        let gam = decay_matrix(&DisorderRealization::clean(&g), &p);
        let single = gam.view((0, 0), (1, 1));
        assert!((single[(0, 0)] - c(1.0 + p.gamma_ng(), 0.0)).norm() < 1e-15);

        // D = 0 with all phases equal: γ · all-ones + γ_ng · I
        let g = LatticeGeometry::new(3, 3, TAU, TAU).unwrap();
        let r = DisorderRealization::clean(&g);
        let p = PhysicalParams::new(0.0, 0.5).unwrap();
        let gam = decay_matrix(&r, &p);
        let eig = gam.symmetric_eigenvalues();
        let top = eig.iter().cloned().fold(f64::MIN, f64::max);
        assert!((top - (6.0 + p.gamma_ng())).abs() < 1e-12);
    }

    #[test]
    fn decay_matrix_rank_two_and_psd() {
        for seed in 0..25 {
            let (_, r) = random_setup(5, 5, seed);
            let p = PhysicalParams::new(-1.0 + 0.08 * seed as f64, 1.0).unwrap();
            let gam = decay_matrix(&r, &p);
            let mut eig: Vec<f64> = gam.symmetric_eigenvalues().iter().cloned().collect();
            eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(eig.iter().all(|&e| e > -1e-12));
            assert!(eig[2..].iter().all(|&e| e.abs() < 1e-12), "{eig:?}");
            // trace of γ_R v v† + γ_L w w† is N
            assert!((eig.iter().sum::<f64>() - 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn generator_plus_adjoint_is_minus_decay() {
        for seed in 0..20 {
            let (_, r) = random_setup(4, 6, seed);
            let p = PhysicalParams::new(0.1 * (seed as f64 - 10.0) / 2.0, 0.6 + 0.02 * seed as f64).unwrap();
            let gm = single_excitation_coupling(&r, &p);
            let sum = &gm + gm.adjoint() + decay_matrix(&r, &p);
            assert!(sum.iter().all(|v| v.norm() < 1e-14));
        }
    }

    #[test]
    fn single_excitation_generator_equals_g() {
        let (geo, r) = random_setup(3, 4, 11);
        let basis = BasisIndex::new(geo.n_sites(), 1).unwrap();
        let gm = single_excitation_coupling(&r, &PhysicalParams::new(0.4, 0.9).unwrap());
        let v = assemble_generator(&basis, &gm).unwrap();
        assert_eq!(v.to_dense(), gm);
    }

    /// Brute-force matrix elements of Σ G[μ][ν] σ_μ† σ_ν between bare states.
    fn brute_force_v(basis: &BasisIndex, gm: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = basis.n_sites();
        let dim = basis.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let ket = basis.mask(col);
            for mu in 0..n {
                for nu in 0..n {
                    // σ_ν annihilates at ν, then σ_μ† creates at μ
                    if ket & (1 << nu) == 0 {
                        continue;
                    }
                    let lowered = ket & !(1 << nu);
                    if lowered & (1 << mu) != 0 {
                        continue;
                    }
                    let row = basis.rank_mask(lowered | (1 << mu)).unwrap();
                    out[(row, col)] += gm[(mu, nu)];
                }
            }
        }
        out
    }

    #[test]
    fn two_excitations_on_four_sites() {
        let (geo, r) = random_setup(2, 2, 5);
        let basis = BasisIndex::new(geo.n_sites(), 2).unwrap();
        let gm = single_excitation_coupling(&r, &PhysicalParams::reciprocal());
        let v = assemble_generator(&basis, &gm).unwrap();
        assert_eq!(v.dim(), 6);
        let dense = v.to_dense();
        let brute = brute_force_v(&basis, &gm);
        assert!((&dense - &brute).iter().all(|x| x.norm() < 1e-15));
        for r in 0..6 {
            assert!((dense[(r, r)] - c(-1.0, 0.0)).norm() < 1e-15);
            let off = (0..6).filter(|&c| c != r && dense[(r, c)].norm() > 0.0).count();
            assert_eq!(off, 4);
        }
    }

    #[test]
    fn three_excitations_match_brute_force() {
        let (geo, r) = random_setup(3, 4, 8);
        let basis = BasisIndex::new(geo.n_sites(), 3).unwrap();
        let gm = single_excitation_coupling(&r, &PhysicalParams::new(0.35, 0.95).unwrap());
        let v = assemble_generator(&basis, &gm).unwrap();
        let brute = brute_force_v(&basis, &gm);
        assert!((&v.to_dense() - &brute).iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn nnz_for_thirty_sites_three_excitations() {
        let basis = BasisIndex::new(30, 3).unwrap();
        let pattern = HopPattern::new(&basis);
        assert_eq!(pattern.nnz(), 4060 * (81 + 1));
    }

    #[test]
    fn diagonal_is_uniform_loss() {
        let (geo, r) = random_setup(4, 4, 2);
        let p = PhysicalParams::new(0.0, 0.8).unwrap();
        let basis = BasisIndex::new(geo.n_sites(), 3).unwrap();
        let v = assemble_generator(&basis, &single_excitation_coupling(&r, &p)).unwrap();
        let expect = -3.0 * (1.0 + p.gamma_ng()) / 2.0;
        for s in 0..v.dim() {
            assert!((v.get(s, s) - c(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn chiral_hops_only_move_right() {
        let (geo, r) = random_setup(3, 4, 4);
        let basis = BasisIndex::new(geo.n_sites(), 2).unwrap();
        for (d, rightward) in [(1.0, true), (-1.0, false)] {
            let v = assemble_generator(&basis, &single_excitation_coupling(&r, &PhysicalParams::new(d, 1.0).unwrap()))
                .unwrap();
            for s in 0..basis.dim() {
                for h in basis.hop_neighbors(s) {
                    // V[s][s'] moves an excitation from `to` (in s') onto `from` (in s)
                    let moved_right = h.from > h.to;
                    let entry = v.get(s, h.neighbor);
                    assert_eq!(entry.norm() > 0.0, moved_right == rightward);
                }
            }
        }
    }

    #[test]
    fn global_phase_shift_leaves_v_unchanged() {
        let (geo, r) = random_setup(3, 3, 9);
        let shifted = DisorderRealization::with_offsets(
            &geo,
            r.w_bar(),
            r.seed(),
            r.offsets().iter().map(|w| w + 1.234).collect(),
        );
        let basis = BasisIndex::new(geo.n_sites(), 2).unwrap();
        let p = PhysicalParams::new(0.3, 0.9).unwrap();
        let a = assemble_generator(&basis, &single_excitation_coupling(&r, &p)).unwrap();
        let b = assemble_generator(&basis, &single_excitation_coupling(&shifted, &p)).unwrap();
        assert!((a.to_dense() - b.to_dense()).iter().all(|x| x.norm() < 1e-13));
    }

    #[test]
    fn coherent_part_has_zero_diagonal_at_unit_beta() {
        let (geo, r) = random_setup(3, 3, 1);
        let basis = BasisIndex::new(geo.n_sites(), 2).unwrap();
        let v = assemble_generator(&basis, &single_excitation_coupling(&r, &PhysicalParams::new(0.2, 1.0).unwrap()))
            .unwrap()
            .to_dense();
        // Hermitian part of iV
        let iv = v.map(|x| x * Complex64::i());
        let herm = (&iv + iv.adjoint()) * Complex64::new(0.5, 0.0);
        for s in 0..basis.dim() {
            assert!(herm[(s, s)].norm() < 1e-14);
        }
    }

    #[test]
    fn triplets_round_trip() {
        let (geo, r) = random_setup(2, 3, 6);
        let basis = BasisIndex::new(geo.n_sites(), 2).unwrap();
        let v = assemble_generator(&basis, &single_excitation_coupling(&r, &PhysicalParams::reciprocal())).unwrap();
        let mut buf = Vec::new();
        v.write_triplets(&mut buf).unwrap();
        let parsed = read_triplets(&buf[..]).unwrap();
        assert_eq!(parsed.len(), v.nnz());
        for (row, col, val) in parsed {
            assert_eq!(val, v.get(row, col));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let basis = BasisIndex::new(5, 2).unwrap();
        let g = DMatrix::<Complex64>::zeros(4, 4);
        assert!(matches!(assemble_generator(&basis, &g), Err(Error::Dimension(_))));
    }
}
