//! Disorder ensembles: seeded realizations evaluated in parallel and reduced
//! in realization-index order, so the result does not depend on scheduling
//! or on the number of workers.

mod record;
mod result;
mod stats;

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisIndex;
use crate::coupling::{single_excitation_coupling, CouplingMatrix, HopPattern, PhysicalParams};
use crate::disorder::{realization_seed, splitmix64, DisorderRealization, DisorderScope};
use crate::dynamics::{evolve, prepare_initial_state, AmplitudeState, InitialStateSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::observables::{distance_bins, CumulantMode, EntropyMode, InterfaceCut};

use record::Layout;
pub use record::SummaryLayout;
pub use result::{EnsembleResult, RealizationRecord, Series};
pub use stats::{bootstrap_standard_error, RunningStats};

/// Realizations evaluated between two reduction steps.
const WAVE: usize = 64;

/// Which observables are measured beyond populations and the norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSelection {
    /// `G⁽²⁾` matrices and clean-zone means.
    pub correlations: bool,
    /// `G⁽³⁾` clean-zone means and their distance profile; needs `M ≥ 3`.
    pub third_order: bool,
    /// Interface entanglement entropy `S_A`.
    pub entropy: bool,
    pub cumulant_mode: CumulantMode,
    pub entropy_mode: EntropyMode,
}

impl Default for ObservableSelection {
    fn default() -> Self {
        Self {
            correlations: true,
            third_order: false,
            entropy: true,
            cumulant_mode: CumulantMode::default(),
            entropy_mode: EntropyMode::default(),
        }
    }
}

impl ObservableSelection {
    pub fn populations_only() -> Self {
        Self {
            correlations: false,
            third_order: false,
            entropy: false,
            ..Self::default()
        }
    }
}

/// Physical and numerical parameters of one experiment. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_clean: usize,
    pub n_disordered: usize,
    pub xi_clean: f64,
    pub xi_disordered: f64,
    pub directionality: f64,
    pub beta: f64,
    pub w_bar: f64,
    pub disorder_scope: DisorderScope,
    pub n_excitations: usize,
    pub initial_state: InitialStateSpec,
    pub grid: TimeGrid,
    pub tolerance: f64,
    pub observables: ObservableSelection,
}

impl Default for SystemConfig {
    /// Twenty clean and twenty disordered sites at quarter-wavelength
    /// spacing, two excitations in the half-Dicke state, `w̄ = 0.8π`.
    fn default() -> Self {
        Self {
            n_clean: 20,
            n_disordered: 20,
            xi_clean: PI / 4.0,
            xi_disordered: PI / 4.0,
            directionality: 0.0,
            beta: 1.0,
            w_bar: 0.8 * PI,
            disorder_scope: DisorderScope::DisorderedZone,
            n_excitations: 2,
            initial_state: InitialStateSpec::HalfDickeDisordered,
            grid: TimeGrid::standard(200.0).expect("valid grid"),
            tolerance: 1e-8,
            observables: ObservableSelection::default(),
        }
    }
}

impl SystemConfig {
    pub fn geometry(&self) -> Result<LatticeGeometry> {
        LatticeGeometry::new(self.n_clean, self.n_disordered, self.xi_clean, self.xi_disordered)
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.directionality, self.beta)
    }

    /// Checks every parameter without running anything.
    pub fn validate(&self) -> Result<()> {
        Context::new(self).map(|_| ())
    }
}

/// Ensemble size, seeding and execution settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Reference count for convergence checks.
    pub convergence_reference: Option<usize>,
    /// Retain per-realization summary series.
    pub keep_realizations: bool,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Share the master seed across sweep points, so equal `N_d` implies
    /// equal disordered-zone draws.
    pub couple_sweeps: bool,
    /// Progress lines on standard error.
    pub progress: bool,
    /// Per-realization population CSVs are written here when set.
    pub dump_dir: Option<PathBuf>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_realizations: 2000,
            master_seed: 0,
            convergence_reference: Some(3000),
            keep_realizations: false,
            workers: None,
            couple_sweeps: true,
            progress: false,
            dump_dir: None,
        }
    }
}

struct Context {
    geometry: LatticeGeometry,
    params: PhysicalParams,
    pattern: Arc<HopPattern>,
    cut: Option<InterfaceCut>,
    initial: AmplitudeState,
    layout: Layout,
}

impl Context {
    fn new(system: &SystemConfig) -> Result<Self> {
        let geometry = system.geometry()?;
        let params = system.params()?;
        if !(0.0..=PI).contains(&system.w_bar) {
            return Err(Error::config("w_bar", format!("must lie in [0, π], got {}", system.w_bar)));
        }
        if !(system.tolerance > 0.0 && system.tolerance < 1.0) {
            return Err(Error::config("tolerance", "must lie in (0, 1)"));
        }
        let obs = &system.observables;
        if obs.third_order && system.n_excitations < 3 {
            return Err(Error::Capability(format!(
                "third-order correlations need at least 3 excitations, got {}",
                system.n_excitations
            )));
        }
        let basis = Arc::new(BasisIndex::new(geometry.n_sites(), system.n_excitations)?);
        let initial = prepare_initial_state(&basis, &geometry, &system.initial_state)?;
        let pattern = Arc::new(HopPattern::new(&basis));
        let cut = obs
            .entropy
            .then(|| InterfaceCut::new(basis.clone(), &geometry))
            .transpose()?;
        let layout = Layout::new(&geometry, obs);
        Ok(Self {
            geometry,
            params,
            pattern,
            cut,
            initial,
            layout,
        })
    }

    fn realization(&self, system: &SystemConfig, seed: u64) -> Result<Vec<f64>> {
        let disorder = DisorderRealization::sample_in(&self.geometry, system.w_bar, seed, system.disorder_scope)?;
        let g = single_excitation_coupling(&disorder, &self.params);
        let v = CouplingMatrix::assemble(self.pattern.clone(), &g)?;
        let states = evolve(&self.initial, &v, &system.grid, system.tolerance)?;
        let w = self.layout.width;
        let mut out = vec![0.0; w * states.len()];
        for (state, slot) in states.iter().zip(out.chunks_exact_mut(w)) {
            self.layout
                .measure(state, &self.geometry, self.cut.as_ref(), &system.observables, slot)?;
        }
        Ok(out)
    }

    fn summary(&self, record: &[f64], times: usize) -> Vec<f64> {
        let (w, s) = (self.layout.width, self.layout.summary.width());
        (0..times).flat_map(|t| record[t * w..t * w + s].iter().copied()).collect()
    }
}

fn dump(dir: &PathBuf, index: u64, seed: u64, grid: &TimeGrid, record: &[f64], layout: &Layout) -> Result<()> {
    let io = |e: std::io::Error| Error::config("dump_dir", e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    let mut f = BufWriter::new(fs::File::create(dir.join(format!("realization_{index:06}.csv"))).map_err(io)?);
    let n = layout.summary.n_sites;
    writeln!(f, "# seed={seed}").map_err(io)?;
    let header: Vec<String> = (0..n).map(|i| format!("site_{i}")).collect();
    writeln!(f, "time_gamma,norm,{}", header.join(",")).map_err(io)?;
    for (t, &time) in grid.times().iter().enumerate() {
        let row = &record[t * layout.width..];
        write!(f, "{time:.17e},{:.17e}", row[SummaryLayout::NORM]).map_err(io)?;
        for p in &row[SummaryLayout::SITES..SummaryLayout::SITES + n] {
            write!(f, ",{p:.17e}").map_err(io)?;
        }
        writeln!(f).map_err(io)?;
    }
    Ok(())
}

/// Runs every realization, averaging all selected observables.
pub fn run_ensemble(system: &SystemConfig, ensemble: &EnsembleConfig) -> Result<EnsembleResult> {
    let start = Instant::now();
    let ctx = Context::new(system)?;
    let n = ensemble.n_realizations;
    if n == 0 {
        return Err(Error::config("n_realizations", "must be at least 1"));
    }
    let workers = match ensemble.workers {
        Some(0) => return Err(Error::config("workers", "must be at least 1")),
        Some(k) => k,
        None => std::thread::available_parallelism().map_or(1, |k| k.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;

    let times = system.grid.len();
    let mut stats = RunningStats::new(ctx.layout.width * times);
    let mut kept = Vec::new();
    let run_one = |index: u64| -> Result<Vec<f64>> {
        let seed = realization_seed(ensemble.master_seed, index);
        let rec = ctx.realization(system, seed).map_err(|e| Error::Realization {
            index,
            seed,
            source: Box::new(e),
        })?;
        if let Some(dir) = &ensemble.dump_dir {
            dump(dir, index, seed, &system.grid, &rec, &ctx.layout)?;
        }
        Ok(rec)
    };
    let mut keep = |index: u64, rec: &[f64]| {
        if ensemble.keep_realizations {
            kept.push(RealizationRecord {
                index,
                seed: realization_seed(ensemble.master_seed, index),
                layout: ctx.layout.summary,
                values: ctx.summary(rec, times),
            });
        }
    };

    if system.w_bar == 0.0 {
        // every realization is the same clean system
        let rec = run_one(0)?;
        for index in 0..n as u64 {
            stats.push(&rec);
            keep(index, &rec);
            if index > 0 {
                if let Some(dir) = &ensemble.dump_dir {
                    dump(dir, index, realization_seed(ensemble.master_seed, index), &system.grid, &rec, &ctx.layout)?;
                }
            }
        }
    } else {
        let mut done = 0;
        while done < n {
            let end = (done + WAVE.max(4 * workers)).min(n);
            let records: Vec<Result<Vec<f64>>> =
                pool.install(|| (done as u64..end as u64).into_par_iter().map(run_one).collect());
            for (k, rec) in records.into_iter().enumerate() {
                let rec = rec?;
                stats.push(&rec);
                keep((done + k) as u64, &rec);
            }
            done = end;
            if ensemble.progress {
                eprintln!("realizations {done}/{n}");
            }
        }
    }

    let geometry = &ctx.geometry;
    let labels = |i: usize| geometry.label(i);
    Ok(result::Finalize {
        system,
        ensemble,
        layout: &ctx.layout,
        site_labels: geometry.labels().collect(),
        pair_labels: ctx.layout.pairs.iter().map(|&(i, j)| (labels(i), labels(j))).collect(),
        distance_bins: if ctx.layout.third_order { distance_bins(geometry) } else { Vec::new() },
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
    .build(&stats, kept))
}

/// `Σ_i |p_i^a(t) - p_i^b(t)|` over the averaged site populations.
pub fn diff_metric(a: &EnsembleResult, b: &EnsembleResult, time: f64) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::config("time", "results were sampled on different grids"));
    }
    if a.site_labels != b.site_labels {
        return Err(Error::config("geometry", "results have different geometries"));
    }
    let t = a
        .time_index(time)
        .ok_or_else(|| Error::config("time", format!("{time} is not a grid point")))?;
    Ok(a.site_populations
        .mean_at(t)
        .iter()
        .zip(b.site_populations.mean_at(t))
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NClean,
    /// Radians.
    WBar,
    Directionality,
    Beta,
    NRealizations,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NClean => "n_clean",
            Self::WBar => "w_bar",
            Self::Directionality => "directionality",
            Self::Beta => "beta",
            Self::NRealizations => "n_realizations",
        }
    }

    /// Applies `value` to copies of the configs, validating it.
    pub fn apply(&self, value: f64, system: &mut SystemConfig, ensemble: &mut EnsembleConfig) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::config(self.name(), format!("{v} is not a positive integer")))
            }
        };
        match self {
            Self::NClean => system.n_clean = count(value)?,
            Self::NRealizations => ensemble.n_realizations = count(value)?,
            Self::WBar => system.w_bar = value,
            Self::Directionality => system.directionality = value,
            Self::Beta => system.beta = value,
        }
        system.validate()
    }
}

/// One ensemble per value of `axis`.
pub fn sweep(
    system: &SystemConfig,
    axis: SweepAxis,
    values: &[f64],
    ensemble: &EnsembleConfig,
) -> Result<Vec<EnsembleResult>> {
    if values.is_empty() {
        return Err(Error::config(axis.name(), "no sweep values given"));
    }
    let points = values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let (mut s, mut e) = (system.clone(), ensemble.clone());
            axis.apply(v, &mut s, &mut e)?;
            if !ensemble.couple_sweeps {
                e.master_seed = splitmix64(ensemble.master_seed ^ splitmix64(!(k as u64)));
            }
            Ok((s, e))
        })
        .collect::<Result<Vec<_>>>()?;
    points.iter().map(|(s, e)| run_ensemble(s, e)).collect()
}

/// How the realization sets of a convergence ladder relate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderSets {
    /// Every count gets its own master seed derived from `(master, count)`.
    Independent,
    /// Every count is a prefix of the reference ensemble, which is what an
    /// `n_realizations` sweep with a shared master seed produces.
    #[default]
    Nested,
}

/// Relative Diff bound of the convergence protocol.
pub const CONVERGENCE_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub count: usize,
    pub diff: f64,
    /// Diff divided by the reference total population.
    pub relative: f64,
    pub total_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub time: f64,
    pub reference_count: usize,
    pub reference_total: f64,
    pub sets: LadderSets,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// The row judged against the threshold: the largest ladder count.
    pub fn criterion_row(&self) -> Option<&ConvergenceRow> {
        self.rows.iter().max_by_key(|r| r.count)
    }

    pub fn passes(&self) -> bool {
        self.criterion_row().is_some_and(|r| r.relative <= CONVERGENCE_THRESHOLD)
    }

    /// Count of adjacent ladder steps where Diff grew.
    pub fn inversions(&self) -> usize {
        self.rows.windows(2).filter(|w| w[1].diff > w[0].diff).count()
    }
}

fn ladder_seed(master: u64, count: usize) -> u64 {
    splitmix64(master ^ splitmix64(count as u64).rotate_left(17))
}

/// Diff of each ladder count against the reference count at the final grid
/// time. Only populations are measured.
pub fn convergence(
    system: &SystemConfig,
    ensemble: &EnsembleConfig,
    ladder: &[usize],
    sets: LadderSets,
) -> Result<ConvergenceReport> {
    let reference = ensemble.convergence_reference.unwrap_or(3000);
    if ladder.is_empty() || ladder.iter().chain([&reference]).any(|&c| c == 0) {
        return Err(Error::config("ladder", "counts must be positive and non-empty"));
    }
    if sets == LadderSets::Nested && ladder.iter().any(|&c| c > reference) {
        return Err(Error::config("ladder", "nested counts cannot exceed the reference"));
    }
    let mut system = system.clone();
    system.observables = ObservableSelection::populations_only();
    let time = system.grid.t_max();

    let run = |count: usize, keep: bool| {
        let mut e = ensemble.clone();
        e.n_realizations = count;
        e.keep_realizations = keep;
        if sets == LadderSets::Independent {
            e.master_seed = ladder_seed(ensemble.master_seed, count);
        }
        run_ensemble(&system, &e)
    };
    let reference_run = run(reference, sets == LadderSets::Nested)?;
    let t = reference_run.grid.len() - 1;
    let ref_pop = reference_run.site_populations.mean_at(t).to_vec();
    let reference_total = reference_run.total_population.value(t, 0);

    let mut rows = Vec::with_capacity(ladder.len());
    for &count in ladder {
        let pop: Vec<f64> = match sets {
            LadderSets::Independent => run(count, false)?.site_populations.mean_at(t).to_vec(),
            LadderSets::Nested => {
                let mut acc = RunningStats::new(ref_pop.len());
                for r in &reference_run.realizations[..count] {
                    acc.push(r.site_populations(t));
                }
                acc.mean().to_vec()
            }
        };
        let diff: f64 = pop.iter().zip(&ref_pop).map(|(a, b)| (a - b).abs()).sum();
        rows.push(ConvergenceRow {
            count,
            diff,
            relative: diff / reference_total,
            total_population: pop.iter().sum(),
        });
    }
    Ok(ConvergenceReport {
        time,
        reference_count: reference,
        reference_total,
        sets,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(w_bar: f64) -> SystemConfig {
        SystemConfig {
            n_clean: 3,
            n_disordered: 4,
            w_bar,
            grid: TimeGrid::linear(5.0, 6).unwrap(),
            ..SystemConfig::default()
        }
    }

    fn ens(n: usize, workers: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_realizations: n,
            master_seed: 17,
            workers: Some(workers),
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn total_population_starts_at_m() {
        let r = run_ensemble(&small(2.0), &ens(5, 1)).unwrap();
        assert!((r.total_population.value(0, 0) - 2.0).abs() < 1e-12);
        assert_eq!(r.total_population.stderr_at(0)[0], 0.0);
        assert!(r.interface_entropy.as_ref().unwrap().value(0, 0).abs() < 1e-12);
        assert_eq!(r.n_realizations, 5);
        assert_eq!(r.g2.as_ref().unwrap().width, 49);
    }

    #[test]
    fn clean_ensemble_equals_single_realization() {
        let one = run_ensemble(&small(0.0), &ens(1, 1)).unwrap();
        let many = run_ensemble(&small(0.0), &ens(37, 2)).unwrap();
        assert_eq!(one.site_populations.mean, many.site_populations.mean);
        assert_eq!(one.g2, many.g2);
        assert!(many.site_populations.stderr.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = run_ensemble(&small(2.5), &ens(70, 1)).unwrap();
        let b = run_ensemble(&small(2.5), &ens(70, 3)).unwrap();
        assert_eq!(a.site_populations, b.site_populations);
        assert_eq!(a.g2, b.g2);
        assert_eq!(a.interface_entropy, b.interface_entropy);
    }

    #[test]
    fn kept_realizations_reproduce_the_mean() {
        let mut e = ens(12, 2);
        e.keep_realizations = true;
        let r = run_ensemble(&small(2.0), &e).unwrap();
        assert_eq!(r.realizations.len(), 12);
        for t in 0..r.grid.len() {
            let direct: f64 = r.realizations.iter().map(|k| k.total(t)).sum::<f64>() / 12.0;
            assert!((direct - r.total_population.value(t, 0)).abs() < 1e-14);
        }
        assert_eq!(r.realizations[3].seed, realization_seed(17, 3));
    }

    #[test]
    fn third_order_needs_three_excitations() {
        let mut s = small(1.0);
        s.observables.third_order = true;
        assert!(matches!(run_ensemble(&s, &ens(2, 1)), Err(Error::Capability(_))));
        s.n_excitations = 3;
        s.initial_state = InitialStateSpec::DickeDisordered;
        let r = run_ensemble(&s, &ens(3, 1)).unwrap();
        assert_eq!(r.pair_labels.len(), 6);
        assert_eq!(r.distance_bins, vec![1.5, 2.0, 2.5, 3.0, 3.5]);
        // no clean population at t = 0, so every clean mean of G3 vanishes
        assert!(r.g3_clean_mean.unwrap().mean_at(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn averaged_moments_agree_for_a_single_realization() {
        let mut s = small(1.0);
        s.n_excitations = 3;
        s.initial_state = InitialStateSpec::DickeDisordered;
        s.observables.third_order = true;
        let per = run_ensemble(&s, &ens(1, 1)).unwrap();
        s.observables.cumulant_mode = CumulantMode::AveragedMoments;
        let avg = run_ensemble(&s, &ens(1, 1)).unwrap();
        let close = |a: &Series, b: &Series| a.mean.iter().zip(&b.mean).all(|(x, y)| (x - y).abs() < 1e-13);
        assert!(close(per.g2.as_ref().unwrap(), avg.g2.as_ref().unwrap()));
        assert!(close(per.g2_clean_mean.as_ref().unwrap(), avg.g2_clean_mean.as_ref().unwrap()));
        assert!(close(per.g3_clean_mean.as_ref().unwrap(), avg.g3_clean_mean.as_ref().unwrap()));
        assert!(close(per.g3_by_mean_distance.as_ref().unwrap(), avg.g3_by_mean_distance.as_ref().unwrap()));
        assert!(avg.g2.unwrap().stderr.iter().all(|e| e.is_nan()));
    }

    #[test]
    fn diff_metric_cases() {
        let a = run_ensemble(&small(2.0), &ens(4, 1)).unwrap();
        assert_eq!(diff_metric(&a, &a, 5.0).unwrap(), 0.0);
        let mut b = a.clone();
        let t = b.time_index(5.0).unwrap();
        let w = b.site_populations.width;
        for v in &mut b.site_populations.mean[t * w..(t + 1) * w] {
            *v += 1e-3;
        }
        assert!((diff_metric(&a, &b, 5.0).unwrap() - 7e-3).abs() < 1e-15);
        assert!(diff_metric(&a, &b, 4.5).is_err());
        let mut c = a.clone();
        c.grid = TimeGrid::linear(5.0, 7).unwrap();
        assert!(diff_metric(&a, &c, 5.0).is_err());
    }

    #[test]
    fn sweep_couples_disorder_draws() {
        let mut e = ens(3, 1);
        e.keep_realizations = true;
        let out = sweep(&small(2.0), SweepAxis::NClean, &[2.0, 3.0], &e).unwrap();
        assert_eq!(out[0].n_clean, 2);
        assert_eq!(out[1].site_labels.len(), 7);
        assert_eq!(out[0].realizations[1].seed, out[1].realizations[1].seed);
        e.couple_sweeps = false;
        let out = sweep(&small(2.0), SweepAxis::NClean, &[2.0, 3.0], &e).unwrap();
        assert_ne!(out[0].realizations[1].seed, out[1].realizations[1].seed);
        assert!(sweep(&small(2.0), SweepAxis::NClean, &[2.5], &e).is_err());
        assert!(sweep(&small(2.0), SweepAxis::Beta, &[0.0], &e).is_err());
        assert!(sweep(&small(2.0), SweepAxis::WBar, &[4.0], &e).is_err());
    }

    #[test]
    fn convergence_trivial_ladders() {
        let mut e = ens(0, 1);
        e.convergence_reference = Some(5);
        let r = convergence(&small(2.0), &e, &[5], LadderSets::Independent).unwrap();
        assert_eq!(r.rows[0].diff, 0.0);
        let r = convergence(&small(2.0), &e, &[2, 5], LadderSets::Nested).unwrap();
        assert_eq!(r.rows[1].diff, 0.0);
        assert!(r.rows[0].diff > 0.0);
        let r = convergence(&small(0.0), &e, &[1, 3, 5], LadderSets::Independent).unwrap();
        assert!(r.rows.iter().all(|row| row.diff == 0.0));
        assert!(r.passes());
    }

    #[test]
    fn failing_realization_reports_its_seed() {
        // a sector larger than the Krylov space, so the step control is live
        let mut s = small(2.0);
        s.n_disordered = 7;
        s.tolerance = f64::MIN_POSITIVE;
        match run_ensemble(&s, &ens(3, 1)) {
            Err(Error::Realization { index, seed, .. }) => {
                assert_eq!(index, 0);
                assert_eq!(seed, realization_seed(17, 0));
            }
            other => panic!("expected a realization failure, got {other:?}"),
        }
    }

    #[test]
    fn dump_dir_gets_one_file_per_realization() {
        let dir = std::env::temp_dir().join(format!("wqed-dump-{}", std::process::id()));
        let mut e = ens(3, 1);
        e.dump_dir = Some(dir.clone());
        run_ensemble(&small(1.0), &e).unwrap();
        let text = fs::read_to_string(dir.join("realization_000002.csv")).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("time_gamma,norm,site_0"));
        assert_eq!(text.lines().count(), 2 + 6);
        fs::remove_dir_all(dir).unwrap();
    }
}
