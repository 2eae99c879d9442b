//! Random realizations and the seeded experiment runner.
//!
//! Every realization `i` of an experiment draws its capacities from a
//! ChaCha8 stream seeded with [`derive_seed`]`(master_seed, i, attempt)`, so
//! results depend only on the parameters and the master seed, never on how
//! many worker threads execute the realizations.

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _, Poisson};
use rayon::prelude::*;

use crate::dctree::{DCTree, Rounding, TreeAlgorithm, TreeParams};
use crate::error::{Error, Result};
use crate::metrics::{average_series, solve_tree, AveragedSeries, EfficiencySeries};
use crate::model::ProblemInstance;
use crate::rational::RationalValue;
use crate::solvers::{SortCriterion, SortKey};

/// Inclusive range of uniformly drawn room sizes.
pub const UNIFORM_RANGE: (u64, u64) = (40, 120);
/// Mean of Poisson room sizes.
pub const POISSON_MEAN: f64 = 65.0;
/// Trials and success probability of binomial room sizes.
pub const BINOMIAL_TRIALS: u64 = 480;
pub const BINOMIAL_PROBABILITY: f64 = 0.2;

/// How many fresh seeds a realization may try before an experiment fails.
pub const MAX_RESAMPLES: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    Uniform,
    Poisson,
    Binomial,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [
        Distribution::Uniform,
        Distribution::Poisson,
        Distribution::Binomial,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Poisson => "poisson",
            Distribution::Binomial => "binomial",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "ud" | "ub" => Ok(Distribution::Uniform),
            "poisson" | "pd" => Ok(Distribution::Poisson),
            "binomial" | "bd" => Ok(Distribution::Binomial),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution {other:?}"
            ))),
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` on its `attempt`-th draw.
pub fn derive_seed(master_seed: u64, index: u64, attempt: u32) -> u64 {
    mix(mix(mix(master_seed) ^ index) ^ u64::from(attempt))
}

/// `n` positive room sizes drawn from `dist`.
pub fn sample_capacities(dist: Distribution, n: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "at least one room is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positive = |rng: &mut ChaCha8Rng, draw: &dyn Fn(&mut ChaCha8Rng) -> u64| loop {
        let value = draw(rng);
        if value >= 1 {
            break value;
        }
    };
    let caps = match dist {
        Distribution::Uniform => (0..n)
            .map(|_| rng.random_range(UNIFORM_RANGE.0..=UNIFORM_RANGE.1))
            .collect(),
        Distribution::Poisson => {
            let poisson = Poisson::new(POISSON_MEAN).expect("valid mean");
            (0..n)
                .map(|_| positive(&mut rng, &|r| poisson.sample(r) as u64))
                .collect()
        }
        Distribution::Binomial => {
            let binomial =
                Binomial::new(BINOMIAL_TRIALS, BINOMIAL_PROBABILITY).expect("valid binomial");
            (0..n)
                .map(|_| positive(&mut rng, &|r| binomial.sample(r)))
                .collect()
        }
    };
    Ok(caps)
}

/// One sampled room list and its demand `D = ⌊o·Σc⌋`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realization {
    pub capacities: Vec<u64>,
    pub demand: u64,
    pub seed: u64,
}

impl Realization {
    pub fn total_capacity(&self) -> u64 {
        self.capacities.iter().sum()
    }
}

/// `⌊o·total⌋` for an exact occupancy fraction.
pub fn demand_for(occupancy: &RationalValue, total: u64) -> u64 {
    (occupancy * &RationalValue::from_u64(total))
        .floor()
        .to_u64()
        .expect("demand fits in u64")
}

pub fn make_realization(
    dist: Distribution,
    n: usize,
    occupancy: &RationalValue,
    seed: u64,
) -> Result<Realization> {
    if *occupancy <= RationalValue::zero() || *occupancy > RationalValue::one() {
        return Err(Error::InvalidParameter(format!(
            "occupancy {} must lie in (0, 1]",
            occupancy.to_fixed(2)
        )));
    }
    let capacities = sample_capacities(dist, n, seed)?;
    let demand = demand_for(occupancy, capacities.iter().sum());
    Ok(Realization {
        capacities,
        demand,
        seed,
    })
}

/// Everything that defines one experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentParams {
    pub n_rooms: usize,
    pub dist: Distribution,
    pub occupancy: RationalValue,
    pub rate: u64,
    pub tree_alg: TreeAlgorithm,
    pub sort: SortKey,
    /// Only present for head-left trees.
    pub head_fraction: Option<RationalValue>,
    pub min_size: usize,
    pub rounding: Rounding,
    pub realizations: usize,
    pub master_seed: u64,
}

impl Default for ExperimentParams {
    /// The standard setting.
    fn default() -> Self {
        Self {
            n_rooms: 512,
            dist: Distribution::Uniform,
            occupancy: RationalValue::new(9, 10),
            rate: 54,
            tree_alg: TreeAlgorithm::HeadLeft,
            sort: SortKey::SpecificWeight,
            head_fraction: Some(RationalValue::new(1, 2)),
            min_size: 4,
            rounding: Rounding::Ceil,
            realizations: 50,
            master_seed: 0,
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_rooms == 0 {
            return bad("n_rooms must be at least 1".into());
        }
        if self.occupancy < RationalValue::new(1, 2) || self.occupancy > RationalValue::new(9, 10) {
            return bad(format!(
                "occupancy {} outside [0.5, 0.9]",
                self.occupancy.to_fixed(2)
            ));
        }
        if self.rate == 0 {
            return bad("rate must be at least 1".into());
        }
        if self.min_size == 0 {
            return bad("min_size must be at least 1".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        match (self.tree_alg, &self.head_fraction) {
            (TreeAlgorithm::Balanced, Some(_)) => {
                bad("head_fraction is not used by balanced trees".into())
            }
            (TreeAlgorithm::HeadLeft, None) => bad("head-left trees need head_fraction".into()),
            (TreeAlgorithm::HeadLeft, Some(f))
                if *f <= RationalValue::zero() || *f >= RationalValue::one() =>
            {
                bad(format!("head_fraction {f} outside (0, 1)"))
            }
            _ => Ok(()),
        }
    }

    /// Tree parameters for a realization drawn with `seed`.
    pub fn tree_params(&self, seed: u64) -> TreeParams {
        let sort = match self.sort {
            SortKey::Random => SortCriterion::random(mix(seed)),
            key => SortCriterion::descending(key),
        };
        TreeParams {
            algorithm: self.tree_alg,
            sort,
            head_fraction: self.head_fraction.clone(),
            min_size: self.min_size,
            rounding: self.rounding,
        }
    }
}

/// Result of one experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentOutcome {
    pub averaged: AveragedSeries,
    /// Per-realization series in realization order.
    pub series: Vec<EfficiencySeries>,
    /// Realizations redrawn because a split was infeasible.
    pub resamples: usize,
}

fn run_realization(params: &ExperimentParams, index: usize) -> Result<(EfficiencySeries, u32)> {
    for attempt in 0..=MAX_RESAMPLES {
        let seed = derive_seed(params.master_seed, index as u64, attempt);
        let realization = make_realization(params.dist, params.n_rooms, &params.occupancy, seed)?;
        let instance =
            ProblemInstance::from_rate(realization.capacities, params.rate, realization.demand)?;
        let mut tree = match DCTree::build(&instance, params.tree_params(seed)) {
            Ok(tree) => tree,
            Err(e) if e.is_infeasibility() => continue,
            Err(e) => return Err(e),
        };
        return Ok((solve_tree(&mut tree)?, attempt));
    }
    Err(Error::InvalidInput(format!(
        "realization {index} produced infeasible splits on {} consecutive draws",
        MAX_RESAMPLES + 1
    )))
}

/// Runs all realizations (in parallel) and averages them in index order.
pub fn run_experiment(params: &ExperimentParams) -> Result<ExperimentOutcome> {
    params.validate()?;
    let results: Vec<(EfficiencySeries, u32)> = (0..params.realizations)
        .into_par_iter()
        .map(|i| run_realization(params, i))
        .collect::<Result<_>>()?;
    let resamples = results.iter().map(|(_, a)| *a as usize).sum();
    let series: Vec<EfficiencySeries> = results.into_iter().map(|(s, _)| s).collect();
    Ok(ExperimentOutcome {
        averaged: average_series(&series)?,
        series,
        resamples,
    })
}

/// The parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    Occupancy,
    Rate,
    Sort,
    Fraction,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Occupancy => "o",
            SweepVariable::Rate => "r",
            SweepVariable::Sort => "s",
            SweepVariable::Fraction => "f",
        }
    }

    /// The domain explored by default.
    pub fn default_domain(&self) -> Vec<SweepPoint> {
        let steps = |from: i64, to: i64| {
            (from..=to)
                .step_by(5)
                .map(|k| RationalValue::new(k, 100))
                .collect::<Vec<_>>()
        };
        match self {
            SweepVariable::Occupancy => steps(50, 90)
                .into_iter()
                .map(SweepPoint::Occupancy)
                .collect(),
            SweepVariable::Rate => [34, 44, 54, 64, 74]
                .into_iter()
                .map(SweepPoint::Rate)
                .collect(),
            SweepVariable::Sort => SortKey::ALL.into_iter().map(SweepPoint::Sort).collect(),
            SweepVariable::Fraction => steps(35, 65)
                .into_iter()
                .map(SweepPoint::Fraction)
                .collect(),
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o" | "occupancy" => Ok(SweepVariable::Occupancy),
            "r" | "rate" => Ok(SweepVariable::Rate),
            "s" | "sort" => Ok(SweepVariable::Sort),
            "f" | "fraction" | "head_fraction" => Ok(SweepVariable::Fraction),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep variable {other:?}"
            ))),
        }
    }
}

/// One value of a swept parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SweepPoint {
    Occupancy(RationalValue),
    Rate(u64),
    Sort(SortKey),
    Fraction(RationalValue),
}

impl SweepPoint {
    pub fn variable(&self) -> SweepVariable {
        match self {
            SweepPoint::Occupancy(_) => SweepVariable::Occupancy,
            SweepPoint::Rate(_) => SweepVariable::Rate,
            SweepPoint::Sort(_) => SweepVariable::Sort,
            SweepPoint::Fraction(_) => SweepVariable::Fraction,
        }
    }

    /// Parses a value of `variable`.
    pub fn parse(variable: SweepVariable, text: &str) -> Result<Self> {
        Ok(match variable {
            SweepVariable::Occupancy => SweepPoint::Occupancy(text.parse()?),
            SweepVariable::Rate => SweepPoint::Rate(text.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("rate {text:?} is not an integer"))
            })?),
            SweepVariable::Sort => SweepPoint::Sort(text.parse()?),
            SweepVariable::Fraction => SweepPoint::Fraction(text.parse()?),
        })
    }

    pub fn apply(&self, params: &ExperimentParams) -> ExperimentParams {
        let mut out = params.clone();
        match self {
            SweepPoint::Occupancy(o) => out.occupancy = o.clone(),
            SweepPoint::Rate(r) => out.rate = *r,
            SweepPoint::Sort(s) => out.sort = *s,
            SweepPoint::Fraction(f) => out.head_fraction = Some(f.clone()),
        }
        out
    }
}

impl fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepPoint::Occupancy(v) | SweepPoint::Fraction(v) => f.write_str(&v.to_fixed(2)),
            SweepPoint::Rate(r) => write!(f, "{r}"),
            SweepPoint::Sort(s) => write!(f, "{s}"),
        }
    }
}

/// One experiment per domain value; all share the master seed, so
/// realization `i` draws the same capacities at every point.
pub fn sweep(
    params: &ExperimentParams,
    domain: &[SweepPoint],
) -> Result<Vec<(SweepPoint, ExperimentOutcome)>> {
    if domain.is_empty() {
        return Err(Error::InvalidParameter("sweep domain is empty".into()));
    }
    if params.tree_alg == TreeAlgorithm::Balanced
        && domain
            .iter()
            .any(|p| p.variable() == SweepVariable::Fraction)
    {
        return Err(Error::InvalidParameter(
            "balanced trees have no head fraction to sweep".into(),
        ));
    }
    domain
        .iter()
        .map(|point| Ok((point.clone(), run_experiment(&point.apply(params))?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Metric;

    fn small(tree_alg: TreeAlgorithm) -> ExperimentParams {
        ExperimentParams {
            n_rooms: 32,
            tree_alg,
            head_fraction: (tree_alg == TreeAlgorithm::HeadLeft).then(|| RationalValue::new(1, 2)),
            realizations: 4,
            master_seed: 7,
            ..ExperimentParams::default()
        }
    }

    #[test]
    fn uniform_support() {
        let caps = sample_capacities(Distribution::Uniform, 5000, 1).unwrap();
        assert!(caps.iter().all(|&c| (40..=120).contains(&c)));
        assert!(caps.contains(&40) && caps.contains(&120));
    }

    #[test]
    fn distribution_means() {
        let mean = |d| {
            let caps = sample_capacities(d, 100_000, 3).unwrap();
            caps.iter().sum::<u64>() as f64 / caps.len() as f64
        };
        assert!((mean(Distribution::Poisson) - 65.0).abs() < 1.0);
        assert!((mean(Distribution::Binomial) - 96.0).abs() < 1.5);
        assert!((mean(Distribution::Uniform) - 80.0).abs() < 1.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        for d in Distribution::ALL {
            assert_eq!(
                sample_capacities(d, 64, 11).unwrap(),
                sample_capacities(d, 64, 11).unwrap()
            );
        }
        assert!(sample_capacities(Distribution::Uniform, 0, 1).is_err());
    }

    #[test]
    fn demand_examples() {
        let o = RationalValue::new(9, 10);
        assert_eq!(demand_for(&o, 704), 633);
        assert_eq!(demand_for(&o, 558), 502);
        assert_eq!(demand_for(&RationalValue::one(), 558), 558);
        assert!(make_realization(Distribution::Uniform, 4, &RationalValue::zero(), 1).is_err());
        assert!(
            make_realization(Distribution::Uniform, 4, &RationalValue::new(11, 10), 1).is_err()
        );
        let r = make_realization(Distribution::Poisson, 16, &o, 5).unwrap();
        assert_eq!(r.demand, demand_for(&o, r.total_capacity()));
    }

    #[test]
    fn seeds_differ_per_index_and_attempt() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(2, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0));
    }

    #[test]
    fn validation() {
        assert!(ExperimentParams::default().validate().is_ok());
        let p = ExperimentParams {
            occupancy: RationalValue::new(95, 100),
            ..ExperimentParams::default()
        };
        assert!(p.validate().is_err());
        let mut p = ExperimentParams {
            tree_alg: TreeAlgorithm::Balanced,
            ..ExperimentParams::default()
        };
        assert!(p.validate().is_err());
        p.head_fraction = None;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn experiment_is_deterministic_across_pools() {
        let params = small(TreeAlgorithm::HeadLeft);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_experiment(&params)).unwrap();
        let b = four.install(|| run_experiment(&params)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.series.len(), 4);
    }

    #[test]
    fn single_realization_average_is_identity() {
        let params = ExperimentParams {
            realizations: 1,
            ..small(TreeAlgorithm::Balanced)
        };
        let out = run_experiment(&params).unwrap();
        for h in 0..=out.averaged.height() {
            for m in Metric::ALL {
                assert_eq!(out.averaged.value(m, h), out.series[0].value(m, h));
            }
        }
    }

    #[test]
    fn sweeps() {
        let params = small(TreeAlgorithm::HeadLeft);
        let domain = SweepVariable::Rate.default_domain();
        let result = sweep(&params, &domain).unwrap();
        assert_eq!(result.len(), 5);
        let single = sweep(&params, &domain[..1]).unwrap();
        assert_eq!(single[0].1, result[0].1);

        let balanced = small(TreeAlgorithm::Balanced);
        let fractions = SweepVariable::Fraction.default_domain();
        assert!(sweep(&balanced, &fractions).is_err());
        assert_eq!(fractions.len(), 7);
        assert_eq!(SweepVariable::Occupancy.default_domain().len(), 9);
        assert_eq!(fractions[0].to_string(), "0.35");
    }

    #[test]
    fn random_sort_experiment_runs() {
        let params = ExperimentParams {
            sort: SortKey::Random,
            ..small(TreeAlgorithm::HeadLeft)
        };
        assert_eq!(
            run_experiment(&params).unwrap(),
            run_experiment(&params).unwrap()
        );
    }
}
