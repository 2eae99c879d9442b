//! Per-height efficiencies of a solved tree, averaging across realizations,
//! critical-height detection and ℓ¹ strategy comparison.
//!
//! For a tree of height `H` and each height `h`, `soln_X(h)` is the sum of the
//! solver `X ∈ {LRS, DPS, GAS}` over the leaves of the tree pruned at `h`.
//! All percentages are exact fractions:
//!
//! * `GbE_X(h) = 100·(soln_X(h) − soln_X(0)) / soln_X(0)`
//! * `SwE_X(h) = 100·(soln_X(h) − soln_X(h−1)) / soln_X(h−1)` for `h ≥ 1`
//! * `GAE(h)   = 100·(GAS(h) − DPS(h)) / DPS(h)`
//! * `LRE(h)   = 100·(DPS(h) − LRS(h)) / DPS(h)`
//!
//! A zero denominator (only possible when the demand is zero) yields 0.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dctree::DCTree;
use crate::error::{Error, Result};
use crate::rational::RationalValue;
use crate::solvers::solve_triple;

/// Every quantity tracked per height.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Lrs,
    Dps,
    Gas,
    GbeLrs,
    GbeDps,
    GbeGas,
    SweLrs,
    SweDps,
    SweGas,
    Gae,
    Lre,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Lrs,
        Metric::Dps,
        Metric::Gas,
        Metric::GbeLrs,
        Metric::GbeDps,
        Metric::GbeGas,
        Metric::SweLrs,
        Metric::SweDps,
        Metric::SweGas,
        Metric::Gae,
        Metric::Lre,
    ];

    /// The eight percentage efficiencies.
    pub const EFFICIENCIES: [Metric; 8] = [
        Metric::GbeLrs,
        Metric::GbeDps,
        Metric::GbeGas,
        Metric::SweLrs,
        Metric::SweDps,
        Metric::SweGas,
        Metric::Gae,
        Metric::Lre,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Lrs => "LRS",
            Metric::Dps => "DPS",
            Metric::Gas => "GAS",
            Metric::GbeLrs => "GbE_LRS",
            Metric::GbeDps => "GbE_DPS",
            Metric::GbeGas => "GbE_GAS",
            Metric::SweLrs => "SwE_LRS",
            Metric::SweDps => "SwE_DPS",
            Metric::SweGas => "SwE_GAS",
            Metric::Gae => "GAE",
            Metric::Lre => "LRE",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn is_efficiency(&self) -> bool {
        !matches!(self, Metric::Lrs | Metric::Dps | Metric::Gas)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {wanted:?}")))
    }
}

/// How slopes of several strategy values are combined into one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Max => "max",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::InvalidParameter(format!(
                "unknown aggregation {other:?}"
            ))),
        }
    }
}

/// Solutions and efficiencies of one height.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightRow {
    pub height: usize,
    pub lrs: RationalValue,
    pub dps: u64,
    pub gas: u64,
    /// GbE for (LRS, DPS, GAS).
    pub gbe: [RationalValue; 3],
    /// SwE for (LRS, DPS, GAS); absent at height 0.
    pub swe: Option<[RationalValue; 3]>,
    pub gae: RationalValue,
    pub lre: RationalValue,
}

impl HeightRow {
    pub fn value(&self, metric: Metric) -> Option<RationalValue> {
        let swe = |i: usize| self.swe.as_ref().map(|s| s[i].clone());
        match metric {
            Metric::Lrs => Some(self.lrs.clone()),
            Metric::Dps => Some(RationalValue::from_u64(self.dps)),
            Metric::Gas => Some(RationalValue::from_u64(self.gas)),
            Metric::GbeLrs => Some(self.gbe[0].clone()),
            Metric::GbeDps => Some(self.gbe[1].clone()),
            Metric::GbeGas => Some(self.gbe[2].clone()),
            Metric::SweLrs => swe(0),
            Metric::SweDps => swe(1),
            Metric::SweGas => swe(2),
            Metric::Gae => Some(self.gae.clone()),
            Metric::Lre => Some(self.lre.clone()),
        }
    }
}

/// Per-height results of one solved tree, heights `0..=H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficiencySeries {
    pub rows: Vec<HeightRow>,
}

impl EfficiencySeries {
    pub fn height(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn value(&self, metric: Metric, h: usize) -> Option<RationalValue> {
        self.rows.get(h).and_then(|row| row.value(metric))
    }
}

/// Field-wise mean of several series of equal height.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AveragedSeries {
    /// `rows[h][metric]`, `None` where a metric is undefined (SwE at h = 0).
    pub rows: Vec<Vec<Option<RationalValue>>>,
    pub count: usize,
}

impl AveragedSeries {
    pub fn height(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn value(&self, metric: Metric, h: usize) -> Option<RationalValue> {
        self.rows.get(h).and_then(|row| row[metric.index()].clone())
    }

    /// The metric at every height, undefined entries read as zero.
    pub fn column(&self, metric: Metric) -> Vec<RationalValue> {
        (0..self.rows.len())
            .map(|h| self.value(metric, h).unwrap_or_default())
            .collect()
    }
}

/// `100·(a − b)/b`, or zero when `b` is zero.
pub fn percent_change(a: &RationalValue, b: &RationalValue) -> RationalValue {
    if b.is_zero() {
        return RationalValue::zero();
    }
    RationalValue::from_u64(100) * (a - b) / b
}

/// Solves every vertex (in parallel), stores the triples in the tree and
/// returns the per-height series.
pub fn solve_tree(tree: &mut DCTree) -> Result<EfficiencySeries> {
    let triples: Vec<_> = (0..tree.len())
        .into_par_iter()
        .map(|v| {
            tree.node_instance(v)
                .and_then(|inst| solve_triple(&inst))
                .map_err(|e| Error::AtVertex {
                    vertex: v,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    for (v, triple) in triples.into_iter().enumerate() {
        tree.set_triple(v, triple);
    }
    efficiency_series(tree)
}

/// Per-height series of a tree whose vertices already carry their triples.
pub fn efficiency_series(tree: &DCTree) -> Result<EfficiencySeries> {
    let mut sums: Vec<(RationalValue, u64, u64)> = Vec::with_capacity(tree.height() + 1);
    for h in 0..=tree.height() {
        let mut lrs = RationalValue::zero();
        let (mut dps, mut gas) = (0u64, 0u64);
        for v in tree.pruned_leaves(h)? {
            let triple = tree
                .node(v)
                .triple
                .as_ref()
                .ok_or_else(|| Error::AtVertex {
                    vertex: v,
                    source: Box::new(Error::InvalidInput("vertex has not been solved".into())),
                })?;
            lrs += &triple.lrs;
            dps += triple.dps;
            gas += triple.gas;
        }
        sums.push((lrs, dps, gas));
    }
    Ok(series_from_sums(&sums))
}

/// Builds the series from per-height `(LRS, DPS, GAS)` sums.
pub fn series_from_sums(sums: &[(RationalValue, u64, u64)]) -> EfficiencySeries {
    let as_values = |(lrs, dps, gas): &(RationalValue, u64, u64)| {
        [
            lrs.clone(),
            RationalValue::from_u64(*dps),
            RationalValue::from_u64(*gas),
        ]
    };
    let base = as_values(&sums[0]);
    let mut previous: Option<[RationalValue; 3]> = None;
    let rows = sums
        .iter()
        .enumerate()
        .map(|(h, sum)| {
            let current = as_values(sum);
            let gbe = std::array::from_fn(|i| percent_change(&current[i], &base[i]));
            let swe = previous
                .as_ref()
                .map(|prev| std::array::from_fn(|i| percent_change(&current[i], &prev[i])));
            let row = HeightRow {
                height: h,
                lrs: sum.0.clone(),
                dps: sum.1,
                gas: sum.2,
                gbe,
                swe,
                gae: percent_change(&current[2], &current[1]),
                lre: percent_gap(&current[1], &current[0]),
            };
            previous = Some(current);
            row
        })
        .collect();
    EfficiencySeries { rows }
}

/// `100·(a − b)/a`, or zero when `a` is zero.
fn percent_gap(a: &RationalValue, b: &RationalValue) -> RationalValue {
    if a.is_zero() {
        return RationalValue::zero();
    }
    RationalValue::from_u64(100) * (a - b) / a
}

/// Arithmetic mean per metric and height, summed in input order.
pub fn average_series(series: &[EfficiencySeries]) -> Result<AveragedSeries> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot average an empty list of series".into()))?;
    let rows = first.rows.len();
    if let Some(bad) = series.iter().find(|s| s.rows.len() != rows) {
        return Err(Error::InvalidInput(format!(
            "series heights differ: {} vs {}",
            first.height(),
            bad.height()
        )));
    }
    let count = RationalValue::from_u64(series.len() as u64);
    let rows = (0..rows)
        .map(|h| {
            Metric::ALL
                .iter()
                .map(|&metric| {
                    let values: Option<Vec<RationalValue>> =
                        series.iter().map(|s| s.value(metric, h)).collect();
                    values.map(|v| v.iter().sum::<RationalValue>() / &count)
                })
                .collect()
        })
        .collect();
    Ok(AveragedSeries {
        rows,
        count: series.len(),
    })
}

/// Critical height of one efficiency over a strategy domain.
///
/// `slope(h)` aggregates `value(h) − value(h−1)` over the domain. The result
/// is the first height `h ≥ 2` whose slope more than doubles the previous
/// one, i.e. where steep deterioration sets in; `H` when that never happens
/// (and when `H < 2`).
pub fn critical_height(
    domain: &[&AveragedSeries],
    metric: Metric,
    aggregation: Aggregation,
) -> Result<usize> {
    let columns: Vec<Vec<RationalValue>> = domain.iter().map(|s| s.column(metric)).collect();
    critical_height_from_columns(&columns, aggregation)
}

/// [`critical_height`] on raw columns, one per strategy value, indexed by height.
pub fn critical_height_from_columns(
    columns: &[Vec<RationalValue>],
    aggregation: Aggregation,
) -> Result<usize> {
    let first = columns
        .first()
        .ok_or_else(|| Error::InvalidInput("critical height needs a non-empty domain".into()))?;
    if first.is_empty() || columns.iter().any(|c| c.len() != first.len()) {
        return Err(Error::InvalidInput(
            "all columns must cover the same non-empty height range".into(),
        ));
    }
    let top = first.len() - 1;
    let slope = |h: usize| {
        let diffs = columns.iter().map(|c| &c[h] - &c[h - 1]);
        match aggregation {
            Aggregation::Mean => {
                diffs.sum::<RationalValue>() / RationalValue::from_u64(columns.len() as u64)
            }
            Aggregation::Max => diffs.max().expect("non-empty domain"),
        }
    };
    let two = RationalValue::from_u64(2);
    let mut previous = match top {
        0 | 1 => return Ok(top),
        _ => slope(1),
    };
    for h in 2..=top {
        let current = slope(h);
        if current > &two * &previous {
            return Ok(h);
        }
        previous = current;
    }
    Ok(top)
}

/// Most frequent height; ties go to the smaller one.
pub fn critical_height_mode(heights: &[usize]) -> Result<usize> {
    let mut sorted = heights.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(usize, usize)> = None;
    for chunk in sorted.chunk_by(|a, b| a == b) {
        if best.is_none_or(|(_, count)| chunk.len() > count) {
            best = Some((chunk[0], chunk.len()));
        }
    }
    best.map(|(h, _)| h)
        .ok_or_else(|| Error::InvalidInput("mode of an empty list".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L1Comparison {
    pub norm_a: RationalValue,
    pub norm_b: RationalValue,
    pub winner: Winner,
}

/// Flattens `metrics × domain × heights 1..=h_tilde` into one list.
pub fn l1_array(
    domain: &[&AveragedSeries],
    metrics: &[Metric],
    h_tilde: usize,
) -> Result<Vec<RationalValue>> {
    let mut out = Vec::with_capacity(metrics.len() * domain.len() * h_tilde);
    for &metric in metrics {
        for series in domain {
            if h_tilde > series.height() {
                return Err(Error::InvalidInput(format!(
                    "series of height {} has no height {h_tilde}",
                    series.height()
                )));
            }
            out.extend((1..=h_tilde).map(|h| series.value(metric, h).unwrap_or_default()));
        }
    }
    Ok(out)
}

/// ℓ¹ norms of two equally shaped arrays; the smaller norm wins.
pub fn l1_compare(a: &[RationalValue], b: &[RationalValue]) -> Result<L1Comparison> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "arrays differ in shape: {} vs {} entries",
            a.len(),
            b.len()
        )));
    }
    let norm = |xs: &[RationalValue]| xs.iter().map(RationalValue::abs).sum::<RationalValue>();
    let (norm_a, norm_b) = (norm(a), norm(b));
    let winner = match norm_a.cmp(&norm_b) {
        std::cmp::Ordering::Less => Winner::A,
        std::cmp::Ordering::Greater => Winner::B,
        std::cmp::Ordering::Equal => Winner::Tie,
    };
    Ok(L1Comparison {
        norm_a,
        norm_b,
        winner,
    })
}

/// Efficiency of the root D&C pair: GbE of the optimal proctor count at h = 1.
pub fn pair_efficiency(series: &EfficiencySeries) -> Option<RationalValue> {
    series.value(Metric::GbeDps, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dctree::{build_tree_headleft, Rounding};
    use crate::model::ProblemInstance;
    use crate::solvers::{SortCriterion, SortKey};

    fn realization_one_series() -> EfficiencySeries {
        let inst =
            ProblemInstance::from_rate(vec![113, 54, 95, 89, 85, 87, 76, 105], 54, 633).unwrap();
        let mut tree = build_tree_headleft(
            &inst,
            SortCriterion::descending(SortKey::SpecificWeight),
            RationalValue::new(1, 2),
            2,
            Rounding::Ceil,
        )
        .unwrap();
        solve_tree(&mut tree).unwrap()
    }

    fn fixed(series: &EfficiencySeries, metric: Metric) -> Vec<String> {
        (0..series.rows.len())
            .filter_map(|h| series.value(metric, h).map(|v| v.to_fixed(2)))
            .collect()
    }

    #[test]
    fn realization_one_table() {
        let s = realization_one_series();
        assert_eq!(fixed(&s, Metric::Lrs), ["14.12", "14.25", "14.36"]);
        assert_eq!(fixed(&s, Metric::Dps), ["15.00", "16.00", "16.00"]);
        assert_eq!(fixed(&s, Metric::Gas), ["16.00", "16.00", "16.00"]);
        assert_eq!(fixed(&s, Metric::GbeLrs), ["0.00", "0.98", "1.71"]);
        assert_eq!(fixed(&s, Metric::GbeDps), ["0.00", "6.67", "6.67"]);
        assert_eq!(fixed(&s, Metric::SweLrs), ["0.98", "0.72"]);
        assert_eq!(fixed(&s, Metric::Gae), ["6.67", "0.00", "0.00"]);
        assert_eq!(fixed(&s, Metric::Lre), ["5.90", "10.91", "10.27"]);
        assert_eq!(pair_efficiency(&s).unwrap().to_fixed(2), "6.67");
    }

    #[test]
    fn telescoping_identity() {
        let s = realization_one_series();
        let hundred = RationalValue::from_u64(100);
        for (gbe, swe) in [
            (Metric::GbeLrs, Metric::SweLrs),
            (Metric::GbeDps, Metric::SweDps),
            (Metric::GbeGas, Metric::SweGas),
        ] {
            let mut product = RationalValue::one();
            for h in 1..s.rows.len() {
                product = product * (RationalValue::one() + s.value(swe, h).unwrap() / &hundred);
                let lhs = RationalValue::one() + s.value(gbe, h).unwrap() / &hundred;
                assert_eq!(lhs, product);
            }
        }
    }

    #[test]
    fn single_vertex_series() {
        let inst =
            ProblemInstance::from_rate(vec![113, 54, 95, 89, 85, 87, 76, 105], 54, 633).unwrap();
        let mut tree = build_tree_headleft(
            &inst,
            SortCriterion::descending(SortKey::SpecificWeight),
            RationalValue::new(1, 2),
            8,
            Rounding::Ceil,
        )
        .unwrap();
        let s = solve_tree(&mut tree).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!(s.rows[0].gbe.iter().all(RationalValue::is_zero));
        assert_eq!(s.rows[0].gae.to_fixed(2), "6.67");
        assert_eq!(s.rows[0].lre.to_fixed(2), "5.90");
    }

    #[test]
    fn zero_denominators_read_as_zero() {
        let s = series_from_sums(&[(RationalValue::zero(), 0, 0), (RationalValue::zero(), 0, 0)]);
        assert!(s.rows.iter().all(|r| r.gae.is_zero() && r.lre.is_zero()));
        assert!(s.rows[1]
            .swe
            .as_ref()
            .unwrap()
            .iter()
            .all(RationalValue::is_zero));
    }

    fn decimal_series(values: &[&str]) -> EfficiencySeries {
        // series whose DPS row is irrelevant; only used through GbE_DPS
        let mut s = series_from_sums(&vec![(RationalValue::zero(), 1, 1); values.len()]);
        for (row, v) in s.rows.iter_mut().zip(values) {
            row.gbe[1] = v.parse().unwrap();
        }
        s
    }

    #[test]
    fn average_examples() {
        let series: Vec<_> = ["6.67", "14.29", "14.29", "7.14", "13.33"]
            .iter()
            .map(|v| decimal_series(&["0", v]))
            .collect();
        let avg = average_series(&series).unwrap();
        assert_eq!(
            avg.value(Metric::GbeDps, 1).unwrap(),
            "11.144".parse().unwrap()
        );
        assert_eq!(avg.count, 5);

        let single = average_series(&series[..1]).unwrap();
        assert_eq!(
            single.value(Metric::GbeDps, 1).unwrap(),
            "6.67".parse().unwrap()
        );
        assert_eq!(single.value(Metric::SweDps, 0), None);

        let short = decimal_series(&["0"]);
        assert!(average_series(&[series[0].clone(), short]).is_err());
        assert!(average_series(&[]).is_err());
    }

    fn columns(rows: &[&[&str]]) -> Vec<Vec<RationalValue>> {
        let width = rows[0].len();
        (0..width)
            .map(|j| rows.iter().map(|r| r[j].parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn critical_height_examples() {
        let linear = columns(&[&["0"], &["1"], &["2"], &["3"], &["4"]]);
        assert_eq!(
            critical_height_from_columns(&linear, Aggregation::Mean).unwrap(),
            4
        );
        let doubling = columns(&[&["0"], &["1"], &["4"], &["5"]]);
        assert_eq!(
            critical_height_from_columns(&doubling, Aggregation::Mean).unwrap(),
            2
        );
        let short = columns(&[&["0"], &["1"]]);
        assert_eq!(
            critical_height_from_columns(&short, Aggregation::Max).unwrap(),
            1
        );
        assert!(critical_height_from_columns(&[], Aggregation::Mean).is_err());
    }

    #[test]
    fn critical_height_shift_invariance() {
        let base = columns(&[&["0", "0"], &["1", "2"], &["1.5", "3"], &["4", "9"]]);
        let shifted: Vec<Vec<RationalValue>> = base
            .iter()
            .map(|c| c.iter().map(|v| v + &RationalValue::from_u64(7)).collect())
            .collect();
        for agg in [Aggregation::Mean, Aggregation::Max] {
            assert_eq!(
                critical_height_from_columns(&base, agg).unwrap(),
                critical_height_from_columns(&shifted, agg).unwrap()
            );
        }
    }

    #[test]
    fn mode_examples() {
        assert_eq!(critical_height_mode(&[5, 5, 4, 5, 3]).unwrap(), 5);
        assert_eq!(critical_height_mode(&[3, 4]).unwrap(), 3);
        assert_eq!(critical_height_mode(&[4]).unwrap(), 4);
        assert!(critical_height_mode(&[]).is_err());
    }

    #[test]
    fn l1_examples() {
        let a = ["26.45".parse().unwrap()];
        let b = ["3.81".parse().unwrap()];
        let cmp = l1_compare(&a, &b).unwrap();
        assert_eq!(cmp.winner, Winner::B);
        assert_eq!(cmp.norm_a.to_fixed(2), "26.45");

        let same = l1_compare(&a, &a).unwrap();
        assert_eq!(same.winner, Winner::Tie);
        let zeros = vec![RationalValue::zero(); 3];
        let cmp = l1_compare(&zeros, &zeros).unwrap();
        assert!(cmp.norm_a.is_zero() && cmp.winner == Winner::Tie);
        assert!(l1_compare(&a, &zeros).is_err());
        let neg = [RationalValue::new(-3, 2)];
        assert_eq!(
            l1_compare(&neg, &a).unwrap().norm_a,
            RationalValue::new(3, 2)
        );
    }

    #[test]
    fn l1_array_shape() {
        let avg = average_series(&[realization_one_series()]).unwrap();
        let flat = l1_array(&[&avg, &avg], &[Metric::GbeDps, Metric::Gae], 2).unwrap();
        assert_eq!(flat.len(), 8);
        assert!(l1_array(&[&avg], &[Metric::GbeDps], 3).is_err());
    }
}
