//! Greedy upper bound, exact dynamic programming and the closed-form LP
//! relaxation of a covering instance, plus an exhaustive oracle.
//!
//! All solvers break ties the same way: rooms with equal keys are taken in
//! ascending position, and among co-optimal exact solutions the selection
//! that is lexicographically smallest in position order wins.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{to_standard_knapsack, ProblemInstance, RoomId, Selection};
use crate::rational::RationalValue;

/// Largest instance the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Largest dynamic-programming table (cells) we are willing to allocate.
const DP_CELL_LIMIT: usize = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerSolution {
    pub selection: Selection,
    pub value: u64,
}

/// Optimum of the linear relaxation `0 ≤ ξᵢ ≤ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpRelaxation {
    pub value: RationalValue,
    /// Position of the single fractional room, if the fill is not exact.
    pub fractional: Option<usize>,
    /// ξᵢ per room position.
    pub levels: Vec<RationalValue>,
}

impl LpRelaxation {
    /// Positions with ξᵢ > 0.
    pub fn support(&self) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(i, level)| (!level.is_zero()).then_some(i))
            .collect()
    }

    pub fn fractional_room(&self, instance: &ProblemInstance) -> Option<RoomId> {
        self.fractional.map(|i| instance.room_ids()[i])
    }
}

/// LRS ≤ DPS ≤ GAS for one (sub)problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionTriple {
    pub lrs: RationalValue,
    pub dps: u64,
    pub gas: u64,
    pub greedy_selection: Selection,
    pub exact_selection: Selection,
    pub lp_fractional: Option<RoomId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SortKey {
    Proctors,
    Capacity,
    SpecificWeight,
    Random,
}

impl SortKey {
    pub const ALL: [SortKey; 4] = [
        SortKey::Proctors,
        SortKey::Capacity,
        SortKey::SpecificWeight,
        SortKey::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SortKey::Proctors => "p",
            SortKey::Capacity => "c",
            SortKey::SpecificWeight => "gamma",
            SortKey::Random => "random",
        }
    }
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" | "proctors" => Ok(SortKey::Proctors),
            "c" | "capacity" => Ok(SortKey::Capacity),
            "gamma" | "γ" | "g" | "specific_weight" => Ok(SortKey::SpecificWeight),
            "random" | "rand" => Ok(SortKey::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown sort criterion {other:?}"
            ))),
        }
    }
}

/// How the room list is ordered before a tree is grown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SortCriterion {
    pub key: SortKey,
    pub descending: bool,
    /// Only used by [`SortKey::Random`].
    pub seed: u64,
}

impl SortCriterion {
    pub fn descending(key: SortKey) -> Self {
        Self {
            key,
            descending: true,
            seed: 0,
        }
    }

    pub fn random(seed: u64) -> Self {
        Self {
            key: SortKey::Random,
            descending: true,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Room positions in the order this criterion prescribes.
    pub fn order(&self, instance: &ProblemInstance) -> Vec<usize> {
        let mut order: Vec<usize> = (0..instance.len()).collect();
        let caps = instance.capacities();
        let procs = instance.proctors();
        let keyed = |order: &mut Vec<usize>, cmp: &dyn Fn(usize, usize) -> std::cmp::Ordering| {
            order.sort_by(|&a, &b| {
                let primary = if self.descending {
                    cmp(b, a)
                } else {
                    cmp(a, b)
                };
                primary.then(a.cmp(&b))
            })
        };
        match self.key {
            SortKey::Proctors => keyed(&mut order, &|a, b| procs[a].cmp(&procs[b])),
            SortKey::Capacity => keyed(&mut order, &|a, b| caps[a].cmp(&caps[b])),
            SortKey::SpecificWeight => {
                keyed(&mut order, &|a, b| instance.cmp_specific_weight(a, b))
            }
            SortKey::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                order.shuffle(&mut rng);
            }
        }
        order
    }
}

/// Takes rooms by decreasing specific weight until the demand is covered.
pub fn greedy_solve(instance: &ProblemInstance) -> Result<IntegerSolution> {
    instance.ensure_feasible()?;
    let mut chosen = vec![false; instance.len()];
    let mut load = 0u64;
    let mut value = 0u64;
    for i in instance.specific_weight_order() {
        if load >= instance.demand() {
            break;
        }
        chosen[i] = true;
        load += instance.capacities()[i];
        value += instance.proctors()[i];
    }
    Ok(IntegerSolution {
        selection: Selection::new(chosen),
        value,
    })
}

/// Exact optimum through the complementary max-profit knapsack.
pub fn dp_solve(instance: &ProblemInstance) -> Result<IntegerSolution> {
    let knapsack = to_standard_knapsack(instance)?;
    let n = instance.len();
    if instance.demand() == 0 {
        return Ok(IntegerSolution {
            selection: Selection::empty(n),
            value: 0,
        });
    }
    let budget = knapsack.budget as usize;
    let width = budget + 1;
    let cells = (n + 1)
        .checked_mul(width)
        .filter(|&c| c <= DP_CELL_LIMIT)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "dynamic programming table of {} x {width} cells is too large",
                n + 1
            ))
        })?;

    // best[i][w]: largest profit packable from items i.. within weight w
    let mut best = vec![0u32; cells];
    for i in (0..n).rev() {
        let weight = knapsack.items[i].weight as usize;
        let profit = knapsack.items[i].profit as u32;
        let (head, tail) = best.split_at_mut((i + 1) * width);
        let row = &mut head[i * width..];
        let next = &tail[..width];
        row.copy_from_slice(next);
        for w in weight..width {
            let take = profit + next[w - weight];
            if take > row[w] {
                row[w] = take;
            }
        }
    }

    // Packing an item whenever that stays optimal gives the lexicographically
    // largest packing, i.e. the smallest cover.
    let mut packed = vec![false; n];
    let mut w = budget;
    for (i, slot) in packed.iter_mut().enumerate() {
        let weight = knapsack.items[i].weight as usize;
        if weight <= w {
            let take = knapsack.items[i].profit as u32 + best[(i + 1) * width + w - weight];
            if take == best[i * width + w] {
                *slot = true;
                w -= weight;
            }
        }
    }
    let packing = Selection::new(packed);
    let selection = knapsack.to_covering(&packing);
    let value = instance.total_proctors() - knapsack.profit(&packing);
    debug_assert_eq!(u64::from(best[budget]), knapsack.profit(&packing));
    Ok(IntegerSolution { selection, value })
}

/// Closed-form optimum of the linear relaxation.
///
/// Rooms are filled whole by decreasing specific weight; the first room that
/// would overshoot the residual demand ρ is filled to ρ/cₖ.
pub fn lp_relax_solve(instance: &ProblemInstance) -> Result<LpRelaxation> {
    instance.ensure_feasible()?;
    let mut levels = vec![RationalValue::zero(); instance.len()];
    let mut residual = instance.demand();
    let mut whole = 0u64;
    let mut fractional = None;
    let mut value = RationalValue::zero();
    for k in instance.specific_weight_order() {
        if residual == 0 {
            break;
        }
        let capacity = instance.capacities()[k];
        if capacity <= residual {
            levels[k] = RationalValue::one();
            whole += instance.proctors()[k];
            residual -= capacity;
        } else {
            levels[k] = RationalValue::new(residual as i64, capacity as i64);
            value = RationalValue::new((instance.proctors()[k] * residual) as i64, capacity as i64);
            fractional = Some(k);
            residual = 0;
        }
    }
    Ok(LpRelaxation {
        value: value + RationalValue::from_u64(whole),
        fractional,
        levels,
    })
}

/// xᵢ = 1 exactly where ξᵢ > 0.
pub fn associated_integer_solution(levels: &[RationalValue]) -> Selection {
    Selection::new(levels.iter().map(|l| *l > RationalValue::zero()).collect())
}

/// Exhaustive minimum over all 2^N selections. Testing oracle.
pub fn brute_force_solve(instance: &ProblemInstance) -> Result<IntegerSolution> {
    let n = instance.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            rooms: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    instance.ensure_feasible()?;
    let caps = instance.capacities();
    let procs = instance.proctors();
    // (value, order key) where the key puts room 0 in the most significant bit
    let mut best: Option<(u64, u64)> = None;
    for mask in 0u64..(1u64 << n) {
        let mut load = 0u64;
        let mut value = 0u64;
        let mut key = 0u64;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                load += caps[i];
                value += procs[i];
                key |= 1 << (n - 1 - i);
            }
        }
        if load >= instance.demand() && best.is_none_or(|b| (value, key) < b) {
            best = Some((value, key));
        }
    }
    let (value, key) = best.expect("feasible instance has a cover");
    let selection = Selection::from_positions(n, (0..n).filter(|i| key >> (n - 1 - i) & 1 == 1));
    Ok(IntegerSolution { selection, value })
}

/// Runs the three solvers on one subproblem.
pub fn solve_triple(instance: &ProblemInstance) -> Result<SolutionTriple> {
    let lp = lp_relax_solve(instance)?;
    let exact = dp_solve(instance)?;
    let greedy = greedy_solve(instance)?;
    let dps = RationalValue::from_u64(exact.value);
    assert!(
        lp.value <= dps && exact.value <= greedy.value,
        "bound ordering violated: lrs={} dps={} gas={}",
        lp.value,
        exact.value,
        greedy.value
    );
    Ok(SolutionTriple {
        lp_fractional: lp.fractional_room(instance),
        lrs: lp.value,
        dps: exact.value,
        gas: greedy.value,
        greedy_selection: greedy.selection,
        exact_selection: exact.selection,
    })
}
