//! Problem data for the minimum-proctor covering knapsack.
//!
//! A [`ProblemInstance`] asks for a set of rooms whose capacities add up to
//! at least the demand while the total number of proctors is minimal:
//!
//! ```text
//! min Σ pᵢxᵢ   s.t.   Σ cᵢxᵢ ≥ D,   xᵢ ∈ {0, 1}
//! ```
//!
//! The complement `ξ = 1 − x` turns it into a standard max-profit knapsack
//! with budget `Σc − D`, see [`to_standard_knapsack`].

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::rational::RationalValue;

/// Upper bound on the total capacity of an instance.
pub const MAX_TOTAL_CAPACITY: u64 = 1 << 31;

/// Stable label of a room, its column position in the original data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoomId(pub usize);

impl fmt::Display for RoomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    capacities: Vec<u64>,
    proctors: Vec<u64>,
    demand: u64,
    room_ids: Vec<RoomId>,
}

impl ProblemInstance {
    /// Rooms are labelled `0..N` in the given order.
    pub fn new(capacities: Vec<u64>, proctors: Vec<u64>, demand: u64) -> Result<Self> {
        let ids = (0..capacities.len()).map(RoomId).collect();
        Self::with_ids(capacities, proctors, demand, ids)
    }

    pub fn with_ids(
        capacities: Vec<u64>,
        proctors: Vec<u64>,
        demand: u64,
        room_ids: Vec<RoomId>,
    ) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one room is required".into(),
            ));
        }
        if capacities.len() != proctors.len() || capacities.len() != room_ids.len() {
            return Err(Error::InvalidInstance(format!(
                "length mismatch: {} capacities, {} proctor counts, {} room ids",
                capacities.len(),
                proctors.len(),
                room_ids.len()
            )));
        }
        if let Some(i) = capacities.iter().position(|&c| c == 0) {
            return Err(Error::InvalidInstance(format!(
                "room {} has zero capacity",
                room_ids[i]
            )));
        }
        if let Some(i) = proctors.iter().position(|&p| p == 0) {
            return Err(Error::InvalidInstance(format!(
                "room {} needs zero proctors",
                room_ids[i]
            )));
        }
        capacities
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .filter(|&t| t <= MAX_TOTAL_CAPACITY)
            .ok_or_else(|| {
                Error::InvalidInstance(format!("total capacity exceeds {MAX_TOTAL_CAPACITY}"))
            })?;
        // proctor counts never exceed capacities under the rate map, but user
        // supplied data may; keep the objective in range all the same
        let proctor_total = proctors.iter().try_fold(0u64, |acc, &p| acc.checked_add(p));
        if proctor_total.is_none_or(|t| t > MAX_TOTAL_CAPACITY) {
            return Err(Error::InvalidInstance(format!(
                "total proctor count exceeds {MAX_TOTAL_CAPACITY}"
            )));
        }
        if demand > MAX_TOTAL_CAPACITY {
            return Err(Error::InvalidInstance(format!(
                "demand exceeds {MAX_TOTAL_CAPACITY}"
            )));
        }
        Ok(Self {
            capacities,
            proctors,
            demand,
            room_ids,
        })
    }

    /// Instance whose proctor counts follow the student-proctor `rate`.
    pub fn from_rate(capacities: Vec<u64>, rate: u64, demand: u64) -> Result<Self> {
        let proctors = proctors_from_rate(&capacities, rate)?;
        Self::new(capacities, proctors, demand)
    }

    pub fn len(&self) -> usize {
        self.capacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacities.is_empty()
    }

    pub fn capacities(&self) -> &[u64] {
        &self.capacities
    }

    pub fn proctors(&self) -> &[u64] {
        &self.proctors
    }

    pub fn demand(&self) -> u64 {
        self.demand
    }

    pub fn room_ids(&self) -> &[RoomId] {
        &self.room_ids
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacities.iter().sum()
    }

    pub fn total_proctors(&self) -> u64 {
        self.proctors.iter().sum()
    }

    pub fn is_feasible(&self) -> bool {
        self.total_capacity() >= self.demand
    }

    /// Fails with the seat deficit when the rooms cannot host the demand.
    pub fn ensure_feasible(&self) -> Result<()> {
        let capacity = self.total_capacity();
        if capacity < self.demand {
            return Err(Error::Infeasible {
                demand: self.demand,
                capacity,
                deficit: self.demand - capacity,
            });
        }
        Ok(())
    }

    /// Same data with another demand.
    pub fn with_demand(&self, demand: u64) -> Self {
        Self {
            demand,
            ..self.clone()
        }
    }

    /// Subproblem on the rooms at `positions` (in that order) with its own demand.
    pub fn restrict(&self, positions: &[usize], demand: u64) -> Result<Self> {
        if let Some(&bad) = positions.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidInput(format!(
                "room position {bad} out of range for {} rooms",
                self.len()
            )));
        }
        Self::with_ids(
            positions.iter().map(|&i| self.capacities[i]).collect(),
            positions.iter().map(|&i| self.proctors[i]).collect(),
            demand,
            positions.iter().map(|&i| self.room_ids[i]).collect(),
        )
    }

    /// Compares the specific weights of rooms `a` and `b` exactly.
    pub fn cmp_specific_weight(&self, a: usize, b: usize) -> Ordering {
        // cₐ/pₐ vs c_b/p_b  <=>  cₐ·p_b vs c_b·pₐ
        let lhs = u128::from(self.capacities[a]) * u128::from(self.proctors[b]);
        let rhs = u128::from(self.capacities[b]) * u128::from(self.proctors[a]);
        lhs.cmp(&rhs)
    }

    /// Room positions by specific weight, largest first, ties by position.
    pub fn specific_weight_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.cmp_specific_weight(b, a).then(a.cmp(&b)));
        order
    }
}

/// A 0/1 choice of rooms, aligned with an instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Selection {
    chosen: Vec<bool>,
}

impl Selection {
    pub fn new(chosen: Vec<bool>) -> Self {
        Self { chosen }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            chosen: vec![false; n],
        }
    }

    pub fn from_positions(n: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut chosen = vec![false; n];
        for i in positions {
            chosen[i] = true;
        }
        Self { chosen }
    }

    pub fn chosen(&self) -> &[bool] {
        &self.chosen
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.chosen
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
    }

    /// Σ pᵢxᵢ
    pub fn value(&self, instance: &ProblemInstance) -> u64 {
        self.positions().map(|i| instance.proctors()[i]).sum()
    }

    /// Σ cᵢxᵢ
    pub fn load(&self, instance: &ProblemInstance) -> u64 {
        self.positions().map(|i| instance.capacities()[i]).sum()
    }

    pub fn complement(&self) -> Self {
        Self {
            chosen: self.chosen.iter().map(|&b| !b).collect(),
        }
    }

    /// Covers the demand of `instance`.
    pub fn is_feasible(&self, instance: &ProblemInstance) -> bool {
        self.len() == instance.len() && self.load(instance) >= instance.demand()
    }

    /// Room labels of the chosen rooms.
    pub fn room_ids(&self, instance: &ProblemInstance) -> Vec<RoomId> {
        self.positions().map(|i| instance.room_ids()[i]).collect()
    }
}

/// γᵢ = cᵢ/pᵢ for every room.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecificWeights {
    pub weights: Vec<RationalValue>,
}

/// pᵢ = ⌈cᵢ / rate⌉
pub fn proctors_from_rate(capacities: &[u64], rate: u64) -> Result<Vec<u64>> {
    if rate < 1 {
        return Err(Error::InvalidParameter(
            "student-proctor rate must be at least 1".into(),
        ));
    }
    Ok(capacities
        .iter()
        .map(|&c| c.div_ceil(rate).max(1))
        .collect())
}

pub fn specific_weights(instance: &ProblemInstance) -> SpecificWeights {
    let weights = instance
        .capacities()
        .iter()
        .zip(instance.proctors())
        .map(|(&c, &p)| RationalValue::new(c as i64, p as i64))
        .collect();
    SpecificWeights { weights }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KnapsackItem {
    pub weight: u64,
    pub profit: u64,
}

/// The max-profit knapsack obtained through ξ = 1 − x.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardKnapsack {
    pub budget: u64,
    pub items: Vec<KnapsackItem>,
}

impl StandardKnapsack {
    /// Maps a knapsack packing back onto the covering problem.
    pub fn to_covering(&self, packing: &Selection) -> Selection {
        packing.complement()
    }

    pub fn profit(&self, packing: &Selection) -> u64 {
        packing.positions().map(|i| self.items[i].profit).sum()
    }

    pub fn weight(&self, packing: &Selection) -> u64 {
        packing.positions().map(|i| self.items[i].weight).sum()
    }
}

pub fn to_standard_knapsack(instance: &ProblemInstance) -> Result<StandardKnapsack> {
    instance.ensure_feasible()?;
    Ok(StandardKnapsack {
        budget: instance.total_capacity() - instance.demand(),
        items: instance
            .capacities()
            .iter()
            .zip(instance.proctors())
            .map(|(&weight, &profit)| KnapsackItem { weight, profit })
            .collect(),
    })
}
