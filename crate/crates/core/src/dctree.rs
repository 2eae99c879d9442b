//! Divide & conquer trees.
//!
//! Every vertex holds a list of rooms and a demand. A vertex with more than
//! `min_size` rooms is split into a left and a right child whose room lists
//! partition its own, and whose demands are the capacity-proportional share
//! of the parent demand (left rounded, right takes the rest).
//!
//! Vertices are stored in left pre-order, so vertex `0` is the root and the
//! numbering matches the usual tabular rendering of a tree.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, RoomId};
use crate::rational::RationalValue;
use crate::solvers::{SolutionTriple, SortCriterion, SortKey};

/// How the proportional left demand is rounded to an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Rounding {
    #[default]
    Ceil,
    Floor,
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rounding::Ceil => "ceil",
            Rounding::Floor => "floor",
        })
    }
}

impl FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ceil" => Ok(Rounding::Ceil),
            "floor" => Ok(Rounding::Floor),
            other => Err(Error::InvalidParameter(format!(
                "unknown rounding {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TreeAlgorithm {
    /// Left child is the leading `⌊f·|V|⌋` rooms of the list.
    HeadLeft,
    /// Left child is the rooms at even positions of the list.
    Balanced,
}

impl TreeAlgorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            TreeAlgorithm::HeadLeft => "hlT",
            TreeAlgorithm::Balanced => "blT",
        }
    }
}

impl fmt::Display for TreeAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreeAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hlt" | "headleft" | "head-left" => Ok(TreeAlgorithm::HeadLeft),
            "blt" | "balanced" => Ok(TreeAlgorithm::Balanced),
            other => Err(Error::InvalidParameter(format!(
                "unknown tree algorithm {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeParams {
    pub algorithm: TreeAlgorithm,
    pub sort: SortCriterion,
    /// Head fraction `f`; only meaningful for [`TreeAlgorithm::HeadLeft`].
    pub head_fraction: Option<RationalValue>,
    pub min_size: usize,
    pub rounding: Rounding,
}

impl TreeParams {
    pub fn head_left(sort: SortCriterion, fraction: RationalValue, min_size: usize) -> Self {
        Self {
            algorithm: TreeAlgorithm::HeadLeft,
            sort,
            head_fraction: Some(fraction),
            min_size,
            rounding: Rounding::Ceil,
        }
    }

    pub fn balanced(sort: SortCriterion, min_size: usize) -> Self {
        Self {
            algorithm: TreeAlgorithm::Balanced,
            sort,
            head_fraction: None,
            min_size,
            rounding: Rounding::Ceil,
        }
    }

    pub fn with_rounding(self, rounding: Rounding) -> Self {
        Self { rounding, ..self }
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::head_left(
            SortCriterion::descending(SortKey::SpecificWeight),
            RationalValue::new(1, 2),
            4,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DCNode {
    /// Positions into the root instance, in list order.
    pub rooms: Vec<usize>,
    pub demand: u64,
    pub height: usize,
    /// Pre-order indices of the (left, right) children.
    pub children: Option<(usize, usize)>,
    pub triple: Option<SolutionTriple>,
}

impl DCNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct DCTree {
    instance: ProblemInstance,
    nodes: Vec<DCNode>,
    params: TreeParams,
    height: usize,
}

/// Left and right demands of a split, `d_left = round(D·L/T)`.
pub fn split_demand(
    parent_demand: u64,
    left_caps_sum: u64,
    total_caps_sum: u64,
    rounding: Rounding,
) -> Result<(u64, u64)> {
    if left_caps_sum == 0 || left_caps_sum >= total_caps_sum {
        return Err(Error::InvalidPartition(format!(
            "left capacity {left_caps_sum} must lie strictly between 0 and {total_caps_sum}"
        )));
    }
    let scaled = u128::from(parent_demand) * u128::from(left_caps_sum);
    let total = u128::from(total_caps_sum);
    let left = match rounding {
        Rounding::Floor => scaled / total,
        Rounding::Ceil => scaled.div_ceil(total),
    } as u64;
    Ok((left, parent_demand - left))
}

/// Both halves of a pair can meet their demands.
pub fn pair_feasible(left_caps_sum: u64, right_caps_sum: u64, d_left: u64, d_right: u64) -> bool {
    d_left <= left_caps_sum && d_right <= right_caps_sum
}

/// `D ≤ (R − 1)/R · T`: enough slack for a floor split to stay feasible.
pub fn slack_condition_holds(total_caps: u64, right_caps: u64, demand: u64) -> bool {
    if right_caps == 0 {
        return false;
    }
    u128::from(demand) * u128::from(right_caps)
        <= u128::from(right_caps - 1) * u128::from(total_caps)
}

/// Head-left tree: left child is the first `⌊f·|V|⌋` rooms of the sorted list.
pub fn build_tree_headleft(
    instance: &ProblemInstance,
    sort: SortCriterion,
    fraction: RationalValue,
    min_size: usize,
    rounding: Rounding,
) -> Result<DCTree> {
    let params = TreeParams {
        algorithm: TreeAlgorithm::HeadLeft,
        sort,
        head_fraction: Some(fraction),
        min_size,
        rounding,
    };
    DCTree::build(instance, params)
}

/// Balanced tree: left child takes even list positions, right child odd ones.
pub fn build_tree_balanced(
    instance: &ProblemInstance,
    sort: SortCriterion,
    min_size: usize,
    rounding: Rounding,
) -> Result<DCTree> {
    let params = TreeParams {
        algorithm: TreeAlgorithm::Balanced,
        sort,
        head_fraction: None,
        min_size,
        rounding,
    };
    DCTree::build(instance, params)
}

/// Leaves of the tree pruned at height `h`.
pub fn prune(tree: &DCTree, h: usize) -> Result<Vec<&DCNode>> {
    Ok(tree
        .pruned_leaves(h)?
        .into_iter()
        .map(|i| &tree.nodes[i])
        .collect())
}

impl DCTree {
    pub fn build(instance: &ProblemInstance, params: TreeParams) -> Result<Self> {
        if params.min_size < 1 {
            return Err(Error::InvalidParameter(
                "minimum list size must be at least 1".into(),
            ));
        }
        let fraction = match params.algorithm {
            TreeAlgorithm::HeadLeft => {
                let f = params.head_fraction.clone().ok_or_else(|| {
                    Error::InvalidParameter("head-left trees need a head fraction".into())
                })?;
                if f < RationalValue::zero() || f > RationalValue::one() {
                    return Err(Error::InvalidParameter(format!(
                        "head fraction {f} outside [0, 1]"
                    )));
                }
                Some(f)
            }
            TreeAlgorithm::Balanced => None,
        };
        instance.ensure_feasible()?;

        let mut builder = Builder {
            instance,
            params: &params,
            fraction,
            nodes: Vec::new(),
        };
        let root = params.sort.order(instance);
        builder.grow(root, instance.demand(), 0)?;
        let nodes = builder.nodes;
        let height = nodes.iter().map(|n| n.height).max().unwrap_or(0);
        Ok(Self {
            instance: instance.clone(),
            nodes,
            params,
            height,
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn root(&self) -> &DCNode {
        &self.nodes[0]
    }

    /// All vertices in pre-order.
    pub fn nodes(&self) -> &[DCNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &DCNode {
        &self.nodes[index]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn set_triple(&mut self, index: usize, triple: SolutionTriple) {
        self.nodes[index].triple = Some(triple);
    }

    /// Room labels of a vertex in list order.
    pub fn room_ids(&self, index: usize) -> Vec<RoomId> {
        self.nodes[index]
            .rooms
            .iter()
            .map(|&i| self.instance.room_ids()[i])
            .collect()
    }

    pub fn capacity_of(&self, index: usize) -> u64 {
        self.nodes[index]
            .rooms
            .iter()
            .map(|&i| self.instance.capacities()[i])
            .sum()
    }

    /// The subproblem of a vertex, rooms in their original order.
    pub fn node_instance(&self, index: usize) -> Result<ProblemInstance> {
        let node = &self.nodes[index];
        let mut positions = node.rooms.clone();
        positions.sort_unstable();
        self.instance.restrict(&positions, node.demand)
    }

    /// Pre-order indices of the leaves of the subtree induced on heights `≤ h`.
    pub fn pruned_leaves(&self, h: usize) -> Result<Vec<usize>> {
        if h > self.height {
            return Err(Error::OutOfRange {
                requested: h,
                max: self.height,
            });
        }
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.height == h || (n.height < h && n.is_leaf()))
            .map(|(i, _)| i)
            .collect())
    }

    /// Graphviz rendering, one box per vertex labelled with demand and size.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dctree {\n    node [shape=box];\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "    v{i} [label=\"D={} |V|={}\"];",
                node.demand,
                node.rooms.len()
            );
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some((l, r)) = node.children {
                let _ = writeln!(out, "    v{i} -> v{l};");
                let _ = writeln!(out, "    v{i} -> v{r};");
            }
        }
        out.push_str("}\n");
        out
    }

    /// Rooms × vertices 0/1 membership table with a trailing demand row, as CSV.
    ///
    /// Rows follow the root list order.
    pub fn membership_table(&self) -> String {
        let mut out = String::from("Room");
        for i in 0..self.nodes.len() {
            let _ = write!(out, ",Vertex {i}");
        }
        out.push('\n');
        let mut member = vec![vec![false; self.nodes.len()]; self.instance.len()];
        for (v, node) in self.nodes.iter().enumerate() {
            for &room in &node.rooms {
                member[room][v] = true;
            }
        }
        for &room in &self.nodes[0].rooms {
            out.push_str(&self.instance.room_ids()[room].to_string());
            for &flag in &member[room] {
                out.push_str(if flag { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out.push('D');
        for node in &self.nodes {
            let _ = write!(out, ",{}", node.demand);
        }
        out.push('\n');
        out
    }
}

struct Builder<'a> {
    instance: &'a ProblemInstance,
    params: &'a TreeParams,
    fraction: Option<RationalValue>,
    nodes: Vec<DCNode>,
}

impl Builder<'_> {
    fn capacity(&self, rooms: &[usize]) -> u64 {
        rooms.iter().map(|&i| self.instance.capacities()[i]).sum()
    }

    /// Splits a list in two, or `None` when the vertex stays a leaf.
    fn split(&self, rooms: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
        if rooms.len() <= self.params.min_size {
            return None;
        }
        match self.params.algorithm {
            TreeAlgorithm::HeadLeft => {
                let f = self.fraction.as_ref().expect("validated");
                let head = (f * &RationalValue::from_u64(rooms.len() as u64))
                    .floor()
                    .to_usize()
                    .unwrap_or(0);
                if head == 0 || head >= rooms.len() {
                    return None;
                }
                Some((rooms[..head].to_vec(), rooms[head..].to_vec()))
            }
            TreeAlgorithm::Balanced => {
                let even = rooms.iter().copied().step_by(2).collect();
                let odd = rooms.iter().copied().skip(1).step_by(2).collect();
                Some((even, odd))
            }
        }
    }

    fn grow(&mut self, rooms: Vec<usize>, demand: u64, height: usize) -> Result<usize> {
        let index = self.nodes.len();
        let halves = self.split(&rooms);
        self.nodes.push(DCNode {
            rooms,
            demand,
            height,
            children: None,
            triple: None,
        });
        let Some((left, right)) = halves else {
            return Ok(index);
        };
        let left_caps = self.capacity(&left);
        let right_caps = self.capacity(&right);
        let (d_left, d_right) = split_demand(
            demand,
            left_caps,
            left_caps + right_caps,
            self.params.rounding,
        )?;
        if !pair_feasible(left_caps, right_caps, d_left, d_right) {
            let (side, demand, capacity) = if d_left > left_caps {
                ("left", d_left, left_caps)
            } else {
                ("right", d_right, right_caps)
            };
            return Err(Error::SplitInfeasible {
                vertex: index,
                side,
                demand,
                capacity,
            });
        }
        let l = self.grow(left, d_left, height + 1)?;
        let r = self.grow(right, d_right, height + 1)?;
        self.nodes[index].children = Some((l, r));
        Ok(index)
    }
}
