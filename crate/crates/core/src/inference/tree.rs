use std::cmp::Ordering;

use nalgebra::DVector;
use rayon::prelude::*;

use super::grid::{uses_max, Primitive, PrimitiveGrid};
use super::samples::LocationSample;
use crate::error::{Error, Result, SampleId};

/// A path literal: the primitive and whether it holds on this branch.
pub type Literal = (Primitive, bool);

/// A leaf of the learned tree.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafBranch {
    pub literals: Vec<Literal>,
    /// Index of the selected input in the input set.
    pub input: usize,
    /// Positions (into the location's sample list) routed to this leaf.
    pub samples: Vec<usize>,
}

/// Training data for one location: samples with precomputed window
/// aggregates laid out as in [`PrimitiveGrid::aggregates`].
pub struct TreeData<'a> {
    pub samples: &'a [LocationSample],
    pub aggregates: &'a [Vec<(f64, f64)>],
    pub grid: &'a PrimitiveGrid,
    pub inputs: &'a [DVector<f64>],
}

/// `argmin_{u in U} max_l d(u_l, u)`, first in input-set order on ties.
pub fn best_cover(labels: &[usize], inputs: &[DVector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, u) in inputs.iter().enumerate() {
        let worst = labels.iter().map(|&l| (&inputs[l] - u).norm()).fold(0.0, f64::max);
        if worst < best.1 {
            best = (j, worst);
        }
    }
    best
}

/// Sum of squared class counts over `n` samples, for the split score.
struct Side {
    n: u128,
    sq: u128,
}

fn side(counts: &[u64]) -> Side {
    Side {
        n: counts.iter().map(|&c| c as u128).sum(),
        sq: counts.iter().map(|&c| (c as u128) * (c as u128)).sum(),
    }
}

/// Split candidate with an exact Gini score `t.sq/t.n + f.sq/f.n` (larger
/// means purer children).
struct Candidate {
    prim: Primitive,
    num: u128,
    den: u128,
    margin: f64,
}

impl Candidate {
    /// `Greater` when `self` is the better split.
    fn rank(&self, other: &Candidate) -> Ordering {
        (self.num * other.den)
            .cmp(&(other.num * self.den))
            .then(self.margin.total_cmp(&other.margin))
            .then(other.prim.cmp_key(&self.prim))
    }
}

impl TreeData<'_> {
    fn value(&self, s: usize, slot: usize, prim: &Primitive) -> f64 {
        let (hi, lo) = self.aggregates[s][slot];
        if uses_max(prim.op, prim.cmp) {
            hi
        } else {
            lo
        }
    }

    fn holds(&self, s: usize, slot: usize, prim: &Primitive) -> bool {
        let (hi, lo) = self.aggregates[s][slot];
        let scale = self.grid.scales[prim.feature];
        prim.robustness(hi, lo, scale) >= 0.0
    }

    fn slot(&self, prim: &Primitive) -> usize {
        let fi = self
            .grid
            .features
            .iter()
            .position(|&f| f == prim.feature)
            .expect("grid feature");
        let wi = self
            .grid
            .windows
            .iter()
            .position(|&w| w == (prim.a, prim.b))
            .expect("grid window");
        fi * self.grid.windows.len() + wi
    }

    fn best_for(
        &self,
        node: &[usize],
        fi: usize,
        wi: usize,
        op: super::grid::TemporalOp,
        cmp: super::grid::Comparison,
    ) -> Option<Candidate> {
        let slot = fi * self.grid.windows.len() + wi;
        let (a, b) = self.grid.windows[wi];
        let feature = self.grid.features[fi];
        let scale = self.grid.scales[feature];
        let mut proto = Primitive {
            feature,
            op,
            cmp,
            a,
            b,
            threshold: 0.0,
        };
        let mut vals: Vec<(f64, usize)> = node
            .iter()
            .map(|&s| (self.value(s, slot, &proto), self.samples[s].label))
            .filter(|(v, _)| v.is_finite())
            .collect();
        if vals.len() < node.len() {
            // Infinite aggregates (empty windows) are not split on.
            return None;
        }
        vals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let nl = self.inputs.len();
        let mut below = vec![0u64; nl];
        let mut total = vec![0u64; nl];
        for &(_, l) in &vals {
            total[l] += 1;
        }
        let mut best: Option<Candidate> = None;
        for i in 0..vals.len() - 1 {
            below[vals[i].1] += 1;
            let (lo, hi) = (vals[i].0, vals[i + 1].0);
            if lo == hi {
                continue;
            }
            let theta = lo + (hi - lo) / 2.0;
            if theta <= lo || theta >= hi {
                continue;
            }
            let above: Vec<u64> = total.iter().zip(&below).map(|(t, b)| t - b).collect();
            let (sb, sa) = (side(&below), side(&above));
            proto.threshold = theta;
            let margin = ((theta - lo) / scale).min((hi - theta) / scale);
            let cand = Candidate {
                prim: proto,
                num: sb.sq * sa.n + sa.sq * sb.n,
                den: sb.n * sa.n,
                margin,
            };
            if best.as_ref().is_none_or(|b| cand.rank(b) == Ordering::Greater) {
                best = Some(cand);
            }
        }
        best
    }

    fn best_split(&self, node: &[usize]) -> Option<Primitive> {
        let mut combos = Vec::new();
        for fi in 0..self.grid.features.len() {
            for wi in 0..self.grid.windows.len() {
                for op in PrimitiveGrid::ops() {
                    for cmp in PrimitiveGrid::comparisons() {
                        combos.push((fi, wi, op, cmp));
                    }
                }
            }
        }
        combos
            .par_iter()
            .filter_map(|&(fi, wi, op, cmp)| self.best_for(node, fi, wi, op, cmp))
            .max_by(|x, y| x.rank(y))
            .map(|c| c.prim)
    }

    fn conflicts(&self, node: &[usize]) -> Vec<(SampleId, SampleId)> {
        let mut firsts: Vec<(usize, SampleId)> = Vec::new();
        for &s in node {
            let smp = &self.samples[s];
            if !firsts.iter().any(|(l, _)| *l == smp.label) {
                firsts.push((smp.label, smp.id));
            }
        }
        let mut pairs = Vec::new();
        // Samples with identical aggregates but different labels cannot be
        // separated by any primitive.
        for (i, &s) in node.iter().enumerate() {
            for &t in &node[i + 1..] {
                if self.samples[s].label != self.samples[t].label && self.aggregates[s] == self.aggregates[t] {
                    pairs.push((self.samples[s].id, self.samples[t].id));
                }
            }
        }
        if pairs.is_empty() {
            for i in 0..firsts.len() {
                for j in i + 1..firsts.len() {
                    pairs.push((firsts[i].1, firsts[j].1));
                }
            }
        }
        pairs.sort();
        pairs
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &self,
        node: Vec<usize>,
        path: Vec<Literal>,
        depth: usize,
        eps: f64,
        max_depth: usize,
        location: usize,
        out: &mut Vec<LeafBranch>,
    ) -> Result<()> {
        let mut labels: Vec<usize> = node.iter().map(|&s| self.samples[s].label).collect();
        labels.sort_unstable();
        labels.dedup();
        let (input, radius) = best_cover(&labels, self.inputs);
        if radius <= eps {
            out.push(LeafBranch {
                literals: path,
                input,
                samples: node,
            });
            return Ok(());
        }
        let split = if depth < max_depth {
            self.best_split(&node)
        } else {
            None
        };
        let Some(prim) = split else {
            return Err(Error::InseparableLeaf {
                location,
                pairs: self.conflicts(&node),
            });
        };
        let slot = self.slot(&prim);
        let (yes, no): (Vec<usize>, Vec<usize>) = node.iter().partition(|&&s| self.holds(s, slot, &prim));
        let mut left = path.clone();
        left.push((prim, true));
        self.grow(yes, left, depth + 1, eps, max_depth, location, out)?;
        let mut right = path;
        right.push((prim, false));
        self.grow(no, right, depth + 1, eps, max_depth, location, out)
    }
}

/// Grow a decision tree over grid primitives until every leaf is
/// `eps`-valid; leaves are returned depth-first, true child first.
pub fn grow_tree(data: &TreeData<'_>, eps: f64, max_depth: usize, location: usize) -> Result<Vec<LeafBranch>> {
    if data.samples.is_empty() {
        return Err(Error::Corruption(format!("location {location} has no samples")));
    }
    let mut out = Vec::new();
    data.grow(
        (0..data.samples.len()).collect(),
        Vec::new(),
        0,
        eps,
        max_depth,
        location,
        &mut out,
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cover_prefers_input_order() {
        let u: Vec<DVector<f64>> = [-1.0, 0.0, 1.0].iter().map(|&v| DVector::from_vec(vec![v])).collect();
        assert_eq!(best_cover(&[1, 2], &u), (1, 1.0));
        assert_eq!(best_cover(&[0, 2], &u), (1, 1.0));
        assert_eq!(best_cover(&[2], &u), (2, 0.0));
    }
}
