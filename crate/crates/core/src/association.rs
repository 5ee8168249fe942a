//! User association, BS idle mode and single-RB scheduling.

use rand::Rng;

use crate::error::{Result, SimError};
use crate::propagation::LinkField;
use crate::scenario::CellGrid;

/// UE → serving BS, and its inverse BS → served UEs (ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMap {
    serving_bs: Vec<usize>,
    served_ues: Vec<Vec<usize>>,
}

impl AssociationMap {
    pub fn from_serving(serving_bs: Vec<usize>, n_bs: usize) -> Self {
        let mut served_ues = vec![Vec::new(); n_bs];
        for (ue, &bs) in serving_bs.iter().enumerate() {
            served_ues[bs].push(ue);
        }
        AssociationMap {
            serving_bs,
            served_ues,
        }
    }

    pub fn serving_bs(&self) -> &[usize] {
        &self.serving_bs
    }

    pub fn served_ues(&self) -> &[Vec<usize>] {
        &self.served_ues
    }

    pub fn n_bs(&self) -> usize {
        self.served_ues.len()
    }

    pub fn n_ue(&self) -> usize {
        self.serving_bs.len()
    }
}

#[inline]
fn better(gain: f64, bs: usize, best_gain: f64, best_bs: usize) -> bool {
    gain > best_gain || (gain == best_gain && bs < best_bs)
}

/// Max-RSS association by exhaustive search: each UE picks the BS with the
/// largest long-term gain `gain(bs, ue)`, ties going to the lowest index.
pub fn associate(n_bs: usize, n_ue: usize, gain: impl Fn(usize, usize) -> f64) -> Result<AssociationMap> {
    if n_bs == 0 {
        return Err(SimError::config("bs_density", "association needs at least one BS"));
    }
    let serving = (0..n_ue)
        .map(|ue| {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for bs in 0..n_bs {
                let g = gain(bs, ue);
                if better(g, bs, best.0, best.1) {
                    best = (g, bs);
                }
            }
            best.1
        })
        .collect();
    Ok(AssociationMap::from_serving(serving, n_bs))
}

/// Max-RSS association over a drop's link field, visiting BSs nearest-first
/// and stopping once no farther BS can beat the current best.
///
/// Gives exactly the same map as [`associate`] with
/// `|b, u| field.link(b, u).long_term_gain`.
pub fn associate_field(field: &LinkField<'_>) -> Result<AssociationMap> {
    let n_bs = field.n_bs();
    if n_bs == 0 {
        return Err(SimError::config("bs_density", "association needs at least one BS"));
    }
    let dep = field.deployment;
    let grid = CellGrid::new(&dep.bs_points, &dep.region, 0.5);
    let max_ring = grid.max_ring();
    // (distance, bs) of every BS in the rings visited so far; `cand[..head]`
    // have been evaluated, the rest are sorted by distance once per ring
    let mut cand: Vec<(f64, usize)> = Vec::new();
    let mut serving = Vec::with_capacity(dep.ue_points.len());
    for (ue, &p) in dep.ue_points.iter().enumerate() {
        let center = grid.cell_of(p);
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        let beaten = |best: (f64, usize), r: f64| best.1 != usize::MAX && field.gain_bound(ue, r) < best.0;
        cand.clear();
        let mut head = 0;
        'rings: for k in 0..=max_ring {
            if beaten(best, grid.ring_min_distance(k)) {
                break;
            }
            grid.for_each_in_ring(center, k, |bs| cand.push((field.distance(bs, ue), bs)));
            cand[head..].sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            // anything in later rings is at least this far away
            let horizon = if k == max_ring {
                f64::INFINITY
            } else {
                grid.ring_min_distance(k + 1)
            };
            while head < cand.len() && cand[head].0 <= horizon {
                let (r, bs) = cand[head];
                head += 1;
                if beaten(best, r) {
                    break 'rings;
                }
                let g = field.link(bs, ue).long_term_gain;
                if better(g, bs, best.0, best.1) {
                    best = (g, bs);
                }
            }
        }
        serving.push(best.1);
    }
    Ok(AssociationMap::from_serving(serving, n_bs))
}

/// Active BSs (ascending) and the one UE each schedules on the RB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub active_bs: Vec<usize>,
    pub scheduled_ue: Vec<usize>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.active_bs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_bs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.active_bs.iter().copied().zip(self.scheduled_ue.iter().copied())
    }
}

/// BSs without UEs go idle; every other BS schedules one of its UEs
/// uniformly at random.
pub fn build_schedule<R: Rng + ?Sized>(assoc: &AssociationMap, rng: &mut R) -> Schedule {
    let mut active_bs = Vec::new();
    let mut scheduled_ue = Vec::new();
    for (bs, ues) in assoc.served_ues().iter().enumerate() {
        if ues.is_empty() {
            continue;
        }
        let pick = if ues.len() == 1 { 0 } else { rng.random_range(0..ues.len()) };
        active_bs.push(bs);
        scheduled_ue.push(ues[pick]);
    }
    Schedule {
        active_bs,
        scheduled_ue,
    }
}

/// Approximate active BS density `λ [1 - (1 + ρ/(qλ))^-q]`.
pub fn analytical_active_density(lambda: f64, rho: f64, q: f64) -> f64 {
    lambda * (1.0 - (1.0 + rho / (q * lambda)).powf(-q))
}
