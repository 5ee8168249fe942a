//! Simulation regions and BS/UE point patterns.
//!
//! Every drop lives on a square torus so that interference sums see no
//! edge. Coordinates are in km.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Square torus `[0, side_km)²` with wrap-around in both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    side_km: f64,
}

impl Region {
    pub fn new(side_km: f64) -> Result<Self> {
        if side_km.is_finite() && side_km > 0.0 {
            Ok(Region { side_km })
        } else {
            Err(SimError::config("region.side_km", format!("must be > 0, got {side_km}")))
        }
    }

    pub fn side_km(&self) -> f64 {
        self.side_km
    }

    pub fn area_km2(&self) -> f64 {
        self.side_km * self.side_km
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..self.side_km).contains(&p.x) && (0.0..self.side_km).contains(&p.y)
    }

    /// Reduces a coordinate into `[0, side)`.
    pub fn wrap(&self, v: f64) -> f64 {
        let w = v.rem_euclid(self.side_km);
        // rem_euclid can round up to `side` for tiny negative inputs
        if w >= self.side_km {
            0.0
        } else {
            w
        }
    }
}

/// BS and UE positions of one drop.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub bs_points: Vec<Point>,
    pub ue_points: Vec<Point>,
    pub region: Region,
}

/// Sizes the torus for the densities of `cfg`.
///
/// Without a fixed side the area is the smallest one expected to hold
/// `min_expected_bs` BSs and `min_expected_ue` UEs. If that area is expected
/// to hold more than `max_bs_cap` BSs the policy is infeasible.
pub fn resolve_region(cfg: &ScenarioConfig) -> Result<Region> {
    let policy = &cfg.region_policy;
    if let Some(side) = policy.fixed_side_km {
        return Region::new(side);
    }
    if policy.min_expected_bs == 0 || policy.min_expected_ue == 0 || policy.max_bs_cap == 0 {
        return Err(SimError::config("region_policy", "all policy fields must be positive"));
    }
    if policy.min_expected_bs > policy.max_bs_cap {
        return Err(SimError::config(
            "region_policy.min_expected_bs",
            format!(
                "{} expected BSs can never fit under max_bs_cap = {}",
                policy.min_expected_bs, policy.max_bs_cap
            ),
        ));
    }
    let lambda = cfg.bs_density;
    let rho = cfg.ue_density;
    let ue_floor = policy.min_expected_ue as f64 / rho;
    let area = (policy.min_expected_bs as f64 / lambda).max(ue_floor);
    // the BS floor alone always fits under the cap, so only the UE floor can
    // push the expected BS count over it
    if lambda * area > policy.max_bs_cap as f64 {
        return Err(SimError::config(
            "region_policy.max_bs_cap",
            format!(
                "an area holding {} expected UEs at {rho} UEs/km² needs {:.0} BSs at \
                 {lambda} BSs/km², above max_bs_cap = {}",
                policy.min_expected_ue,
                lambda * ue_floor,
                policy.max_bs_cap
            ),
        ));
    }
    Region::new(area.sqrt())
}

/// Homogeneous Poisson point process of `density` points/km² on `region`.
pub fn sample_hppp<R: Rng + ?Sized>(density: f64, region: &Region, rng: &mut R) -> Vec<Point> {
    let mean = density * region.area_km2();
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng) as usize;
    let side = region.side_km();
    (0..count)
        .map(|_| {
            let x = region.wrap(rng.random::<f64>() * side);
            let y = region.wrap(rng.random::<f64>() * side);
            Point::new(x, y)
        })
        .collect()
}

/// Inter-site distance (km) of a hexagonal layout with `density` sites/km².
pub fn hex_inter_site_distance(density: f64) -> f64 {
    (2.0 / (3f64.sqrt() * density)).sqrt()
}

/// Hexagonal BS layout: a triangular lattice of cell centres, flat
/// orientation, odd rows shifted by half a column.
///
/// The lattice is fitted to the torus: the row count is even and the column
/// count is chosen so the site count is as close to `density·area` as
/// possible, then both axes are stretched slightly so the pattern wraps
/// without a seam. `offset` translates the whole lattice.
pub fn generate_hexagonal(density: f64, region: &Region, offset: Point) -> Result<Vec<Point>> {
    if !(density.is_finite() && density > 0.0) {
        return Err(SimError::config("bs_density", format!("must be > 0, got {density}")));
    }
    let side = region.side_km();
    let target = density * region.area_km2();
    if target < 1.0 {
        return Err(SimError::config(
            "region_policy",
            format!("a {side} km torus cannot hold one hexagonal site at {density} BSs/km²"),
        ));
    }
    let isd = hex_inter_site_distance(density);
    let row_pitch = isd * 3f64.sqrt() / 2.0;
    let n_rows = (((side / row_pitch) / 2.0).round() as usize).max(1) * 2;
    let n_cols = ((target / n_rows as f64).round() as usize).max(1);
    let dx = side / n_cols as f64;
    let dy = side / n_rows as f64;

    let mut points = Vec::with_capacity(n_rows * n_cols);
    for row in 0..n_rows {
        let shift = if row % 2 == 1 { 0.5 } else { 0.0 };
        for col in 0..n_cols {
            let x = region.wrap((col as f64 + shift) * dx + offset.x);
            let y = region.wrap(row as f64 * dy + offset.y);
            points.push(Point::new(x, y));
        }
    }
    Ok(points)
}

/// Signed minimum-image displacement from `from` to `to` along one axis.
#[inline]
fn wrapped_delta(from: f64, to: f64, side: f64) -> f64 {
    let mut d = to - from;
    if d > 0.5 * side {
        d -= side;
    } else if d < -0.5 * side {
        d += side;
    }
    d
}

/// Euclidean distance under the minimum-image convention, km.
#[inline]
pub fn torus_distance_2d(p: Point, q: Point, region: &Region) -> f64 {
    let side = region.side_km();
    let dx = wrapped_delta(p.x, q.x, side);
    let dy = wrapped_delta(p.y, q.y, side);
    (dx * dx + dy * dy).sqrt()
}

/// Uniform bucket grid over the torus for nearest-first searches.
///
/// The number of cells per axis is odd so that the Chebyshev rings
/// `0..=max_ring()` around any cell visit every cell exactly once.
#[derive(Debug, Clone)]
pub struct CellGrid {
    cells_per_axis: usize,
    cell_km: f64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl CellGrid {
    /// Buckets `points` aiming at roughly `per_cell` points per cell.
    pub fn new(points: &[Point], region: &Region, per_cell: f64) -> Self {
        let wanted = (points.len() as f64 / per_cell.max(1e-9)).sqrt().floor() as usize;
        let mut n = wanted.clamp(1, 4097);
        if n.is_multiple_of(2) {
            n -= 1;
        }
        let cell_km = region.side_km() / n as f64;

        let cell_index = |p: &Point| {
            let cx = ((p.x / cell_km) as usize).min(n - 1);
            let cy = ((p.y / cell_km) as usize).min(n - 1);
            cy * n + cx
        };
        let mut counts = vec![0u32; n * n + 1];
        for p in points {
            counts[cell_index(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_index(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        CellGrid {
            cells_per_axis: n,
            cell_km,
            starts,
            items,
        }
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn cell_km(&self) -> f64 {
        self.cell_km
    }

    pub fn max_ring(&self) -> usize {
        (self.cells_per_axis - 1) / 2
    }

    pub fn cell_of(&self, p: Point) -> (usize, usize) {
        let n = self.cells_per_axis;
        (
            ((p.x / self.cell_km) as usize).min(n - 1),
            ((p.y / self.cell_km) as usize).min(n - 1),
        )
    }

    /// Lower bound on the 2D torus distance from any point of cell `center`
    /// to any point in ring `k` around it.
    pub fn ring_min_distance(&self, k: usize) -> f64 {
        k.saturating_sub(1) as f64 * self.cell_km
    }

    fn bucket(&self, cx: usize, cy: usize) -> &[u32] {
        let c = cy * self.cells_per_axis + cx;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Calls `f` with every point index in Chebyshev ring `k` around `center`.
    pub fn for_each_in_ring(&self, center: (usize, usize), k: usize, mut f: impl FnMut(usize)) {
        let n = self.cells_per_axis as isize;
        let (cx, cy) = (center.0 as isize, center.1 as isize);
        let k = k as isize;
        let mut visit = |dx: isize, dy: isize| {
            let x = (cx + dx).rem_euclid(n) as usize;
            let y = (cy + dy).rem_euclid(n) as usize;
            for &i in self.bucket(x, y) {
                f(i as usize);
            }
        };
        if k == 0 {
            visit(0, 0);
            return;
        }
        for dx in -k..=k {
            visit(dx, -k);
            visit(dx, k);
        }
        for dy in (-k + 1)..k {
            visit(-k, dy);
            visit(k, dy);
        }
    }
}
