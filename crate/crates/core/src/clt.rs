//! The branching clock K: cumulative collision local time of a path with a
//! catalyst, for each catalyst kind, plus its generalized inverse (the time
//! change tau).

use crate::catalyst::{AtomicCatalyst, DensityCatalyst, LatticeCatalyst, LayeredCatalyst};
use crate::motion::{JumpPath, Path};

/// Non-decreasing piecewise-linear functional t -> K(t) with K(times[0]) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeFunctional {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl CumulativeFunctional {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        assert!(!times.is_empty());
        debug_assert!(values[0] == 0.0);
        debug_assert!(values.windows(2).all(|p| p[1] >= p[0] - 1e-12));
        CumulativeFunctional { times, values }
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Linear interpolation, clamped outside the recorded range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= *self.times.last().unwrap() {
            return self.end_value();
        }
        let i = self.times.partition_point(|&u| u <= t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        if t1 == t0 {
            return v1;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Leftmost time with K(t) >= r; None when r exceeds the final value.
    pub fn inverse_time_change(&self, r: f64) -> Option<f64> {
        assert!(r >= 0.0);
        let i = self.values.partition_point(|&v| v < r);
        if i == self.values.len() {
            return None;
        }
        if i == 0 {
            return Some(self.times[0]);
        }
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        Some(t0 + (t1 - t0) * (r - v0) / (v1 - v0))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,K\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

fn segment_band_time(x0: f64, x1: f64, dt: f64, lo: f64, hi: f64) -> f64 {
    if x0 == x1 {
        return if x0 >= lo && x0 <= hi { dt } else { 0.0 };
    }
    let (a, b) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
    let overlap = (b.min(hi) - a.max(lo)).max(0.0);
    dt * overlap / (b - a)
}

/// Core accumulation over a prepared sorted (location, weight) list:
/// K(t) = sum_i w_i * L_t(b_i) with the eps-band local-time estimator.
fn clt_from_atoms(path: &Path, atoms: &[(f64, f64)], eps: f64) -> CumulativeFunctional {
    assert!(eps > 0.0);
    let n = path.positions.len();
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    times.push(path.t0);
    values.push(0.0);
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let (x0, x1) = (path.positions[k], path.positions[k + 1]);
        let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        // atoms whose eps-band intersects the segment's range
        let start = atoms.partition_point(|a| a.0 < lo - eps);
        for &(b, w) in &atoms[start..] {
            if b > hi + eps {
                break;
            }
            acc += w * segment_band_time(x0, x1, path.dt, b - eps, b + eps) / (2.0 * eps);
        }
        times.push(path.time(k + 1));
        values.push(acc);
    }
    CumulativeFunctional::new(times, values)
}

fn path_range(path: &Path) -> (f64, f64) {
    let lo = path.positions.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = path.positions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// K along a Brownian path through an atomic catalyst; periodic catalysts
/// are unrolled over the path's range.
pub fn clt_atomic(path: &Path, cat: &AtomicCatalyst, eps: f64) -> CumulativeFunctional {
    let (lo, hi) = path_range(path);
    let atoms = cat.atoms_in_range(lo - 2.0 * eps, hi + 2.0 * eps);
    clt_from_atoms(path, &atoms, eps)
}

/// Same for a layered catalyst (atoms of layer n weigh 2^{-n}).
pub fn clt_layered(path: &Path, cat: &LayeredCatalyst, eps: f64) -> CumulativeFunctional {
    let (lo, hi) = path_range(path);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for &n in cat.layers.keys() {
        let w = (-n as f64).exp2();
        for b in cat.points_in_range(n, lo - 2.0 * eps, hi + 2.0 * eps) {
            atoms.push((b, w));
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    clt_from_atoms(path, &atoms, eps)
}

/// Single layer of a layered catalyst, for per-layer additivity checks and
/// layer-resolved stage statistics.
pub fn clt_single_layer(path: &Path, cat: &LayeredCatalyst, n: i32, eps: f64) -> CumulativeFunctional {
    let (lo, hi) = path_range(path);
    let w = (-n as f64).exp2();
    let atoms: Vec<(f64, f64)> = cat
        .points_in_range(n, lo - 2.0 * eps, hi + 2.0 * eps)
        .into_iter()
        .map(|b| (b, w))
        .collect();
    clt_from_atoms(path, &atoms, eps)
}

/// K(t) = int chi(W_s) ds by the trapezoid rule on the path grid.
pub fn clt_density(path: &Path, cat: &DensityCatalyst) -> CumulativeFunctional {
    let n = path.positions.len();
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    times.push(path.t0);
    values.push(0.0);
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let f0 = cat.eval(path.positions[k]);
        let f1 = cat.eval(path.positions[k + 1]);
        acc += 0.5 * (f0 + f1) * path.dt;
        times.push(path.time(k + 1));
        values.push(acc);
    }
    CumulativeFunctional::new(times, values)
}

/// K(t) = int rho_{W_s} ds, exact from the walk's holding intervals.
pub fn clt_lattice(jp: &JumpPath, cat: &LatticeCatalyst) -> CumulativeFunctional {
    let holdings = jp.holdings();
    let mut times = Vec::with_capacity(holdings.len() + 1);
    let mut values = Vec::with_capacity(holdings.len() + 1);
    times.push(jp.t0);
    values.push(0.0);
    let mut acc = 0.0;
    for (a, b, site) in holdings {
        if b <= a {
            continue;
        }
        acc += cat.value(site) * (b - a);
        times.push(b);
        values.push(acc);
    }
    CumulativeFunctional::new(times, values)
}
