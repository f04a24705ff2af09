//! Catalytic environments: atomic measures sampled from a stable random
//! measure, their dyadic-layer quantizations, smooth density catalysts,
//! and i.i.d. uniform lattice catalysts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Error, Result};

/// Half-open interval (lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::EmptyDomain(format!("interval ({lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }
}

/// Purely atomic catalyst: a finite list of weighted point masses on a
/// window, optionally extended periodically over the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicCatalyst {
    /// (location, weight) pairs sorted by location; weights positive.
    pub atoms: Vec<(f64, f64)>,
    pub window: Interval,
    pub period: Option<f64>,
}

impl AtomicCatalyst {
    pub fn new(mut atoms: Vec<(f64, f64)>, window: Interval) -> Self {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(loc, w) in &atoms {
            assert!(w > 0.0, "nonpositive atom weight {w}");
            assert!(window.contains(loc) || window.lo == loc, "atom at {loc} outside window");
        }
        AtomicCatalyst { atoms, window, period: None }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Atoms with location in (lo, hi], unrolled across periods when the
    /// catalyst is periodic.
    pub fn atoms_in_range(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        match self.period {
            None => self
                .atoms
                .iter()
                .copied()
                .filter(|&(x, _)| lo < x && x <= hi)
                .collect(),
            Some(p) => {
                let mut out = Vec::new();
                let k_lo = ((lo - self.window.hi) / p).floor() as i64;
                let k_hi = ((hi - self.window.lo) / p).ceil() as i64;
                for k in k_lo..=k_hi {
                    let shift = k as f64 * p;
                    for &(x, w) in &self.atoms {
                        let y = x + shift;
                        if lo < y && y <= hi {
                            out.push((y, w));
                        }
                    }
                }
                out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                out
            }
        }
    }
}

/// Quantized catalyst: layer n carries point masses of common weight 2^{-n}.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredCatalyst {
    /// layer index n -> sorted positions; each such atom weighs 2^{-n}
    pub layers: BTreeMap<i32, Vec<f64>>,
    pub n_min: i32,
    pub window: Interval,
    pub period: Option<f64>,
}

impl LayeredCatalyst {
    pub fn total_mass(&self) -> f64 {
        self.layers
            .iter()
            .map(|(&n, pts)| pts.len() as f64 * (-n as f64).exp2())
            .sum()
    }

    /// Positions of layer `n` in (lo, hi], unrolled across periods.
    pub fn points_in_range(&self, n: i32, lo: f64, hi: f64) -> Vec<f64> {
        let pts = match self.layers.get(&n) {
            Some(p) => p,
            None => return Vec::new(),
        };
        match self.period {
            None => pts.iter().copied().filter(|&x| lo < x && x <= hi).collect(),
            Some(p) => {
                let mut out = Vec::new();
                let k_lo = ((lo - self.window.hi) / p).floor() as i64;
                let k_hi = ((hi - self.window.lo) / p).ceil() as i64;
                for k in k_lo..=k_hi {
                    let shift = k as f64 * p;
                    for &x in pts {
                        let y = x + shift;
                        if lo < y && y <= hi {
                            out.push(y);
                        }
                    }
                }
                out.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out
            }
        }
    }
}

/// Deterministic branching-rate densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityCatalyst {
    /// |b|^q truncated at 1
    Parabolic { q: f64 },
    Constant { level: f64 },
    /// zero on `inner`, `level` elsewhere
    Gap { inner: Interval, level: f64 },
}

impl DensityCatalyst {
    pub fn eval(&self, b: f64) -> f64 {
        match *self {
            DensityCatalyst::Parabolic { q } => b.abs().powf(q).min(1.0),
            DensityCatalyst::Constant { level } => level,
            DensityCatalyst::Gap { inner, level } => {
                if inner.contains(b) || b == inner.lo {
                    0.0
                } else {
                    level
                }
            }
        }
    }
}

/// Site values on the centered cube [-2^n, 2^n]^d of Z^d, with a default
/// value outside the cube.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeCatalyst {
    pub dim: usize,
    /// half-width 2^n of the cube
    pub half: i64,
    /// row-major values, index = sum_i (c_i + half) * side^i
    pub values: Vec<f64>,
    pub outside_default: f64,
}

pub const DEFAULT_SITE_CAP: usize = 1 << 26;

impl LatticeCatalyst {
    pub fn side(&self) -> i64 {
        2 * self.half + 1
    }

    pub fn site_count(&self) -> usize {
        (self.side() as usize).pow(self.dim as u32)
    }

    fn index(&self, site: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        for &c in site.iter().rev() {
            if c.abs() > self.half {
                return None;
            }
            idx = idx * side as usize + (c + self.half) as usize;
        }
        Some(idx)
    }

    pub fn value(&self, site: &[i64]) -> f64 {
        assert_eq!(site.len(), self.dim);
        match self.index(site) {
            Some(i) => self.values[i],
            None => self.outside_default,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let simpson = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    };
    let whole = simpson(a, b);
    let left = simpson(a, m);
    let right = simpson(m, b);
    if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, eps / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, eps / 2.0, depth - 1)
    }
}

/// Per-band intensity constant c_gamma, defined through
/// c = (1 - 2^{-gamma}) / (gamma * I) with I = int_0^inf r^{-1-gamma}(1-e^{-r}) dr.
///
/// The singular part of I on [0,1] is summed as an alternating series; the
/// tail uses 1/gamma minus an adaptive-Simpson integral of r^{-1-gamma}e^{-r}.
/// Values are cached per gamma.
pub fn c_gamma(gamma: f64) -> f64 {
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must be in (0,1)");
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&gamma.to_bits()) {
        return v;
    }

    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..60u64 {
        fact *= k as f64;
        let term = 1.0 / (fact * (k as f64 - gamma));
        head += if k % 2 == 1 { term } else { -term };
        if term / fact < 1e-17 {
            break;
        }
    }
    let g = gamma;
    let tail_exp = adaptive_simpson(&|r: f64| r.powf(-1.0 - g) * (-r).exp(), 1.0, 45.0, 1e-13, 40);
    let integral = head + 1.0 / gamma - tail_exp;
    let c = (1.0 - (-gamma).exp2()) / (gamma * integral);
    cache.lock().unwrap().insert(gamma.to_bits(), c);
    c
}

/// Gamma function at 1 - gamma, recovered from the c_gamma identity.
pub fn gamma_fn_one_minus(gamma: f64) -> f64 {
    (1.0 - (-gamma).exp2()) / c_gamma(gamma)
}

/// Inverse-CDF draw from the density proportional to w^{-1-gamma} on [a, 2a).
fn band_weight(a: f64, gamma: f64, rng: &mut impl Rng) -> f64 {
    let lo = a.powf(-gamma);
    let hi = (2.0 * a).powf(-gamma);
    let u: f64 = rng.gen();
    (lo - u * (lo - hi)).powf(-1.0 / gamma)
}

/// Largest band index kept for a given weight floor: band n carries weights
/// in [2^{-n}, 2^{-n+1}) and is kept while 2^{-n+1} > weight_floor.
fn max_band(weight_floor: f64) -> i32 {
    ((1.0 - weight_floor.log2()).ceil() as i32) - 1
}

/// Sample a stable random measure of index `gamma` restricted to `window`,
/// as a union over dyadic weight bands of Poisson point processes. Band n
/// carries weights in [2^{-n}, 2^{-n+1}) with location intensity
/// intensity_scale * c_gamma * 2^{gamma n}; bands entirely below
/// `weight_floor` are omitted.
pub fn sample_stable_catalyst(
    gamma: f64,
    window: Interval,
    weight_floor: f64,
    intensity_scale: f64,
    rng: &mut impl Rng,
) -> Result<AtomicCatalyst> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0,1)")));
    }
    if !(weight_floor > 0.0 && weight_floor < 1.0) {
        return Err(Error::InvalidParameter(format!("weight_floor = {weight_floor}")));
    }
    let len = window.len();
    if len == 0.0 {
        return Ok(AtomicCatalyst { atoms: Vec::new(), window, period: None });
    }

    let c = c_gamma(gamma);
    let n_hi = max_band(weight_floor);
    let mut atoms = Vec::new();
    for n in (n_hi - 220..=n_hi).rev() {
        let lambda = intensity_scale * c * (gamma * n as f64).exp2() * len;
        if lambda < 1e-12 {
            break;
        }
        let count = Poisson::new(lambda).unwrap().sample(rng) as u64;
        let a = (-n as f64).exp2();
        for _ in 0..count {
            let loc = window.lo + rng.gen::<f64>() * len;
            atoms.push((loc, band_weight(a, gamma, rng)));
        }
    }
    atoms.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(AtomicCatalyst { atoms, window, period: None })
}

/// Sample only the total mass of a stable random measure on a window of
/// length `len`, without a weight floor.
///
/// Bands whose expected atom count stays at or below `band_cap` are sampled
/// exactly; the remaining small-weight bands plus the sub-band dust have
/// finite first and second moments, so their aggregate is replaced by a
/// matched Gaussian. The cutoff moments come from the Levy density
/// (gamma / GammaFn(1-gamma)) w^{-1-gamma} dw.
pub fn stable_total_mass(gamma: f64, len: f64, band_cap: f64, rng: &mut impl Rng) -> f64 {
    assert!(gamma > 0.0 && gamma < 1.0);
    assert!(len >= 0.0 && band_cap >= 1.0);
    if len == 0.0 {
        return 0.0;
    }
    let c = c_gamma(gamma);
    // largest n with intensity c 2^{gamma n} len <= band_cap
    let n_cut = ((band_cap / (c * len)).log2() / gamma).floor() as i32;
    let mut total = 0.0;
    for n in (n_cut - 220..=n_cut).rev() {
        let lambda = c * (gamma * n as f64).exp2() * len;
        if lambda < 1e-12 {
            break;
        }
        let count = Poisson::new(lambda).unwrap().sample(rng) as u64;
        let a = (-n as f64).exp2();
        for _ in 0..count {
            total += band_weight(a, gamma, rng);
        }
    }
    let w_cut = (-n_cut as f64).exp2();
    let rate = gamma / gamma_fn_one_minus(gamma) * len;
    let m1 = rate * w_cut.powf(1.0 - gamma) / (1.0 - gamma);
    let var = rate * w_cut.powf(2.0 - gamma) / (2.0 - gamma);
    let dust = Normal::new(m1, var.sqrt()).unwrap().sample(rng);
    total + dust.max(0.0)
}

/// Band index n with w in [2^{-n}, 2^{-n+1}), computed exactly from the
/// binary exponent so that boundary weights land in the closed-left band.
pub fn band_index(w: f64) -> i32 {
    assert!(w > 0.0 && w.is_finite());
    let bits = w.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64;
    assert!(e > 0, "subnormal weight {w}");
    -((e - 1023) as i32)
}

/// Drop atoms with weight >= 2^{-N+1} and round the rest down to the dyadic
/// floor of their band.
pub fn quantize_and_truncate(cat: &AtomicCatalyst, n_min: i32) -> LayeredCatalyst {
    let mut layers: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for &(loc, w) in &cat.atoms {
        let n = band_index(w);
        if n < n_min {
            continue;
        }
        layers.entry(n).or_default().push(loc);
    }
    for pts in layers.values_mut() {
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    LayeredCatalyst { layers, n_min, window: cat.window, period: cat.period }
}

/// Restrict to (-K, K] and declare period 2K.
pub fn periodic_extension_atomic(cat: &AtomicCatalyst, k: f64) -> Result<AtomicCatalyst> {
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!("period half-width K = {k}")));
    }
    let window = Interval::new(-k, k)?;
    let atoms = cat
        .atoms
        .iter()
        .copied()
        .filter(|&(x, _)| window.contains(x))
        .collect();
    Ok(AtomicCatalyst { atoms, window, period: Some(2.0 * k) })
}

/// Restrict to (-K, K] and declare period 2K, layer by layer.
pub fn periodic_extension_layered(cat: &LayeredCatalyst, k: f64) -> Result<LayeredCatalyst> {
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!("period half-width K = {k}")));
    }
    let window = Interval::new(-k, k)?;
    let mut layers = BTreeMap::new();
    for (&n, pts) in &cat.layers {
        let kept: Vec<f64> = pts.iter().copied().filter(|&x| window.contains(x)).collect();
        if !kept.is_empty() {
            layers.insert(n, kept);
        }
    }
    Ok(LayeredCatalyst { layers, n_min: cat.n_min, window, period: Some(2.0 * k) })
}

/// Largest spacing between neighboring points of a sorted list inside the
/// window. With a period the window is a circle and the wraparound gap
/// counts; without one only interior gaps count.
pub fn max_gap(points: &[f64], window: Interval, period: Option<f64>) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::UnboundedGap);
    }
    debug_assert!(points.windows(2).all(|p| p[0] <= p[1]), "points must be sorted");
    let mut gap: f64 = 0.0;
    for p in points.windows(2) {
        gap = gap.max(p[1] - p[0]);
    }
    if period.is_some() {
        let wrap = (points[0] - window.lo) + (window.hi - points[points.len() - 1]);
        gap = gap.max(wrap);
    }
    Ok(gap)
}

/// Independent uniform(0,1) site values on the cube [-2^n, 2^n]^d, with
/// value 1 outside.
pub fn sample_lattice_catalyst(
    d: usize,
    n: u32,
    site_cap: usize,
    rng: &mut impl Rng,
) -> Result<LatticeCatalyst> {
    assert!(d >= 1);
    let half = 1i64 << n;
    let side = 2 * half + 1;
    let count = (side as u128).pow(d as u32);
    if count > site_cap as u128 {
        return Err(Error::LatticeTooLarge { sites: count as usize, cap: site_cap });
    }
    let values = (0..count as usize).map(|_| rng.gen::<f64>()).collect();
    Ok(LatticeCatalyst { dim: d, half, values, outside_default: 1.0 })
}

/// True iff no nearest-neighbor connected set of `m` cube sites has all
/// values at or below `zeta`; equivalently every connected component of the
/// low set has fewer than `m` sites.
pub fn cluster_event(cat: &LatticeCatalyst, m: usize, zeta: f64) -> bool {
    assert!(m >= 1);
    let n_sites = cat.site_count();
    let low: Vec<bool> = cat.values.iter().map(|&v| v <= zeta).collect();
    let mut seen = vec![false; n_sites];
    let side = cat.side() as usize;
    // strides for stepping one site along each axis
    let strides: Vec<usize> = (0..cat.dim).map(|i| side.pow(i as u32)).collect();
    let mut stack = Vec::new();
    for start in 0..n_sites {
        if !low[start] || seen[start] {
            continue;
        }
        let mut size = 0usize;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            size += 1;
            if size >= m {
                return false;
            }
            for (axis, &stride) in strides.iter().enumerate() {
                let coord = (idx / stride) % side;
                if coord > 0 {
                    let j = idx - stride;
                    if low[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
                if coord + 1 < side {
                    let j = idx + stride;
                    if low[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
                let _ = axis;
            }
        }
    }
    true
}

/// Number of nearest-neighbor connected subsets of Z^d of cardinality m
/// that contain the origin. Exhaustive enumeration; intended for small m, d.
pub fn connected_sets_containing_origin(m: usize, d: usize) -> usize {
    assert!(m >= 1 && d >= 1);
    let origin = vec![0i64; d];
    let mut found: HashSet<Vec<Vec<i64>>> = HashSet::new();
    let mut current = vec![origin];
    grow(&mut current, m, d, &mut found);
    return found.len();

    fn grow(current: &mut Vec<Vec<i64>>, m: usize, d: usize, found: &mut HashSet<Vec<Vec<i64>>>) {
        if current.len() == m {
            let mut key = current.clone();
            key.sort();
            found.insert(key);
            return;
        }
        let members: HashSet<Vec<i64>> = current.iter().cloned().collect();
        let mut frontier: HashSet<Vec<i64>> = HashSet::new();
        for site in current.iter() {
            for axis in 0..d {
                for step in [-1i64, 1] {
                    let mut nb = site.clone();
                    nb[axis] += step;
                    if !members.contains(&nb) {
                        frontier.insert(nb);
                    }
                }
            }
        }
        for nb in frontier {
            current.push(nb);
            grow(current, m, d, found);
            current.pop();
        }
    }
}

fn enc(x: f64, hex: bool) -> Value {
    if hex {
        Value::String(format!("{:016x}", x.to_bits()))
    } else {
        json!(x)
    }
}

fn dec(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Malformed(format!("bad number {n}"))),
        Value::String(s) => {
            let bits = u64::from_str_radix(s, 16)
                .map_err(|_| Error::Malformed(format!("bad hex float {s:?}")))?;
            Ok(f64::from_bits(bits))
        }
        other => Err(Error::Malformed(format!("expected float, got {other}"))),
    }
}

fn dec_opt(v: Option<&Value>) -> Result<Option<f64>> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(x) => Ok(Some(dec(x)?)),
    }
}

impl AtomicCatalyst {
    pub fn to_json(&self, hex: bool) -> Value {
        json!({
            "kind": "atomic",
            "window": [enc(self.window.lo, hex), enc(self.window.hi, hex)],
            "period": self.period.map(|p| enc(p, hex)),
            "atoms": self.atoms.iter().map(|&(l, w)| json!([enc(l, hex), enc(w, hex)])).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let win = v["window"]
            .as_array()
            .ok_or_else(|| Error::Malformed("missing window".into()))?;
        let window = Interval::new(dec(&win[0])?, dec(&win[1])?)?;
        let period = dec_opt(v.get("period"))?;
        let mut atoms = Vec::new();
        for a in v["atoms"].as_array().ok_or_else(|| Error::Malformed("missing atoms".into()))? {
            let pair = a.as_array().ok_or_else(|| Error::Malformed("bad atom".into()))?;
            atoms.push((dec(&pair[0])?, dec(&pair[1])?));
        }
        Ok(AtomicCatalyst { atoms, window, period })
    }
}

impl LayeredCatalyst {
    pub fn to_json(&self, hex: bool) -> Value {
        let layers: serde_json::Map<String, Value> = self
            .layers
            .iter()
            .map(|(&n, pts)| {
                (n.to_string(), Value::Array(pts.iter().map(|&x| enc(x, hex)).collect()))
            })
            .collect();
        json!({
            "kind": "layered",
            "n_min": self.n_min,
            "window": [enc(self.window.lo, hex), enc(self.window.hi, hex)],
            "period": self.period.map(|p| enc(p, hex)),
            "layers": layers,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let win = v["window"]
            .as_array()
            .ok_or_else(|| Error::Malformed("missing window".into()))?;
        let window = Interval::new(dec(&win[0])?, dec(&win[1])?)?;
        let mut layers = BTreeMap::new();
        for (key, pts) in v["layers"]
            .as_object()
            .ok_or_else(|| Error::Malformed("missing layers".into()))?
        {
            let n: i32 = key.parse().map_err(|_| Error::Malformed(format!("layer key {key:?}")))?;
            let mut out = Vec::new();
            for p in pts.as_array().ok_or_else(|| Error::Malformed("bad layer".into()))? {
                out.push(dec(p)?);
            }
            layers.insert(n, out);
        }
        Ok(LayeredCatalyst {
            layers,
            n_min: v["n_min"].as_i64().ok_or_else(|| Error::Malformed("missing n_min".into()))?
                as i32,
            window,
            period: dec_opt(v.get("period"))?,
        })
    }
}

impl LatticeCatalyst {
    pub fn to_json(&self, hex: bool) -> Value {
        json!({
            "kind": "lattice",
            "dim": self.dim,
            "half": self.half,
            "outside_default": enc(self.outside_default, hex),
            "values": self.values.iter().map(|&x| enc(x, hex)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let values_json = v["values"]
            .as_array()
            .ok_or_else(|| Error::Malformed("missing values".into()))?;
        let mut values = Vec::with_capacity(values_json.len());
        for x in values_json {
            values.push(dec(x)?);
        }
        Ok(LatticeCatalyst {
            dim: v["dim"].as_u64().ok_or_else(|| Error::Malformed("missing dim".into()))? as usize,
            half: v["half"].as_i64().ok_or_else(|| Error::Malformed("missing half".into()))?,
            values,
            outside_default: dec(&v["outside_default"])?,
        })
    }
}
