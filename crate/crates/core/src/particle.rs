//! Mass-1/N branching particle approximation of the catalytic
//! super-process: each particle moves (Brownian grid steps or exact walk
//! jumps), accumulates the branching clock K from the catalyst, and at
//! exponential K-thresholds of rate 2N either dies or splits in two.
//! Stopping rules freeze particles individually, giving the stopped-measure
//! analogue.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::catalyst::{AtomicCatalyst, DensityCatalyst, LatticeCatalyst, LayeredCatalyst};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Position {
    Real(f64),
    Lattice(Vec<i64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Alive,
    Frozen,
    Died,
    Split,
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub id: u64,
    pub parent: Option<u64>,
    pub birth_time: f64,
    /// personal current time
    pub time: f64,
    pub position: Position,
    /// K accumulated along the ancestral line since the stage origin
    pub clock: f64,
    /// clock value at this particle's birth
    pub birth_clock: f64,
    /// absolute clock level at which the next branch event fires
    pub next_threshold: f64,
    pub fate: Fate,
}

/// Compact clock-interval record for the time-change statistics: one
/// particle covered [birth_clock, end_clock) of the K axis.
#[derive(Debug, Clone, Copy)]
pub struct ClockSpan {
    pub birth_clock: f64,
    pub end_clock: f64,
    /// ended by freezing (still alive) rather than by death or split
    pub frozen: bool,
}

#[derive(Debug, Clone)]
pub struct Population {
    pub particles: Vec<Particle>,
    pub time: f64,
    pub n: usize,
    next_id: u64,
    free_slots: Vec<usize>,
    pub spans: Vec<ClockSpan>,
}

#[derive(Debug, Clone)]
pub enum CatalystKind<'a> {
    Atomic(&'a AtomicCatalyst),
    Layered(&'a LayeredCatalyst),
    Density(&'a DensityCatalyst),
    Lattice(&'a LatticeCatalyst),
}

#[derive(Debug, Clone)]
pub enum StoppingRule {
    FixedTime(f64),
    /// freeze when the particle's own clock reaches r
    KLevel(f64),
    /// real motion: freeze at the first grid time outside (lo, hi)
    ExitInterval(f64, f64),
    /// lattice motion: freeze at the first jump outside [-half, half]^d
    ExitCube(i64),
    MinOf(Vec<StoppingRule>),
}

#[derive(Debug, Clone, Copy, Default)]
struct Stops {
    t_max: Option<f64>,
    k_max: Option<f64>,
    exit_interval: Option<(f64, f64)>,
    exit_cube: Option<i64>,
}

impl Stops {
    fn from_rule(rule: &StoppingRule) -> Self {
        fn fold(rule: &StoppingRule, s: &mut Stops) {
            match rule {
                StoppingRule::FixedTime(t) => {
                    s.t_max = Some(s.t_max.map_or(*t, |u: f64| u.min(*t)))
                }
                StoppingRule::KLevel(r) => s.k_max = Some(s.k_max.map_or(*r, |u: f64| u.min(*r))),
                StoppingRule::ExitInterval(lo, hi) => s.exit_interval = Some((*lo, *hi)),
                StoppingRule::ExitCube(h) => s.exit_cube = Some(*h),
                StoppingRule::MinOf(list) => list.iter().for_each(|r| fold(r, s)),
            }
        }
        let mut s = Stops::default();
        fold(rule, &mut s);
        s
    }
}

#[derive(Debug, Clone)]
pub struct EvolveParams {
    /// Brownian step (ignored for lattice motion)
    pub dt: f64,
    /// local-time bandwidth for atomic catalysts
    pub eps: f64,
    /// abort threshold on motion steps plus branch events per evolve call
    pub guard: usize,
    /// keep died/split records in the particle list (genealogy inspection)
    pub keep_dead: bool,
    /// record ClockSpan entries for time-change statistics
    pub record_spans: bool,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams { dt: 1e-2, eps: 1e-2, guard: 10_000_000, keep_dead: false, record_spans: false }
    }
}

/// Initial measure descriptions for init_population.
#[derive(Debug, Clone)]
pub enum InitialMeasure {
    DiracReal { at: f64, mass: f64 },
    DiracLattice { at: Vec<i64>, mass: f64 },
    UniformInterval { lo: f64, hi: f64, mass: f64 },
}

impl InitialMeasure {
    pub fn mass(&self) -> f64 {
        match self {
            InitialMeasure::DiracReal { mass, .. }
            | InitialMeasure::DiracLattice { mass, .. }
            | InitialMeasure::UniformInterval { mass, .. } => *mass,
        }
    }
}

/// round(mass * N) particles with unbiased Bernoulli rounding of the
/// fractional part, placed by sampling the measure.
pub fn init_population(
    spec: &InitialMeasure,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Population> {
    let mass = spec.mass();
    if mass <= 0.0 {
        return Err(Error::InvalidParameter("zero-mass initial measure".into()));
    }
    assert!(n >= 1);
    let scaled = mass * n as f64;
    let mut count = scaled.floor() as usize;
    if rng.gen::<f64>() < scaled - scaled.floor() {
        count += 1;
    }
    let mut pop = Population {
        particles: Vec::with_capacity(count),
        time: 0.0,
        n,
        next_id: 0,
        free_slots: Vec::new(),
        spans: Vec::new(),
    };
    for _ in 0..count {
        let position = match spec {
            InitialMeasure::DiracReal { at, .. } => Position::Real(*at),
            InitialMeasure::DiracLattice { at, .. } => Position::Lattice(at.clone()),
            InitialMeasure::UniformInterval { lo, hi, .. } => {
                Position::Real(lo + rng.gen::<f64>() * (hi - lo))
            }
        };
        let id = pop.next_id;
        pop.next_id += 1;
        pop.particles.push(Particle {
            id,
            parent: None,
            birth_time: 0.0,
            time: 0.0,
            position,
            clock: 0.0,
            birth_clock: 0.0,
            next_threshold: 0.0, // drawn at the start of evolve
            fate: Fate::Alive,
        });
    }
    Ok(pop)
}

impl Population {
    /// Mass of particles that are present (alive or frozen).
    pub fn total_mass(&self) -> f64 {
        self.present_count() as f64 / self.n as f64
    }

    pub fn present_count(&self) -> usize {
        self.particles
            .iter()
            .filter(|p| matches!(p.fate, Fate::Alive | Fate::Frozen))
            .count()
    }

    pub fn present(&self) -> impl Iterator<Item = &Particle> {
        self.particles
            .iter()
            .filter(|p| matches!(p.fate, Fate::Alive | Fate::Frozen))
    }

    /// <X, f> over the present particles.
    pub fn integrate(&self, f: impl Fn(&Position) -> f64) -> f64 {
        self.present().map(|p| f(&p.position)).sum::<f64>() / self.n as f64
    }

    /// Start a new stage: frozen particles thaw, stage clocks reset, fresh
    /// thresholds are drawn (memorylessness makes redrawing exact).
    pub fn begin_stage(&mut self, rng: &mut impl Rng) {
        let rate_mean = 1.0 / (2.0 * self.n as f64);
        for p in &mut self.particles {
            if matches!(p.fate, Fate::Alive | Fate::Frozen) {
                p.fate = Fate::Alive;
                p.clock = 0.0;
                p.birth_clock = 0.0;
                let e: f64 = Exp1.sample(rng);
                p.next_threshold = e * rate_mean;
            }
        }
        self.spans.clear();
    }

    /// Mass split by whether the stage clock reached xi.
    pub fn classify_good_bad(&self, xi: f64) -> (f64, f64) {
        let mut good = 0usize;
        let mut bad = 0usize;
        for p in self.present() {
            if p.clock >= xi {
                good += 1;
            } else {
                bad += 1;
            }
        }
        (good as f64 / self.n as f64, bad as f64 / self.n as f64)
    }
}

/// Z_r on a grid: mass of lineage clock-intervals covering each r. Spans
/// from dead/split particles cover [birth, end); frozen spans are closed on
/// the right (the particle still exists at its final clock value).
pub fn time_changed_mass(spans: &[ClockSpan], n: usize, r_grid: &[f64]) -> Vec<f64> {
    r_grid
        .iter()
        .map(|&r| {
            let count = spans
                .iter()
                .filter(|s| {
                    s.birth_clock <= r && (r < s.end_clock || (s.frozen && r <= s.end_clock))
                })
                .count();
            count as f64 / n as f64
        })
        .collect()
}

/// Mean, jackknife-based variance diagnostics of replicate functionals.
pub struct MomentEstimate {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

pub fn estimate_moments(values: &[f64]) -> MomentEstimate {
    let (mean, mean_se) = crate::stats::mean_se(values);
    let (variance, variance_se) = crate::stats::variance_jackknife(values);
    MomentEstimate { mean, mean_se, variance, variance_se }
}

/// Unrolled, sorted atom table covering a range; extended on demand for
/// periodic catalysts.
struct AtomTable {
    atoms: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
    periodic: bool,
}

impl AtomTable {
    fn for_atomic(cat: &AtomicCatalyst, lo: f64, hi: f64) -> Self {
        AtomTable {
            atoms: cat.atoms_in_range(lo, hi),
            lo,
            hi,
            periodic: cat.period.is_some(),
        }
    }

    fn for_layered(cat: &LayeredCatalyst, lo: f64, hi: f64) -> Self {
        let mut atoms = Vec::new();
        for &ln in cat.layers.keys() {
            let w = (-ln as f64).exp2();
            for b in cat.points_in_range(ln, lo, hi) {
                atoms.push((b, w));
            }
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        AtomTable { atoms, lo, hi, periodic: cat.period.is_some() }
    }

    fn covers(&self, lo: f64, hi: f64) -> bool {
        !self.periodic || (self.lo <= lo && hi <= self.hi)
    }

    /// weight-summed eps-band time of the segment x0 -> x1 over dt
    fn segment_dk(&self, x0: f64, x1: f64, dt: f64, eps: f64) -> f64 {
        let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        let start = self.atoms.partition_point(|a| a.0 < lo - eps);
        let mut dk = 0.0;
        for &(b, w) in &self.atoms[start..] {
            if b > hi + eps {
                break;
            }
            let t_in = if x0 == x1 {
                dt
            } else {
                dt * ((hi.min(b + eps) - lo.max(b - eps)).max(0.0)) / (hi - lo)
            };
            dk += w * t_in / (2.0 * eps);
        }
        dk
    }
}

enum Medium<'a> {
    Atoms(AtomTable),
    Density(&'a DensityCatalyst),
    Lattice(&'a LatticeCatalyst),
}

/// Evolve every particle until its stopping rule fires (or it dies).
/// Returns the stopped population; particle-level event budget enforced.
pub fn evolve(
    mut pop: Population,
    cat: &CatalystKind,
    stop: &StoppingRule,
    prm: &EvolveParams,
    rng: &mut impl Rng,
) -> Result<Population> {
    let stops = Stops::from_rule(stop);
    let n = pop.n;
    let rate_mean = 1.0 / (2.0 * n as f64);
    let horizon = stops.t_max.unwrap_or(pop.time + 50.0);
    let pad = 8.0 * (horizon - pop.time).max(1.0).sqrt();
    let (range_lo, range_hi) = pop
        .particles
        .iter()
        .filter_map(|p| match &p.position {
            Position::Real(x) => Some(*x),
            Position::Lattice(_) => None,
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let mut medium = match cat {
        CatalystKind::Atomic(c) => Medium::Atoms(AtomTable::for_atomic(c, range_lo - pad, range_hi + pad)),
        CatalystKind::Layered(c) => Medium::Atoms(AtomTable::for_layered(c, range_lo - pad, range_hi + pad)),
        CatalystKind::Density(c) => Medium::Density(c),
        CatalystKind::Lattice(c) => Medium::Lattice(c),
    };

    // fresh thresholds for particles that have none yet
    for p in &mut pop.particles {
        if p.fate == Fate::Alive && p.next_threshold <= p.clock {
            let e: f64 = Exp1.sample(rng);
            p.next_threshold = p.clock + e * rate_mean;
        }
    }

    let mut work: Vec<usize> = (0..pop.particles.len())
        .filter(|&i| pop.particles[i].fate == Fate::Alive)
        .collect();
    let mut budget = 0usize;
    let mut end_time = pop.time;
    // cascade scratch
    let mut pending: Vec<(f64, f64)> = Vec::new();
    let mut survivors: Vec<(f64, f64)> = Vec::new();

    while let Some(i) = work.pop() {
        'life: loop {
            budget += 1;
            if budget > prm.guard {
                return Err(Error::ExplosionGuard { steps: budget as u64, cap: prm.guard as u64 });
            }
            let p = &pop.particles[i];
            let (t, clock) = (p.time, p.clock);

            // time left before the fixed horizon
            if let Some(tm) = stops.t_max {
                if t >= tm - 1e-15 {
                    freeze(&mut pop, i, tm, prm);
                    end_time = end_time.max(tm);
                    break 'life;
                }
            }
            if let Some(km) = stops.k_max {
                if clock >= km {
                    freeze(&mut pop, i, t, prm);
                    end_time = end_time.max(t);
                    break 'life;
                }
            }

            // one motion step: (dt_step, new position, dK, exited flag)
            let (dt_step, new_pos, dk, exited) = match (&pop.particles[i].position, &mut medium) {
                (Position::Real(x), medium) => {
                    let x = *x;
                    let dt_step = match stops.t_max {
                        Some(tm) => prm.dt.min(tm - t),
                        None => prm.dt,
                    };
                    let z: f64 = StandardNormal.sample(rng);
                    let x1 = x + dt_step.sqrt() * z;
                    let dk = match medium {
                        Medium::Density(c) => 0.5 * (c.eval(x) + c.eval(x1)) * dt_step,
                        Medium::Atoms(table) => {
                            if !table.covers(x1.min(x) - 1.0, x1.max(x) + 1.0) {
                                // wandered outside the unrolled window; rebuild wider
                                let (lo, hi) = (table.lo - 2.0 * pad, table.hi + 2.0 * pad);
                                *table = match cat {
                                    CatalystKind::Atomic(c) => AtomTable::for_atomic(c, lo, hi),
                                    CatalystKind::Layered(c) => AtomTable::for_layered(c, lo, hi),
                                    _ => unreachable!(),
                                };
                            }
                            table.segment_dk(x, x1, dt_step, prm.eps)
                        }
                        Medium::Lattice(_) => {
                            return Err(Error::InvalidParameter(
                                "lattice catalyst with real-valued motion".into(),
                            ))
                        }
                    };
                    let exited = stops
                        .exit_interval
                        .map(|(lo, hi)| x1 <= lo || x1 >= hi)
                        .unwrap_or(false);
                    (dt_step, Position::Real(x1), dk, exited)
                }
                (Position::Lattice(site), Medium::Lattice(c)) => {
                    let hold: f64 = Exp1.sample(rng);
                    let slope = c.value(site);
                    let (dt_step, jumped) = match stops.t_max {
                        Some(tm) if t + hold >= tm => (tm - t, false),
                        _ => (hold, true),
                    };
                    let mut new_site = site.clone();
                    if jumped {
                        let axis = rng.gen_range(0..site.len());
                        new_site[axis] += if rng.gen::<bool>() { 1 } else { -1 };
                    }
                    let exited = jumped
                        && stops
                            .exit_cube
                            .map(|h| new_site.iter().any(|&c| c.abs() > h))
                            .unwrap_or(false);
                    (dt_step, Position::Lattice(new_site), slope * dt_step, exited)
                }
                (Position::Lattice(_), _) => {
                    return Err(Error::InvalidParameter(
                        "real-valued catalyst with lattice motion".into(),
                    ))
                }
            };

            // clip the K budget at a K-level stop
            let mut k_end = clock + dk;
            let mut k_frozen = false;
            if let Some(km) = stops.k_max {
                if k_end >= km {
                    k_end = km;
                    k_frozen = true;
                }
            }
            let t_end = if dk > 0.0 && k_frozen {
                t + dt_step * (k_end - clock) / dk
            } else {
                t + dt_step
            };

            // branch cascade on the K interval [clock, k_end]
            let threshold = pop.particles[i].next_threshold;
            pending.clear();
            survivors.clear();
            pending.push((pop.particles[i].birth_clock, threshold));
            while let Some((birth_c, th)) = pending.pop() {
                if th > k_end {
                    survivors.push((birth_c, th));
                    continue;
                }
                budget += 1;
                if budget > prm.guard {
                    return Err(Error::ExplosionGuard { steps: budget as u64, cap: prm.guard as u64 });
                }
                if prm.record_spans {
                    pop.spans.push(ClockSpan { birth_clock: birth_c, end_clock: th, frozen: false });
                }
                if rng.gen::<bool>() {
                    // split: both children restart the clock interval at th
                    let e1: f64 = Exp1.sample(rng);
                    let e2: f64 = Exp1.sample(rng);
                    pending.push((th, th + e1 * rate_mean));
                    pending.push((th, th + e2 * rate_mean));
                }
            }

            if survivors.is_empty() {
                // whole in-step lineage died
                kill(&mut pop, i, t_end, prm);
                end_time = end_time.max(t_end);
                break 'life;
            }

            // first survivor continues in place
            let (birth_c0, th0) = survivors[0];
            {
                let p = &mut pop.particles[i];
                p.time = t_end;
                p.position = new_pos.clone();
                p.clock = k_end;
                p.birth_clock = birth_c0;
                p.next_threshold = th0;
            }
            let (parent_id, birth_time) = {
                let p = &pop.particles[i];
                (p.id, p.time)
            };
            for &(birth_c, th) in &survivors[1..] {
                let id = pop.next_id;
                pop.next_id += 1;
                let child = Particle {
                    id,
                    parent: Some(parent_id),
                    birth_time,
                    time: t_end,
                    position: new_pos.clone(),
                    clock: k_end,
                    birth_clock: birth_c,
                    next_threshold: th,
                    fate: Fate::Alive,
                };
                let idx = if let (false, Some(slot)) = (prm.keep_dead, pop.free_slots.pop()) {
                    pop.particles[slot] = child;
                    slot
                } else {
                    pop.particles.push(child);
                    pop.particles.len() - 1
                };
                work.push(idx);
            }

            if k_frozen || exited {
                freeze(&mut pop, i, t_end, prm);
                end_time = end_time.max(t_end);
                break 'life;
            }
        }
    }
    pop.time = end_time.max(pop.time);
    Ok(pop)
}

fn freeze(pop: &mut Population, i: usize, at: f64, prm: &EvolveParams) {
    let p = &mut pop.particles[i];
    p.time = at;
    p.fate = Fate::Frozen;
    if prm.record_spans {
        pop.spans.push(ClockSpan {
            birth_clock: p.birth_clock,
            end_clock: p.clock,
            frozen: true,
        });
    }
}

fn kill(pop: &mut Population, i: usize, at: f64, prm: &EvolveParams) {
    let p = &mut pop.particles[i];
    p.time = at;
    p.fate = Fate::Died;
    if !prm.keep_dead {
        pop.free_slots.push(i);
    }
}
