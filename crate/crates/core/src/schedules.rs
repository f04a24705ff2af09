//! Stage-quantity schedules: closed-form arrays (T_n, M_n, xi_n, delta_n,
//! lambda_n) for the three model families, plus the numeric check of the
//! vanishing-sum condition.

use crate::{Error, Result};

/// Stage start descriptor. Lattice stages are additionally capped by the
/// first exit from the level-n region; the nominal value is the fixed part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageStart {
    pub nominal: f64,
    /// Some(n): the stage also ends on exit from the level-n region
    pub exit_region_level: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct StageSchedule {
    pub model: &'static str,
    pub epsilon: f64,
    pub n_start: u32,
    pub n: Vec<u32>,
    pub t: Vec<StageStart>,
    pub m: Vec<f64>,
    pub xi: Vec<f64>,
    pub delta: Vec<f64>,
    pub lambda: Vec<f64>,
    /// delta_{N-1}
    pub delta_prev: f64,
    /// xi_{N-1} (lattice model only)
    pub xi_prev: Option<f64>,
    pub t_infinity: f64,
    /// geometric bound on the series mass dropped by the n_max truncation
    pub truncation_tail: f64,
}

impl StageSchedule {
    fn finish(mut self) -> Result<Self> {
        assert_eq!(self.n.len(), self.t.len());
        assert_eq!(self.n.len(), self.m.len());
        assert_eq!(self.n.len(), self.xi.len());
        assert_eq!(self.n.len(), self.delta.len());
        assert_eq!(self.n.len(), self.lambda.len());
        // equality allowed: late-stage increments can fall below one ulp
        for w in self.t.windows(2) {
            assert!(w[1].nominal >= w[0].nominal, "stage starts decreasing");
        }
        for w in self.m.windows(2) {
            assert!(w[1] <= w[0], "M_n not non-increasing");
        }
        for (((&m, &xi), &d), &l) in
            self.m.iter().zip(&self.xi).zip(&self.delta).zip(&self.lambda)
        {
            assert!(m > 0.0 && xi > 0.0 && d > 0.0 && l > 0.0);
        }
        let k = self.n.len();
        let last = self.delta[k - 1] + self.lambda[k - 1];
        let prev = self.delta[k - 2] + self.lambda[k - 2];
        let ratio = last / prev;
        self.truncation_tail = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { f64::INFINITY };
        Ok(self)
    }

    /// delta_{N-1} + sum over the tabulated stages of (delta_n + lambda_n)
    pub fn condition_sum(&self) -> f64 {
        self.delta_prev
            + self
                .delta
                .iter()
                .zip(&self.lambda)
                .map(|(d, l)| d + l)
                .sum::<f64>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,t_n,m_n,xi_n,delta_n,lambda_n\n");
        for i in 0..self.n.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.n[i], self.t[i].nominal, self.m[i], self.xi[i], self.delta[i], self.lambda[i]
            ));
        }
        out
    }
}

pub const DEFAULT_N_MAX: u32 = 60;

/// Parabolic-density model: thinning widths theta_n = e^{-alpha n}, stage
/// lengths t_n = e^{-beta n}/epsilon.
pub fn parabolic_schedule(
    alpha: f64,
    beta: f64,
    q: f64,
    epsilon: f64,
    c0: f64,
    n_max: u32,
) -> Result<StageSchedule> {
    if !(alpha > 0.0 && beta > 0.0 && beta < 2.0 * alpha) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < beta < 2 alpha, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(q > 0.0 && epsilon > 0.0 && epsilon < 1.0 && c0 > 0.0 && n_max >= 2) {
        return Err(Error::InvalidParameter("parabolic schedule parameter out of range".into()));
    }
    let rate = 1.0 + beta + alpha * q;
    let mut s = StageSchedule {
        model: "parabolic",
        epsilon,
        n_start: 0,
        n: Vec::new(),
        t: Vec::new(),
        m: Vec::new(),
        xi: Vec::new(),
        delta: Vec::new(),
        lambda: Vec::new(),
        delta_prev: epsilon,
        xi_prev: None,
        t_infinity: 1.0 / (epsilon * (1.0 - (-beta).exp())),
        truncation_tail: 0.0,
    };
    let mut t_acc = 0.0;
    for n in 0..n_max {
        let nf = n as f64;
        let theta = (-alpha * nf).exp();
        let m = (-rate * nf).exp();
        let t_len = (-beta * nf).exp() / epsilon;
        let xi = 0.5 * t_len * theta.powf(q);
        let delta = m / xi;
        let lambda = rate.exp() * (-c0 * t_len / (theta * theta)).exp();
        s.n.push(n);
        s.t.push(StageStart { nominal: t_acc, exit_region_level: None });
        s.m.push(m);
        s.xi.push(xi);
        s.delta.push(delta);
        s.lambda.push(lambda.max(f64::MIN_POSITIVE));
        t_acc += t_len;
    }
    s.finish()
}

/// Dense-point catalyst model: m_n target points per stage, point spacing
/// scale Delta_n, per-point time budget s_n.
#[allow(clippy::too_many_arguments)]
pub fn dense_point_schedule(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    n_start: u32,
    a: f64,
    c0: f64,
    c1: f64,
    n_max: u32,
) -> Result<StageSchedule> {
    if !(beta > 0.0 && beta < 1.0 && alpha > beta / 2.0 && alpha < beta) {
        return Err(Error::InvalidParameter(format!(
            "need beta in (0,1) and alpha in (beta/2, beta), got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 && a > 0.0 && c0 > 0.0 && c1 > 0.0 && n_max >= n_start + 2)
    {
        return Err(Error::InvalidParameter("dense-point schedule parameter out of range".into()));
    }
    let mut s = StageSchedule {
        model: "dense_point",
        epsilon,
        n_start,
        n: Vec::new(),
        t: Vec::new(),
        m: Vec::new(),
        xi: Vec::new(),
        delta: Vec::new(),
        lambda: Vec::new(),
        delta_prev: epsilon,
        xi_prev: None,
        t_infinity: 0.0,
        truncation_tail: 0.0,
    };
    let mut t_acc = 0.0;
    for n in n_start..n_max {
        let nf = n as f64;
        let m_count = ((alpha * nf).exp() / epsilon).floor();
        assert!(m_count >= 1.0);
        let s_n = (-beta * nf).exp() / (epsilon * epsilon);
        let t_len = 2.0 * m_count * s_n;
        let m = (-nf).exp2();
        let delta_scale = (-beta * nf).exp();
        let zeta = m_count / c0 * (-c0 * s_n / (delta_scale * delta_scale)).exp();
        let xi = a * m_count * s_n.sqrt() * m;
        let delta = m / xi;
        let lambda = 2.0 * (zeta + (-2.0 * c1 * m_count).exp());
        s.n.push(n);
        s.t.push(StageStart { nominal: t_acc, exit_region_level: None });
        s.m.push(m);
        s.xi.push(xi);
        s.delta.push(delta);
        s.lambda.push(lambda.max(f64::MIN_POSITIVE));
        t_acc += t_len;
    }
    s.t_infinity = t_acc;
    s.finish()
}

/// Lattice super-random-walk model; stage ends are additionally capped by
/// the exit time from the level-(n+1) region.
pub fn lattice_schedule(n_start: u32, d: u32, alpha_hat: f64, n_max: u32) -> Result<StageSchedule> {
    if n_start < 1 || d < 1 || !(alpha_hat > 0.0) || n_max < n_start + 2 {
        return Err(Error::InvalidParameter("lattice schedule parameter out of range".into()));
    }
    let df = d as f64;
    let mut s = StageSchedule {
        model: "lattice",
        epsilon: (-(n_start as f64) / 4.0).exp2(),
        n_start,
        n: Vec::new(),
        t: Vec::new(),
        m: Vec::new(),
        xi: Vec::new(),
        delta: Vec::new(),
        lambda: Vec::new(),
        delta_prev: (-(n_start as f64) / 4.0).exp2(),
        xi_prev: Some(alpha_hat / 6.0 * (n_start as f64 / 2.0).exp2()),
        t_infinity: 0.0,
        truncation_tail: 0.0,
    };
    let mut t_acc = (n_start as f64).exp2() / 6.0;
    for n in n_start..n_max {
        let nf = n as f64;
        let xi = (-nf * (df + 2.0)).exp2();
        // double-exponential tail underflows past n = 10; clamp for the
        // positivity invariant, the sum is unaffected at binary64
        let lambda = if nf.exp2() < 1074.0 { (-nf.exp2()).exp2() } else { f64::MIN_POSITIVE };
        s.n.push(n);
        s.t.push(StageStart { nominal: t_acc, exit_region_level: Some(n + 1) });
        s.m.push((-nf * (df + 3.0)).exp2());
        s.xi.push(xi);
        s.delta.push((-nf).exp2());
        s.lambda.push(lambda);
        t_acc += (-nf).exp2();
    }
    s.t_infinity = t_acc;
    s.finish()
}

#[derive(Debug, Clone)]
pub struct HypothesisEntry {
    pub epsilon: f64,
    pub m_vanishing: bool,
    pub b2_sum: f64,
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub entries: Vec<HypothesisEntry>,
    /// fitted order of the b2 sum in epsilon (slope of ln sum vs ln eps)
    pub decay_order: f64,
    pub pass: bool,
}

/// Check (b1) vanishing M_n and (b2) sums shrinking as epsilon decreases,
/// across a family of schedules for different epsilon.
pub fn verify_hypothesis_b(schedules: &[StageSchedule]) -> Result<HypothesisReport> {
    if schedules.len() < 2 {
        return Err(Error::InvalidParameter("need at least two epsilon values".into()));
    }
    let mut entries: Vec<HypothesisEntry> = schedules
        .iter()
        .map(|s| {
            let m_vanishing = s.m.windows(2).all(|w| w[1] <= w[0])
                && *s.m.last().unwrap() < 1e-9;
            HypothesisEntry { epsilon: s.epsilon, m_vanishing, b2_sum: s.condition_sum() }
        })
        .collect();
    entries.sort_by(|a, b| b.epsilon.partial_cmp(&a.epsilon).unwrap());
    let divergent = entries.iter().any(|e| !e.b2_sum.is_finite());
    let shrinking = entries.windows(2).all(|w| w[1].b2_sum < w[0].b2_sum);
    let xs: Vec<f64> = entries.iter().map(|e| e.epsilon.ln()).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.b2_sum.max(f64::MIN_POSITIVE).ln()).collect();
    let (_, slope, _) = crate::stats::linear_fit(&xs, &ys);
    let pass = !divergent && shrinking && entries.iter().all(|e| e.m_vanishing);
    Ok(HypothesisReport { entries, decay_order: slope, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabolic_stage_zero_values() {
        let s = parabolic_schedule(1.0, 1.0, 2.0, 0.5, 1.0, 30).unwrap();
        assert_eq!(s.m[0], 1.0);
        assert_eq!(s.t[0].nominal, 0.0);
        assert_eq!(s.xi[0], 1.0); // t_0 = 2, theta_0 = 1
        assert_eq!(s.delta[0], 1.0);
        assert_eq!(s.t[1].nominal, 2.0);
        assert!((s.t_infinity - 2.0 / (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((s.t_infinity - 3.1639).abs() < 1e-3);
        assert_eq!(s.delta_prev, 0.5);
    }

    #[test]
    fn parabolic_sum_is_epsilon_linear() {
        let s1 = parabolic_schedule(1.0, 1.0, 2.0, 0.1, 1.0, DEFAULT_N_MAX).unwrap();
        let s2 = parabolic_schedule(1.0, 1.0, 2.0, 0.05, 1.0, DEFAULT_N_MAX).unwrap();
        let sum1: f64 = s1.delta.iter().zip(&s1.lambda).map(|(d, l)| d + l).sum();
        let sum2: f64 = s2.delta.iter().zip(&s2.lambda).map(|(d, l)| d + l).sum();
        let ratio = sum1 / sum2;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn parabolic_rejects_bad_beta() {
        assert!(parabolic_schedule(1.0, 2.5, 2.0, 0.5, 1.0, 30).is_err());
        assert!(parabolic_schedule(1.0, 0.0, 2.0, 0.5, 1.0, 30).is_err());
    }

    #[test]
    fn dense_point_mass_halves_each_stage() {
        let s = dense_point_schedule(0.4, 0.5, 0.5, 1, 0.4, 1.0, 0.1, 40).unwrap();
        for w in s.m.windows(2) {
            assert_eq!(w[0] / w[1], 2.0);
        }
        assert_eq!(s.delta_prev, 0.5);
    }

    #[test]
    fn dense_point_zeta_locked_value() {
        // c0 = 1, eps = 0.5, beta = 0.5, n = 2: m_2 = floor(e^{0.8}/0.5) = 4,
        // s_2 = e^{-1}/0.25, Delta_2 = e^{-1}, zeta_2 = 4 exp(-s_2/Delta_2^2)
        let s = dense_point_schedule(0.4, 0.5, 0.5, 1, 0.4, 1.0, 0.1, 40).unwrap();
        let m2 = ((0.8f64).exp() / 0.5).floor();
        let s2 = (-1.0f64).exp() / 0.25;
        let d2 = (-1.0f64).exp();
        let zeta2 = m2 * (-s2 / (d2 * d2)).exp();
        let idx = s.n.iter().position(|&n| n == 2).unwrap();
        let lambda2 = 2.0 * (zeta2 + (-2.0 * 0.1 * m2).exp());
        assert!((s.lambda[idx] - lambda2).abs() < 1e-15 * lambda2);
        assert!((zeta2 - 7.584392461686766e-5).abs() < 1e-18, "zeta_2 = {zeta2}");
    }

    #[test]
    fn dense_point_delta_decay_exponent() {
        let (alpha, beta) = (0.4, 0.5);
        let s = dense_point_schedule(alpha, beta, 0.2, 1, 0.4, 1.0, 0.1, 40).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..s.n.len() {
            if (5..=15).contains(&s.n[i]) {
                xs.push(s.n[i] as f64);
                ys.push(s.delta[i].ln());
            }
        }
        let (_, slope, r2) = crate::stats::linear_fit(&xs, &ys);
        let target = -(alpha - beta / 2.0);
        // m_n floor rounding perturbs the pure exponent slightly
        assert!((slope - target).abs() < 0.05 * target.abs(), "slope {slope} vs {target}");
        assert!(r2 > 0.99);
    }

    #[test]
    fn dense_point_rejects_bad_ranges() {
        assert!(dense_point_schedule(0.6, 0.5, 0.5, 1, 0.4, 1.0, 0.1, 40).is_err());
        assert!(dense_point_schedule(0.2, 0.5, 0.5, 1, 0.4, 1.0, 0.1, 40).is_err());
        assert!(dense_point_schedule(0.6, 1.5, 0.5, 1, 0.4, 1.0, 0.1, 40).is_err());
    }

    #[test]
    fn lattice_values_and_identities() {
        let s = lattice_schedule(2, 1, 0.05, 30).unwrap();
        let idx = s.n.iter().position(|&n| n == 4).unwrap();
        assert_eq!(s.m[idx], (2.0f64).powi(-16));
        assert_eq!(s.xi[idx], (2.0f64).powi(-12));
        for i in 0..s.n.len() {
            assert_eq!(s.delta[i], s.m[i] / s.xi[i]);
            assert_eq!(s.t[i].exit_region_level, Some(s.n[i] + 1));
        }
        assert_eq!(s.t[0].nominal, 4.0 / 6.0);
        assert_eq!(s.xi_prev, Some(0.05 / 6.0 * 2.0));
        assert_eq!(s.delta_prev, (2.0f64).powf(-0.5));
    }

    #[test]
    fn lattice_tail_sum_bound() {
        for n_start in 2..8u32 {
            let s = lattice_schedule(n_start, 2, 0.05, 50).unwrap();
            let sum: f64 = s.delta.iter().zip(&s.lambda).map(|(d, l)| d + l).sum();
            let bound = (2.0f64).powi(2 - n_start as i32);
            assert!(sum <= bound, "N = {n_start}: {sum} > {bound}");
        }
    }

    #[test]
    fn hypothesis_b_report() {
        let fam: Vec<StageSchedule> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| parabolic_schedule(1.0, 1.0, 2.0, e, 1.0, DEFAULT_N_MAX).unwrap())
            .collect();
        let rep = verify_hypothesis_b(&fam).unwrap();
        assert!(rep.pass);
        for w in rep.entries.windows(2) {
            assert!(w[1].b2_sum < w[0].b2_sum);
        }
        // at least linear in epsilon; lambda_0 decays faster at large eps
        assert!(rep.decay_order >= 0.9, "order {}", rep.decay_order);
        // M_n vanish below 1e-9 by n_max
        assert!(fam.iter().all(|s| *s.m.last().unwrap() < 1e-9));
        assert!(verify_hypothesis_b(&fam[..1]).is_err());
    }

    #[test]
    fn broken_family_is_flagged() {
        let mut good = parabolic_schedule(1.0, 1.0, 2.0, 0.2, 1.0, 30).unwrap();
        good.m.iter_mut().for_each(|m| *m = 0.5); // M_n no longer vanishing
        let other = parabolic_schedule(1.0, 1.0, 2.0, 0.1, 1.0, 30).unwrap();
        let rep = verify_hypothesis_b(&[good, other]).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn truncation_tail_reported() {
        let s = parabolic_schedule(1.0, 1.0, 2.0, 0.5, 1.0, 30).unwrap();
        assert!(s.truncation_tail.is_finite() && s.truncation_tail > 0.0);
        // geometric remainder dominates the true dropped mass
        let s_long = parabolic_schedule(1.0, 1.0, 2.0, 0.5, 1.0, 60).unwrap();
        let dropped = s_long.condition_sum() - s.condition_sum();
        assert!(dropped <= s.truncation_tail * 1.0001 + 1e-18);
    }
}
