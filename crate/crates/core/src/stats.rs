//! Small statistics helpers used by the experiments and the checks they
//! report: sample mean with standard error, jackknife variance estimates,
//! a two-sample Kolmogorov-Smirnov test, and least-squares line fitting.

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Sample variance (unbiased) together with a jackknife standard error for
/// the variance itself.
pub fn variance_jackknife(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 3, "need at least three samples");
    let nf = n as f64;
    let sum: f64 = xs.iter().sum();
    let sumsq: f64 = xs.iter().map(|x| x * x).sum();
    let var = (sumsq - sum * sum / nf) / (nf - 1.0);

    // Leave-one-out variances in O(n) via the sufficient statistics.
    let mut pseudo = Vec::with_capacity(n);
    for &x in xs {
        let s1 = sum - x;
        let s2 = sumsq - x * x;
        let v_i = (s2 - s1 * s1 / (nf - 1.0)) / (nf - 2.0);
        pseudo.push(nf * var - (nf - 1.0) * v_i);
    }
    let (_, se) = mean_se(&pseudo);
    (var, se)
}

/// Asymptotic Kolmogorov distribution tail Q(x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..101 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
///
/// Ties (including atoms at zero) are handled by stepping both empirical
/// CDFs past the tied value before comparing, which is the standard
/// convention and slightly conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        let fa = i as f64 / na as f64;
        let fb = j as f64 / nb as f64;
        d = d.max((fa - fb).abs());
    }
    let ne = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    let p = kolmogorov_tail(ne.sqrt() * d);
    (d, p)
}

/// Least-squares fit y = a + b x. Returns (intercept, slope, r_squared).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2);
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for k in 0..n {
        let dx = x[k] - mx;
        let dy = y[k] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    assert!(sxx > 0.0, "degenerate abscissae");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (intercept, slope, r2)
}

/// Abramowitz-Stegun 7.1.26 rational approximation of erf, |err| < 1.5e-7.
pub fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}
