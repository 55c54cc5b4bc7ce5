//! Polynomial roots by Aberth–Ehrlich simultaneous iteration, with Newton
//! polishing and multiplicity clustering.

use num_complex::Complex64;

use crate::defaults::CLUSTER_TOL;

const MAX_ITER: usize = 500;

/// `p(z)` and `p′(z)` for ascending coefficients.
fn eval_with_deriv(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &a in p.iter().rev() {
        d = d * z + v;
        v = v * z + a;
    }
    (v, d)
}

/// Newton correction `p/p′`, evaluated on the reversed polynomial when
/// `|z| > 1` to avoid overflow.
fn newton_ratio(p: &[Complex64], z: Complex64) -> Complex64 {
    if z.norm() <= 1.0 {
        let (v, d) = eval_with_deriv(p, z);
        return v / d;
    }
    let n = (p.len() - 1) as f64;
    let y = z.inv();
    let mut q = Complex64::new(0.0, 0.0);
    let mut dq = Complex64::new(0.0, 0.0);
    for &a in p.iter() {
        dq = dq * y + q;
        q = q * y + a;
    }
    // p/p′ = 1 / (y (n - y q′/q)).
    (y * (n - y * dq / q)).inv()
}

/// All roots of `Σ p_k z^k`; leading coefficient must be nonzero.
pub fn aberth(p: &[Complex64]) -> Vec<Complex64> {
    let deg = p.len().saturating_sub(1);
    match deg {
        0 => return vec![],
        1 => return vec![-p[0] / p[1]],
        _ => {}
    }
    let lead = p[deg].norm();
    // Start on a circle of radius (|p0|/|pn|)^{1/n}, bounded by Cauchy's bound.
    let cauchy = 1.0 + p[..deg].iter().map(|a| a.norm() / lead).fold(0.0, f64::max);
    let mut radius = (p[0].norm() / lead).powf(1.0 / deg as f64);
    if !(radius > 0.0) || !radius.is_finite() {
        radius = 1.0;
    }
    let radius = radius.min(cauchy);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / deg as f64 + 0.4))
        .collect();
    let mut done = vec![false; deg];
    for _ in 0..MAX_ITER {
        let mut all = true;
        for i in 0..deg {
            if done[i] {
                continue;
            }
            let ratio = newton_ratio(p, z[i]);
            let sum: Complex64 = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (1.0 - ratio * sum);
            if !(step.re.is_finite() && step.im.is_finite()) {
                done[i] = true;
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

/// A root with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RootCluster {
    pub z: Complex64,
    pub multiplicity: usize,
}

/// Groups roots closer than `tol·max(1, |z|)` (single linkage) and replaces
/// each group by its mean.
pub fn cluster(roots: &[Complex64], tol: f64) -> Vec<RootCluster> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() <= tol * roots[i].norm().max(1.0) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for (i, &z) in roots.iter().enumerate() {
        let root = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == root) {
            Some(g) => {
                g.1 += z;
                g.2 += 1;
            }
            None => groups.push((root, z, 1)),
        }
    }
    groups.into_iter().map(|(_, s, m)| RootCluster { z: s / m as f64, multiplicity: m }).collect()
}

/// Drops trailing (highest-degree) coefficients below `floor·max|p_k|`.
pub fn trim_high(p: &[Complex64], floor: f64) -> &[Complex64] {
    let max = p.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut end = p.len();
    while end > 0 && p[end - 1].norm() <= floor * max {
        end -= 1;
    }
    &p[..end]
}

/// Roots with multiplicities: Aberth on the trimmed polynomial, Newton
/// polish of simple roots, clustering at `CLUSTER_TOL`.
pub fn roots_with_multiplicity(p: &[Complex64], floor: f64) -> Vec<RootCluster> {
    let p = trim_high(p, floor);
    let mut raw = aberth(p);
    let mut clusters = cluster(&raw, CLUSTER_TOL);
    if clusters.iter().all(|c| c.multiplicity == 1) {
        for z in raw.iter_mut() {
            for _ in 0..3 {
                let step = newton_ratio(p, *z);
                if step.re.is_finite() && step.im.is_finite() {
                    *z -= step;
                }
            }
        }
        clusters = cluster(&raw, CLUSTER_TOL);
    }
    clusters
}
