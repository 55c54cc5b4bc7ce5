//! The discriminant `d(w,t) = c̄′(t)w² + 2r′(t)w + c′(t)` of a chain, the
//! discriminant set `S` of inner-root images `c(t) + r(t)w`, and the
//! connectivity test between the chain endpoints at resolution ε.

use num_complex::Complex64;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::defaults::{DOUBLE_ROOT_TOL, EPSILON_FLOOR, LINEAR_LEADING_TOL, ROOT_CIRCLE_TOL};

/// Neighbouring inner roots within this distance make an on-circle root a
/// limit point of `S`.
const LIMIT_MATCH: f64 = 0.05;

pub fn discriminant_eval(dc: Complex64, dr: f64, w: Complex64) -> Complex64 {
    dc.conj() * w * w + 2.0 * dr * w + dc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootClass {
    /// `|c′| ≥ |r′|`: both roots have unit modulus.
    BothOnCircle,
    /// One root strictly inside the unit circle, the other outside (or at
    /// infinity when the quadratic degenerates to a linear equation).
    InnerOuter,
    /// `c′ = 0`, `r′ ≠ 0`: the single root `w = 0`.
    DoubleZero,
    /// `c′ = 0` and `r′ = 0`.
    IdenticallyZero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootReport {
    pub roots: Vec<Complex64>,
    pub class: RootClass,
}

impl RootReport {
    /// The root with `|w| < 1 - tol`, if any.
    pub fn inner(&self) -> Option<Complex64> {
        match self.class {
            RootClass::DoubleZero => Some(Complex64::new(0.0, 0.0)),
            RootClass::InnerOuter => self.roots.iter().copied().find(|w| w.norm() < 1.0 - ROOT_CIRCLE_TOL),
            _ => None,
        }
    }

    /// True when the two roots coincide.
    pub fn is_double(&self) -> bool {
        match self.roots.as_slice() {
            [_] => self.class == RootClass::DoubleZero,
            [w1, w2] => (w1 - w2).norm() < DOUBLE_ROOT_TOL,
            _ => false,
        }
    }
}

/// Roots of `d(·,t)` for given `c′`, `r′`, with cancellation-free formulas.
pub fn discriminant_roots(dc: Complex64, dr: f64) -> RootReport {
    let (mc, mr) = (dc.norm(), dr.abs());
    if mc == 0.0 && mr == 0.0 {
        return RootReport { roots: vec![], class: RootClass::IdenticallyZero };
    }
    if mc == 0.0 {
        return RootReport { roots: vec![Complex64::new(0.0, 0.0)], class: RootClass::DoubleZero };
    }
    if mc < LINEAR_LEADING_TOL * mr {
        return RootReport { roots: vec![-dc / (2.0 * dr)], class: RootClass::InnerOuter };
    }
    let lead = dc.conj();
    // Quarter of the discriminant B² - 4AC; real because AC = |c′|².
    let quarter = dr * dr - mc * mc;
    if quarter <= ROOT_CIRCLE_TOL * ROOT_CIRCLE_TOL * (dr * dr).max(mc * mc) {
        let w = if quarter.abs() <= DOUBLE_ROOT_TOL * DOUBLE_ROOT_TOL * mc * mc {
            let w = Complex64::new(-dr, 0.0) / lead;
            return RootReport { roots: vec![w, w], class: RootClass::BothOnCircle };
        } else {
            (-quarter).sqrt()
        };
        let roots = vec![Complex64::new(-dr, w) / lead, Complex64::new(-dr, -w) / lead];
        return RootReport { roots, class: RootClass::BothOnCircle };
    }
    let q = -(dr + dr.signum() * quarter.sqrt());
    let big = Complex64::new(q, 0.0) / lead;
    let small = dc / q;
    RootReport { roots: vec![small, big], class: RootClass::InnerOuter }
}

/// Inner root of `d(·,t)`: `0` when `c′ = 0`, absent when both roots lie on
/// the unit circle or the discriminant vanishes identically (reported in the
/// returned class).
pub fn inner_root(dc: Complex64, dr: f64) -> (Option<Complex64>, RootClass) {
    let report = discriminant_roots(dc, dr);
    (report.inner(), report.class)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CloudPoint {
    pub t: f64,
    /// Root of the discriminant in the normalized coordinate.
    pub w: Complex64,
    /// Image `c(t) + r(t)·w`.
    pub s: Complex64,
    /// The root lies on the unit circle and was added by the closure rule.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub id: usize,
    pub size: usize,
    pub centroid: Complex64,
    pub diameter: f64,
}

/// Sampled discriminant set with ε-graph components.
#[derive(Clone, Debug, Serialize)]
pub struct DiscriminantCloud {
    pub points: Vec<CloudPoint>,
    pub epsilon: f64,
    /// Component label per point, labels `0..n_components`.
    pub labels: Vec<usize>,
    pub n_components: usize,
    /// Grid parameters where the discriminant vanished identically.
    pub skipped: Vec<f64>,
}

impl DiscriminantCloud {
    pub fn from_points(points: Vec<CloudPoint>, skipped: Vec<f64>, epsilon: Option<f64>) -> Self {
        let epsilon = epsilon.unwrap_or_else(|| default_epsilon(&points));
        let (labels, n_components) = label_components(&points, epsilon);
        DiscriminantCloud { points, epsilon, labels, n_components, skipped }
    }

    /// Relabels the components at a new resolution.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        let (labels, n) = label_components(&self.points, epsilon);
        self.epsilon = epsilon;
        self.labels = labels;
        self.n_components = n;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn component(&self, id: usize) -> impl Iterator<Item = &CloudPoint> {
        self.points.iter().zip(&self.labels).filter(move |(_, &l)| l == id).map(|(p, _)| p)
    }

    pub fn components(&self) -> Vec<ComponentSummary> {
        (0..self.n_components)
            .map(|id| {
                let pts: Vec<Complex64> = self.component(id).map(|p| p.s).collect();
                let centroid = pts.iter().sum::<Complex64>() / pts.len() as f64;
                let mut diameter = 0.0f64;
                for (i, p) in pts.iter().enumerate() {
                    for q in &pts[i + 1..] {
                        diameter = diameter.max((p - q).norm());
                    }
                }
                ComponentSummary { id, size: pts.len(), centroid, diameter }
            })
            .collect()
    }

    /// Distance from `z` to the nearest cloud point.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.points.iter().map(|p| (p.s - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Twice the 90th percentile of consecutive (in t) distances, floored.
fn default_epsilon(points: &[CloudPoint]) -> f64 {
    let scale = 1.0 + points.iter().map(|p| p.s.norm()).fold(0.0, f64::max);
    let floor = EPSILON_FLOOR * scale;
    if points.len() < 2 {
        return floor;
    }
    let mut gaps: Vec<f64> = points.windows(2).map(|w| (w[1].s - w[0].s).norm()).collect();
    gaps.sort_by(f64::total_cmp);
    let idx = ((gaps.len() as f64 * 0.9).ceil() as usize).clamp(1, gaps.len()) - 1;
    (2.0 * gaps[idx]).max(floor)
}

/// Connected components of the graph joining points closer than `epsilon`.
fn label_components(points: &[CloudPoint], epsilon: f64) -> (Vec<usize>, usize) {
    let n = points.len();
    let mut uf = UnionFind::<usize>::new(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| points[i].s.re.total_cmp(&points[j].s.re));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j].s.re - points[i].s.re > epsilon {
                break;
            }
            if (points[j].s - points[i].s).norm() <= epsilon {
                uf.union(i, j);
            }
        }
    }
    let roots = uf.into_labeling();
    let mut ids = std::collections::HashMap::new();
    let labels = roots
        .iter()
        .map(|r| {
            let next = ids.len();
            *ids.entry(*r).or_insert(next)
        })
        .collect();
    (labels, ids.len())
}

/// Samples `S` on `t_grid`. Inner roots always contribute; roots on the
/// unit circle contribute when double or when a neighbouring grid point has
/// an inner root nearby (limit points of the inner-root images).
pub fn discriminant_set(chain: &ChainSpec, t_grid: &[f64]) -> DiscriminantCloud {
    discriminant_set_with(chain, t_grid, None)
}

pub fn discriminant_set_with(chain: &ChainSpec, t_grid: &[f64], epsilon: Option<f64>) -> DiscriminantCloud {
    // Only a branch junction is dropped: at an interior stop of a smooth chain
    // the roots still have limits, and dropping the window would split `S`.
    let keep = |t: f64| t > 0.0 && t < 1.0 && !(chain.is_two_branch() && chain.is_excluded(t));
    let mut ts: Vec<f64> = t_grid.iter().copied().filter(|&t| keep(t)).collect();
    ts.sort_by(f64::total_cmp);
    let reports: Vec<RootReport> = ts
        .par_iter()
        .map(|&t| {
            let (dc, dr) = chain.derivatives(t);
            discriminant_roots(dc, dr)
        })
        .collect();
    let inner: Vec<Option<Complex64>> = reports.iter().map(RootReport::inner).collect();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (i, (&t, report)) in ts.iter().zip(&reports).enumerate() {
        let (c, r) = (chain.center(t), chain.radius(t));
        let mut push = |w: Complex64, boundary: bool| points.push(CloudPoint { t, w, s: c + w * r, boundary });
        match report.class {
            RootClass::IdenticallyZero => skipped.push(t),
            RootClass::DoubleZero | RootClass::InnerOuter => {
                if let Some(w) = inner[i] {
                    push(w, false);
                }
            }
            RootClass::BothOnCircle if report.is_double() => push(report.roots[0], true),
            RootClass::BothOnCircle => {
                let neighbours = [i.checked_sub(1), Some(i + 1)];
                for &w in &report.roots {
                    let is_limit = neighbours
                        .iter()
                        .flatten()
                        .filter_map(|&j| inner.get(j).copied().flatten())
                        .any(|v| (v - w).norm() < LIMIT_MATCH);
                    if is_limit {
                        push(w, true);
                    }
                }
            }
        }
    }
    DiscriminantCloud::from_points(points, skipped, epsilon)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarReport {
    /// No ε-component reaches both endpoints.
    pub holds: bool,
    pub epsilon: f64,
    pub n_components: usize,
    /// A component touching both endpoints, when the condition fails.
    pub witness: Option<usize>,
}

/// Discretized connectivity test: holds iff no ε-connected component of the
/// cloud has points within ε of both `a` and `b`.
pub fn condition_star(cloud: &DiscriminantCloud, a: Complex64, b: Complex64, epsilon: f64) -> StarReport {
    let relabeled;
    let cloud = if cloud.epsilon == epsilon {
        cloud
    } else {
        relabeled = cloud.clone().with_epsilon(epsilon);
        &relabeled
    };
    let touches = |id: usize, z: Complex64| cloud.component(id).any(|p| (p.s - z).norm() <= epsilon);
    let witness = (0..cloud.n_components).find(|&id| touches(id, a) && touches(id, b));
    StarReport { holds: witness.is_none(), epsilon, n_components: cloud.n_components, witness }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `|c′| > |r′|` and no circle strictly inside another.
    NoregularEligible,
    MainOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// First grid parameter where `|c′| ≤ |r′|`.
    pub speed_violation: Option<f64>,
    /// A pair `(t, s)` with one circle strictly inside the other.
    pub enclosure_violation: Option<(f64, f64)>,
}

/// Decides whether the chain qualifies for the regularity-free variant:
/// `|c′(t)| > |r′(t)|` on the grid and no pairwise strict enclosure.
pub fn classify_chain(chain: &ChainSpec, t_grid: &[f64]) -> RegimeReport {
    let ts: Vec<f64> = t_grid.iter().copied().filter(|&t| t > 0.0 && t < 1.0).collect();
    let speed_violation = ts.iter().copied().find(|&t| {
        let (dc, dr) = chain.derivatives(t);
        dc.norm() <= dr.abs()
    });
    let enclosure_violation = if speed_violation.is_none() { find_enclosure(chain, &ts) } else { None };
    let regime = if speed_violation.is_none() && enclosure_violation.is_none() {
        Regime::NoregularEligible
    } else {
        Regime::MainOnly
    };
    RegimeReport { regime, speed_violation, enclosure_violation }
}

/// Margin `|c_t - c_s| + min(r) - max(r)`; negative means strict enclosure.
fn enclosure_margin(chain: &ChainSpec, t: f64, s: f64) -> f64 {
    let (rt, rs) = (chain.radius(t), chain.radius(s));
    (chain.center(t) - chain.center(s)).norm() + rt.min(rs) - rt.max(rs)
}

fn find_enclosure(chain: &ChainSpec, ts: &[f64]) -> Option<(f64, f64)> {
    let geo: Vec<(Complex64, f64)> = ts.iter().map(|&t| (chain.center(t), chain.radius(t))).collect();
    let tol = 1e-12;
    // Coarse pass over all grid pairs, keeping the tightest pair.
    let (worst_margin, wi, wj) = (0..geo.len())
        .into_par_iter()
        .map(|i| {
            let (ci, ri) = geo[i];
            let mut best = (f64::INFINITY, i, i);
            for (j, &(cj, rj)) in geo.iter().enumerate().skip(i + 1) {
                let m = (ci - cj).norm() + ri.min(rj) - ri.max(rj);
                if m < best.0 {
                    best = (m, i, j);
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, 0, 0), |a, b| if b.0 < a.0 { b } else { a });
    if worst_margin < -tol {
        return Some((ts[wi], ts[wj]));
    }
    if !worst_margin.is_finite() {
        return None;
    }
    // Refine around the tightest pair.
    let cell = |k: usize| {
        let lo = if k > 0 { ts[k - 1] } else { ts[k] * 0.5 };
        let hi = if k + 1 < ts.len() { ts[k + 1] } else { (ts[k] + 1.0) * 0.5 };
        (lo, hi)
    };
    let ((li, hi_i), (lj, hj)) = (cell(wi), cell(wj));
    let fine = 16;
    for p in 0..=fine {
        let t = li + (hi_i - li) * p as f64 / fine as f64;
        for q in 0..=fine {
            let s = lj + (hj - lj) * q as f64 / fine as f64;
            if (t - s).abs() > 1e-12 && enclosure_margin(chain, t, s) < -tol {
                return Some((t, s));
            }
        }
    }
    None
}
