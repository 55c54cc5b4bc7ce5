//! Zeros and poles of the circle extensions `G_t`, their continuation in
//! `t`, traveling counts, Cauchy-type balance integrals along branches and
//! the argument-principle integral `I(q)` over the parameter cylinder.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainSpec, Circle};
use crate::defaults::{BOUNDARY_TOL, COEFF_NOISE, EXCLUDED_FRACTION_MAX, MEROM_TOL, Q_MARGIN, TRAVEL_DELTA};
use crate::laurent::{analyze_circle, build_extension, merom_test, synthesize, MeromorphicExtension};
use crate::roots::{roots_with_multiplicity, RootCluster};
use crate::{Error, Result};

/// Zeros inside the unit `w`-disc and the effective center pole order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroPoleReport {
    /// Zeros with `|w| < 1`, in the normalized variable.
    pub zeros: Vec<RootCluster>,
    /// Pole order at the center after cancelling vanishing leading terms.
    pub pole_order: usize,
    /// Roots within `BOUNDARY_TOL` of `|w| = 1` (either side).
    pub near_boundary: Vec<Complex64>,
    /// Smallest `||w| - 1|` over all roots; 1 when there are none.
    pub boundary_gap: f64,
}

impl ZeroPoleReport {
    pub fn zero_count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }
}

/// Zeros of `w^ν G(w)` with noise-level coefficients trimmed at both ends.
pub fn zeros_and_poles(ext: &MeromorphicExtension) -> Result<ZeroPoleReport> {
    let max = ext.series.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return Err(Error::ZeroFunction);
    }
    let floor = COEFF_NOISE * max;
    let low = ext.series.iter().take_while(|a| a.norm() <= floor).count();
    let poly = &ext.series[low..];
    let nu = ext.pole_order;
    let mut zeros: Vec<RootCluster> = Vec::new();
    let mut near_boundary = Vec::new();
    let mut boundary_gap = 1.0f64;
    for root in roots_with_multiplicity(poly, COEFF_NOISE) {
        let m = root.z.norm();
        boundary_gap = boundary_gap.min((m - 1.0).abs());
        if (m - 1.0).abs() < BOUNDARY_TOL {
            near_boundary.push(root.z);
        }
        if m < 1.0 {
            zeros.push(root);
        }
    }
    if low > nu {
        zeros.push(RootCluster { z: Complex64::new(0.0, 0.0), multiplicity: low - nu });
    }
    Ok(ZeroPoleReport { zeros, pole_order: nu.saturating_sub(low), near_boundary, boundary_gap })
}

/// Zeros of the extension inside the open unit `w`-disc.
pub fn roots_inside(ext: &MeromorphicExtension) -> Result<Vec<RootCluster>> {
    zeros_and_poles(ext).map(|r| r.zeros)
}

/// Total argument increment of a closed sampled curve over `2π`.
pub fn winding_number(values: &[Complex64]) -> Result<i64> {
    let n = values.len();
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (j, v) in values.iter().enumerate() {
        if !(v.norm() > COEFF_NOISE * max) || !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::IndeterminateWinding { theta: TAU * j as f64 / n as f64 });
        }
    }
    let total: f64 = (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).sum();
    Ok((total / TAU).round() as i64)
}

/// Boundary values of the extension at `m` equispaced points.
pub fn boundary_values(ext: &MeromorphicExtension, m: usize) -> Vec<Complex64> {
    (0..m).map(|j| ext.eval_w(Complex64::from_polar(1.0, TAU * j as f64 / m as f64))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Zero,
    Pole,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchSample {
    pub t: f64,
    pub z: Complex64,
    pub multiplicity: usize,
}

/// A continued curve of zeros or poles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    pub kind: BranchKind,
    pub samples: Vec<BranchSample>,
    pub traveling: bool,
}

impl Branch {
    pub fn new(kind: BranchKind, samples: Vec<BranchSample>) -> Self {
        Branch { id: 0, kind, samples, traveling: false }
    }

    /// Most frequent multiplicity along the branch.
    pub fn multiplicity(&self) -> usize {
        let mut counts = std::collections::BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.multiplicity).or_insert(0usize) += 1;
        }
        counts.into_iter().max_by_key(|&(m, n)| (n, m)).map_or(0, |(m, _)| m)
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.samples.first().map_or(f64::NAN, |s| s.t), self.samples.last().map_or(f64::NAN, |s| s.t))
    }

    /// Consecutive displacements.
    pub fn jumps(&self) -> Vec<f64> {
        self.samples.windows(2).map(|w| (w[1].z - w[0].z).norm()).collect()
    }

    /// Covers `(δ, 1 - δ)` and starts and ends within `tol` of the two
    /// chain endpoints (in either order).
    pub fn is_traveling(&self, a: Complex64, b: Complex64, delta: f64, tol: f64) -> bool {
        let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) else {
            return false;
        };
        let covers = first.t <= delta && last.t >= 1.0 - delta;
        let near = |z: Complex64, p: Complex64| (z - p).norm() <= tol;
        covers && ((near(first.z, a) && near(last.z, b)) || (near(first.z, b) && near(last.z, a)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BranchSet {
    pub branches: Vec<Branch>,
    pub delta: f64,
    /// Some circle had a root within `BOUNDARY_TOL` of its boundary.
    pub boundary_degenerate: bool,
    pub boundary_ts: Vec<f64>,
    /// Circles on which the winding identity was evaluated.
    pub winding_checked: usize,
    /// Parameters where winding ≠ zeros - poles.
    pub winding_mismatches: Vec<f64>,
    /// Circles skipped by the winding check (boundary roots).
    pub winding_skipped: usize,
    /// Number of boundary exit/entry pairs joined into one branch.
    pub stitched: usize,
}

impl BranchSet {
    pub fn of_kind(&self, kind: BranchKind) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(move |b| b.kind == kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackOptions {
    /// Samples per circle.
    pub n: usize,
    pub band: usize,
    /// Extendibility tolerance.
    pub tol: f64,
    pub delta: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions { n: 256, band: 64, tol: MEROM_TOL, delta: TRAVEL_DELTA }
    }
}

/// Per-circle roots used by the tracker.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleRoots {
    pub t: f64,
    pub circle: Circle,
    /// Zeros in `z`.
    pub zeros: Vec<RootCluster>,
    /// Matching normalized positions.
    pub zeros_w: Vec<Complex64>,
    pub pole_order: usize,
    pub near_boundary: bool,
    /// `Some(ok)` when the winding identity was checked.
    pub winding_ok: Option<bool>,
}

/// Extendibility test, extension, zeros and winding identity on one circle.
pub fn circle_roots<F>(f: &F, circle: Circle, nu: usize, opts: &TrackOptions) -> Result<Option<CircleRoots>>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let data = analyze_circle(f, &circle, opts.n, opts.band)?;
    let report = merom_test(&data, nu, opts.tol)?;
    if report.zero_function {
        return Ok(None);
    }
    if !report.pass {
        return Err(Error::Extendibility { t: circle.t, defect: report.defect });
    }
    let ext = build_extension(&data, nu);
    let zp = zeros_and_poles(&ext)?;
    let near_boundary = !zp.near_boundary.is_empty();
    let winding_ok = if near_boundary {
        None
    } else {
        // Resolve the argument near roots close to the circle.
        let gap = zp.boundary_gap.max(BOUNDARY_TOL);
        let m = opts.n.max(8 * ext.series.len()).max((16.0 / gap).ceil() as usize);
        match winding_number(&boundary_values(&ext, m)) {
            Ok(w) => Some(w == zp.zero_count() as i64 - zp.pole_order as i64),
            Err(_) => None,
        }
    };
    Ok(Some(CircleRoots {
        t: circle.t,
        zeros: zp.zeros.iter().map(|r| RootCluster { z: circle.point(r.z), multiplicity: r.multiplicity }).collect(),
        zeros_w: zp.zeros.iter().map(|r| r.z).collect(),
        circle,
        pole_order: zp.pole_order,
        near_boundary,
        winding_ok,
    }))
}

/// Jump allowance between consecutive samples: a multiple of the distance
/// the circle itself moves.
const JUMP_FACTOR: f64 = 20.0;
/// Roots with `|w|` above this are close enough to the boundary to count as
/// exits or entries when stitching.
const EDGE_W: f64 = 0.9;

/// Minimal-total-displacement assignment of `prev` to `next`; pairs farther
/// than `thr` stay unmatched.
fn assign(prev: &[Complex64], next: &[Complex64], thr: f64) -> Vec<Option<usize>> {
    if prev.len() <= 6 && next.len() <= 6 {
        fn search(i: usize, prev: &[Complex64], next: &[Complex64], thr: f64, used: &mut [bool], cur: &mut Vec<Option<usize>>, best: &mut (f64, Vec<Option<usize>>), cost: f64) {
            if cost >= best.0 {
                return;
            }
            if i == prev.len() {
                *best = (cost, cur.clone());
                return;
            }
            for j in 0..next.len() {
                let d = (prev[i] - next[j]).norm();
                if !used[j] && d <= thr {
                    used[j] = true;
                    cur.push(Some(j));
                    search(i + 1, prev, next, thr, used, cur, best, cost + d);
                    cur.pop();
                    used[j] = false;
                }
            }
            cur.push(None);
            search(i + 1, prev, next, thr, used, cur, best, cost + thr);
            cur.pop();
        }
        let mut best = (f64::INFINITY, vec![None; prev.len()]);
        search(0, prev, next, thr, &mut vec![false; next.len()], &mut Vec::new(), &mut best, 0.0);
        return best.1;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            let d = (p - q).norm();
            if d <= thr {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = vec![None; prev.len()];
    let mut used = vec![false; next.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

/// Continues zeros across the grid, adds the center-pole branches and sets
/// the traveling flags.
pub fn track_branches<F>(chain: &ChainSpec, f: &F, nu: usize, t_grid: &[f64], opts: &TrackOptions) -> Result<BranchSet>
where
    F: Fn(Complex64) -> Complex64 + Sync + ?Sized,
{
    let mut ts: Vec<f64> = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let per_t: Vec<Option<CircleRoots>> = ts
        .par_iter()
        .map(|&t| circle_roots(f, chain.circle_at(t)?, nu, opts))
        .collect::<Result<_>>()?;
    let per_t: Vec<CircleRoots> = per_t.into_iter().flatten().collect();

    let mut set = BranchSet { delta: opts.delta, ..Default::default() };
    for cr in &per_t {
        if cr.near_boundary {
            set.boundary_degenerate = true;
            set.boundary_ts.push(cr.t);
        }
        match cr.winding_ok {
            Some(true) => set.winding_checked += 1,
            Some(false) => {
                set.winding_checked += 1;
                set.winding_mismatches.push(cr.t);
            }
            None => set.winding_skipped += 1,
        }
    }

    // Zero branches: (branch index, last w) for open branches.
    let mut zeros: Vec<(Branch, Complex64)> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for (i, cr) in per_t.iter().enumerate() {
        let thr = if i == 0 {
            0.0
        } else {
            let prev = &per_t[i - 1];
            let moved = (cr.circle.center - prev.circle.center).norm() + (cr.circle.radius - prev.circle.radius).abs();
            JUMP_FACTOR * moved.max(1e-12 * (1.0 + cr.circle.center.norm()))
        };
        let prev_pts: Vec<Complex64> = open.iter().map(|&b| zeros[b].0.samples.last().unwrap().z).collect();
        let next_pts: Vec<Complex64> = cr.zeros.iter().map(|r| r.z).collect();
        let matched = assign(&prev_pts, &next_pts, thr);
        let mut taken = vec![false; next_pts.len()];
        let mut still_open = Vec::new();
        for (k, m) in matched.iter().enumerate() {
            if let Some(j) = *m {
                let b = open[k];
                zeros[b].0.samples.push(BranchSample { t: cr.t, z: next_pts[j], multiplicity: cr.zeros[j].multiplicity });
                zeros[b].1 = cr.zeros_w[j];
                taken[j] = true;
                still_open.push(b);
            }
        }
        for (j, r) in cr.zeros.iter().enumerate().filter(|(j, _)| !taken[*j]) {
            zeros.push((
                Branch::new(BranchKind::Zero, vec![BranchSample { t: cr.t, z: r.z, multiplicity: r.multiplicity }]),
                cr.zeros_w[j],
            ));
            still_open.push(zeros.len() - 1);
        }
        open = still_open;
    }

    let first_w: Vec<Complex64> = zeros
        .iter()
        .map(|(b, _)| {
            let s = b.samples[0];
            let cr = per_t.iter().find(|c| c.t == s.t).unwrap();
            cr.circle.normalize(s.z)
        })
        .collect();
    let (mut zero_branches, stitched) = stitch(zeros.into_iter().map(|(b, w)| (b, w)).collect(), first_w);
    set.stitched = stitched;

    // Center-pole branches.
    let mut poles: Vec<Branch> = Vec::new();
    let mut current: Option<Branch> = None;
    for cr in &per_t {
        if cr.pole_order == 0 {
            if let Some(b) = current.take() {
                poles.push(b);
            }
            continue;
        }
        let s = BranchSample { t: cr.t, z: cr.circle.center, multiplicity: cr.pole_order };
        current.get_or_insert_with(|| Branch::new(BranchKind::Pole, vec![])).samples.push(s);
    }
    poles.extend(current);

    let (a, b) = (chain.endpoint_a(), chain.endpoint_b());
    let tol = 10.0 * chain.radius(opts.delta);
    zero_branches.append(&mut poles);
    for (id, br) in zero_branches.iter_mut().enumerate() {
        br.id = id;
        br.traveling = br.is_traveling(a, b, opts.delta, tol);
    }
    set.branches = zero_branches;
    Ok(set)
}

/// Joins a zero branch that leaves the disc near a boundary point to a later
/// branch entering near the same point; the zero is parked on the boundary
/// in between, where it adds nothing to `∫ dz/(z - q)`.
fn stitch(mut items: Vec<(Branch, Complex64)>, first_w: Vec<Complex64>) -> (Vec<Branch>, usize) {
    let n = items.len();
    let mut joined = 0;
    let mut absorbed = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| items[i].0.samples[0].t.total_cmp(&items[j].0.samples[0].t));
    for &i in &order {
        if absorbed[i] {
            continue;
        }
        loop {
            let (end_t, end_z, end_w, end_m) = {
                let (b, w) = &items[i];
                let s = b.samples.last().unwrap();
                (s.t, s.z, *w, s.multiplicity)
            };
            if end_w.norm() < EDGE_W {
                break;
            }
            let jump = items[i].0.jumps().last().copied().unwrap_or(0.0);
            let candidate = order
                .iter()
                .copied()
                .filter(|&j| j != i && !absorbed[j])
                .filter(|&j| {
                    let s = items[j].0.samples[0];
                    s.t > end_t && first_w[j].norm() >= EDGE_W && s.multiplicity == end_m
                })
                .map(|j| {
                    let first_jump = items[j].0.jumps().first().copied().unwrap_or(0.0);
                    let d = (items[j].0.samples[0].z - end_z).norm();
                    (j, d, (10.0 * (jump + first_jump)).max(0.02))
                })
                .filter(|&(_, d, tol)| d <= tol)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            let Some((j, _, _)) = candidate else { break };
            absorbed[j] = true;
            let (tail, w) = std::mem::replace(&mut items[j], (Branch::new(BranchKind::Zero, vec![]), Complex64::new(0.0, 0.0)));
            items[i].0.samples.extend(tail.samples);
            items[i].1 = w;
            joined += 1;
        }
    }
    let out = items.into_iter().zip(absorbed).filter(|(_, a)| !a).map(|((b, _), _)| b).collect();
    (out, joined)
}

/// `(N_g, M_g)`: multiplicities of traveling zero and pole branches.
pub fn count_traveling(set: &BranchSet) -> (usize, usize) {
    let sum = |k| set.of_kind(k).filter(|b| b.traveling).map(Branch::multiplicity).sum();
    (sum(BranchKind::Zero), sum(BranchKind::Pole))
}

/// Distance from `q` to the polyline through `pts`.
fn polyline_distance(pts: &[Complex64], q: Complex64) -> f64 {
    if pts.len() == 1 {
        return (pts[0] - q).norm();
    }
    pts.windows(2)
        .map(|s| {
            let d = s[1] - s[0];
            let len2 = d.norm_sqr();
            let u = if len2 > 0.0 { (((q - s[0]) * d.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
            (s[0] + d * u - q).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `∫ dz/(z - q)` along a polyline, exact on each segment.
pub fn polyline_cauchy_integral(pts: &[Complex64], q: Complex64) -> Result<Complex64> {
    let distance = polyline_distance(pts, q);
    if distance < Q_MARGIN {
        return Err(Error::Conditioning { q, distance });
    }
    Ok(pts.windows(2).map(|s| ((s[1] - q) / (s[0] - q)).ln()).sum())
}

/// `∫_branch dz/(z - q)` oriented by increasing `t`.
pub fn branch_cauchy_integral(branch: &Branch, q: Complex64) -> Result<Complex64> {
    let pts: Vec<Complex64> = branch.samples.iter().map(|s| s.z).collect();
    polyline_cauchy_integral(&pts, q)
}

/// Branch samples closed off at the nearer chain endpoint on each side.
fn closed_points(branch: &Branch, ends: Option<(Complex64, Complex64)>) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = branch.samples.iter().map(|s| s.z).collect();
    if let (Some((a, b)), Some(&first)) = (ends, pts.first()) {
        let (start, end) = if (first - a).norm() <= (first - b).norm() { (a, b) } else { (b, a) };
        pts.insert(0, start);
        pts.push(end);
    }
    pts
}

/// `Σ_zeros k ∫ dz/(z - q) - Σ_poles l ∫ dz/(z - q)` over traveling
/// branches, each optionally closed off at the chain endpoints.
pub fn branch_sum(set: &BranchSet, q: Complex64, ends: Option<(Complex64, Complex64)>) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for b in set.branches.iter().filter(|b| b.traveling) {
        let v = polyline_cauchy_integral(&closed_points(b, ends), q)? * b.multiplicity() as f64;
        match b.kind {
            BranchKind::Zero => total += v,
            BranchKind::Pole => total -= v,
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceReport {
    pub values: Vec<(Complex64, Complex64)>,
    pub max: f64,
}

/// [`branch_sum`] for each `q`; the maximum modulus should vanish.
pub fn verify_zp_balance(set: &BranchSet, qs: &[Complex64], ends: Option<(Complex64, Complex64)>) -> Result<BalanceReport> {
    let values: Vec<(Complex64, Complex64)> = qs.iter().map(|&q| branch_sum(set, q, ends).map(|v| (q, v))).collect::<Result<_>>()?;
    let max = values.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    Ok(BalanceReport { values, max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IqOptions {
    pub n_theta: usize,
    pub n_t: usize,
    pub band: usize,
    /// Boundary samples with `|G|` below this fraction of the circle's
    /// maximum are dropped.
    pub exclude_rel: f64,
    /// Reject `q` closer than `Q_MARGIN` to the union of the discs.
    pub require_outside: bool,
}

impl IqOptions {
    pub fn square(n: usize) -> Self {
        IqOptions { n_theta: n, n_t: n, band: n / 4, exclude_rel: 1e-3, require_outside: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IqReport {
    pub q: Complex64,
    pub value: Complex64,
    pub excluded_fraction: f64,
    pub n_theta: usize,
    pub n_t: usize,
}

/// Sub-cells used on parameter intervals where the zero count of the
/// extension changes.
const IQ_REFINE: usize = 32;
/// Angular oversampling on those sub-cells.
const IQ_REFINE_THETA: usize = 16;
/// Tolerated gap between the angular sum and its even-node half.
const IQ_RESOLVED: f64 = 1e-6;

/// Inner `ζ`-integral of `I(q)` at one `t`.
struct IqSlice {
    value: Complex64,
    excluded: usize,
    /// Winding number of `G` on the circle; `None` when samples were dropped.
    winding: Option<i64>,
    /// The angular sum disagrees with its even-node half: a zero or pole of
    /// `G` sits close to the circle.
    unresolved: bool,
}

/// Step direction for `t`-derivatives that stays inside `(0, 1)` and does
/// not cross a singular parameter.
fn stencil_side(chain: &ChainSpec, t: f64, reach: f64) -> i8 {
    let blocked = |lo: f64, hi: f64| lo <= 0.0 || hi >= 1.0 || chain.singular_params().iter().any(|&s| lo <= s && s <= hi);
    if !blocked(t - reach, t + reach) {
        0
    } else if !blocked(t, t + reach) {
        1
    } else {
        -1
    }
}

#[allow(clippy::too_many_arguments)]
fn iq_slice<F>(chain: &ChainSpec, f: &F, nu: usize, q: Complex64, t: f64, h: f64, nth: usize, opts: &IqOptions) -> Result<IqSlice>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let band = opts.band;
    // Extension coefficients on the symmetric band, zero below -ν.
    let at = |s: f64| -> Result<Vec<Complex64>> {
        let data = analyze_circle(f, &chain.circle_at(s)?, nth, band)?;
        let mut a = data.coeffs().to_vec();
        a[..band - nu].iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        Ok(a)
    };
    let a = at(t)?;
    let da: Vec<Complex64> = match stencil_side(chain, t, 2.0 * h) {
        0 => {
            let (p2, p1, m1, m2) = (at(t + 2.0 * h)?, at(t + h)?, at(t - h)?, at(t - 2.0 * h)?);
            (0..a.len()).map(|k| (-p2[k] + p1[k] * 8.0 - m1[k] * 8.0 + m2[k]) / (12.0 * h)).collect()
        }
        side => {
            let s = side as f64 * h;
            let (p1, p2) = (at(t + s)?, at(t + 2.0 * s)?);
            (0..a.len()).map(|k| (a[k] * -3.0 + p1[k] * 4.0 - p2[k]) / (2.0 * s)).collect()
        }
    };
    let (c, r) = (chain.center(t), chain.radius(t));
    let (dc, dr) = chain.derivatives(t);
    let kmin = -(band as i64);
    let g = synthesize(&a, nth);
    let ka: Vec<Complex64> = a.iter().enumerate().map(|(k, &x)| x * (k as i64 + kmin) as f64).collect();
    let zg = synthesize(&ka, nth);
    let gt = synthesize(&da, nth);
    let gmax = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut even = Complex64::new(0.0, 0.0);
    let mut excluded = 0;
    for j in 0..nth {
        if g[j].norm() <= opts.exclude_rel * gmax {
            excluded += 1;
            continue;
        }
        let zeta = Complex64::from_polar(1.0, TAU * j as f64 / nth as f64);
        let omega = c + zeta * r;
        let gz = zg[j] / zeta;
        let coef = (gz / g[j]) * (dc + zeta * dr) / (omega - q) - (gt[j] / g[j]) * r / (omega - q);
        let term = coef * Complex64::i() * zeta;
        acc += term;
        if j % 2 == 0 {
            even += term;
        }
    }
    let winding = if excluded == 0 { winding_number(&g).ok() } else { None };
    let value = acc * (TAU / nth as f64);
    let unresolved = (value - even * (2.0 * TAU / nth as f64)).norm() > IQ_RESOLVED * (1.0 + value.norm());
    Ok(IqSlice { value, excluded, winding, unresolved })
}

/// `I(q) = (1/2πi) ∬ [(∂_ζG/G)(∂_tω/(ω-q)) - (∂_tG/G)(∂_ζω/(ω-q))] dζ∧dt`
/// with `ω = c(t) + r(t)ζ`, on `|ζ| = 1`, by the midpoint rule on an
/// `N_θ × N_t` grid over `[0, 2π) × (0, 1)`.
///
/// The inner integral jumps where a zero of `G` crosses the circle; the
/// parameter intervals where the winding number of `G` changes, or where
/// the angular sum is not resolved, are re-integrated on a finer grid.
pub fn i_of_q<F>(chain: &ChainSpec, f: &F, nu: usize, q: Complex64, opts: &IqOptions) -> Result<IqReport>
where
    F: Fn(Complex64) -> Complex64 + Sync + ?Sized,
{
    if opts.require_outside {
        let distance = chain.envelope_distance(q, 4096);
        if distance < Q_MARGIN {
            return Err(Error::Conditioning { q, distance });
        }
    }
    let nt = opts.n_t;
    let nu = nu.min(opts.band);
    let dt = 1.0 / nt as f64;
    let h = dt / (4.0 * IQ_REFINE as f64);
    let ts = crate::grid::midpoint(nt);
    let slices: Vec<IqSlice> = ts.par_iter().map(|&t| iq_slice(chain, f, nu, q, t, h, opts.n_theta, opts)).collect::<Result<_>>()?;
    let mut total: Complex64 = slices.iter().map(|s| s.value).sum::<Complex64>() * dt;
    let suspect = |s: &IqSlice| s.winding.is_none() || s.unresolved;
    let jumps: Vec<usize> = (0..nt - 1)
        .filter(|&i| suspect(&slices[i]) || suspect(&slices[i + 1]) || slices[i].winding != slices[i + 1].winding)
        .collect();
    let corrections: Vec<Complex64> = jumps
        .par_iter()
        .map(|&i| -> Result<Complex64> {
            let sub = dt / IQ_REFINE as f64;
            let nth = opts.n_theta * IQ_REFINE_THETA;
            let mut fine = Complex64::new(0.0, 0.0);
            for j in 0..IQ_REFINE {
                fine += iq_slice(chain, f, nu, q, ts[i] + (j as f64 + 0.5) * sub, h, nth, opts)?.value * sub;
            }
            Ok(fine - (slices[i].value + slices[i + 1].value) * (dt / 2.0))
        })
        .collect::<Result<_>>()?;
    total += corrections.into_iter().sum::<Complex64>();
    let excluded: usize = slices.iter().map(|s| s.excluded).sum();
    let excluded_fraction = excluded as f64 / (nt * opts.n_theta) as f64;
    if excluded_fraction > EXCLUDED_FRACTION_MAX {
        return Err(Error::UnreliableQuadrature { fraction: excluded_fraction });
    }
    let value = total / Complex64::new(0.0, TAU);
    Ok(IqReport { q, value, excluded_fraction, n_theta: opts.n_theta, n_t: nt })
}
