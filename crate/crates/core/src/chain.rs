//! Chains of circles `C_t = C(c(t), r(t))` and the example families built
//! from hyperbolic circles, horicycles and concentric circles.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::defaults::{FD_STEP, SINGULAR_HALFWIDTH};
use crate::{Error, Result};

pub type CenterFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type RadiusFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Closed-form `(c′(t), r′(t))`.
pub type VelocityFn = Arc<dyn Fn(f64) -> (Complex64, f64) + Send + Sync>;

const ENDPOINT_TOL: f64 = 1e-9;
const PROFILE_SAMPLES: usize = 1024;
const SINGULAR_SCAN: usize = 4096;

/// A circle of the chain together with the parameter that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    pub t: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64, t: f64) -> Self {
        Circle { center, radius, t }
    }

    /// Point `c + r·w` for a normalized coordinate `w`.
    pub fn point(&self, w: Complex64) -> Complex64 {
        self.center + w * self.radius
    }

    /// Normalized coordinate `(z - c) / r`.
    pub fn normalize(&self, z: Complex64) -> Complex64 {
        (z - self.center) / self.radius
    }

    /// `n` equally spaced boundary points starting at angle 0.
    pub fn sample(&self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| self.point(Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)))
            .collect()
    }
}

/// Radius profile `ρ(t)` of a two-branch chain. Must satisfy
/// `ρ(0) = ρ(1) = 0`, `ρ(1/2) = 1` and `0 < ρ ≤ 1` inside.
#[derive(Clone)]
pub enum RadiusProfile {
    /// `4t(1 - t)`.
    Default,
    /// Coefficients in increasing powers of `t`.
    Polynomial(Vec<f64>),
    /// Arbitrary callable; derivatives by central differences.
    Custom(RadiusFn),
}

impl fmt::Debug for RadiusProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusProfile::Default => write!(f, "Default"),
            RadiusProfile::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            RadiusProfile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Default for RadiusProfile {
    fn default() -> Self {
        RadiusProfile::Default
    }
}

impl RadiusProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            RadiusProfile::Default => 4.0 * t * (1.0 - t),
            RadiusProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * t + a),
            RadiusProfile::Custom(f) => f(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            RadiusProfile::Default => 4.0 - 8.0 * t,
            RadiusProfile::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * t + k as f64 * a),
            RadiusProfile::Custom(_) => {
                let h = FD_STEP;
                let (lo, hi) = ((t - h).max(0.0), (t + h).min(1.0));
                (self.value(hi) - self.value(lo)) / (hi - lo)
            }
        }
    }

    fn has_closed_form(&self) -> bool {
        !matches!(self, RadiusProfile::Custom(_))
    }

    /// Checks the endpoint, peak and sign constraints, and monotonicity on
    /// each half of `[0, 1]` over a sample grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("radius profile: {msg}")));
        if self.value(0.0).abs() > ENDPOINT_TOL || self.value(1.0).abs() > ENDPOINT_TOL {
            return bad("must vanish at t = 0 and t = 1".into());
        }
        if (self.value(0.5) - 1.0).abs() > ENDPOINT_TOL {
            return bad(format!("must equal 1 at t = 1/2, got {}", self.value(0.5)));
        }
        let n = PROFILE_SAMPLES;
        let mut prev = 0.0;
        for j in 1..n {
            let t = j as f64 / n as f64;
            let v = self.value(t);
            if !(v > 0.0 && v <= 1.0 + ENDPOINT_TOL) {
                return bad(format!("value {v} at t = {t} outside (0, 1]"));
            }
            let rising = t <= 0.5;
            if j > 1 && ((rising && v < prev) || (!rising && t - 1.0 / n as f64 >= 0.5 && v > prev)) {
                return bad(format!("not monotone on its half at t = {t}"));
            }
            prev = v;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Hyperbolic,
    Horicycle,
    Mixed,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DerivativeMode {
    ClosedForm,
    CentralDifference { h: f64 },
}

/// One-sided radius slopes at the branch switch `t = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JunctionReport {
    pub left_slope: f64,
    pub right_slope: f64,
    /// Whether the glued radius is C¹ across the junction (matching slopes).
    pub c1: bool,
}

/// A C¹ family of circles shrinking to `endpoint_a` at `t = 0` and to
/// `endpoint_b` at `t = 1`.
#[derive(Clone)]
pub struct ChainSpec {
    kind: ChainKind,
    center_fn: CenterFn,
    radius_fn: RadiusFn,
    velocity: Option<VelocityFn>,
    endpoint_a: Complex64,
    endpoint_b: Complex64,
    derivative_mode: DerivativeMode,
    singular_params: Vec<f64>,
    exclusion_halfwidth: f64,
    two_branch: bool,
    junction: Option<JunctionReport>,
}

impl fmt::Debug for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChainSpec")
            .field("kind", &self.kind)
            .field("endpoint_a", &self.endpoint_a)
            .field("endpoint_b", &self.endpoint_b)
            .field("derivative_mode", &self.derivative_mode)
            .field("singular_params", &self.singular_params)
            .finish_non_exhaustive()
    }
}

impl ChainSpec {
    /// Chain from arbitrary center and radius callables. Derivatives use
    /// central differences unless [`ChainSpec::with_velocity`] is applied.
    pub fn custom(
        center: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        radius: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let chain = ChainSpec {
            kind: ChainKind::Custom,
            endpoint_a: center(0.0),
            endpoint_b: center(1.0),
            center_fn: Arc::new(center),
            radius_fn: Arc::new(radius),
            velocity: None,
            derivative_mode: DerivativeMode::CentralDifference { h: FD_STEP },
            singular_params: Vec::new(),
            exclusion_halfwidth: SINGULAR_HALFWIDTH,
            two_branch: false,
            junction: None,
        };
        chain.finish()
    }

    /// Supplies closed-form derivatives and switches to closed-form mode.
    pub fn with_velocity(mut self, velocity: impl Fn(f64) -> (Complex64, f64) + Send + Sync + 'static) -> Result<Self> {
        self.velocity = Some(Arc::new(velocity));
        self.derivative_mode = DerivativeMode::ClosedForm;
        self.singular_params.clear();
        self.finish()
    }

    pub fn with_exclusion_halfwidth(mut self, halfwidth: f64) -> Self {
        self.exclusion_halfwidth = halfwidth;
        self
    }

    /// Chain from tabulated `(t, c, r)` rows with linear interpolation. Rows
    /// must start at `t = 0`, end at `t = 1` and be strictly increasing in `t`.
    pub fn tabulated(rows: Vec<(f64, Complex64, f64)>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::Config("tabulated chain needs at least 3 rows".into()));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("tabulated t values must be strictly increasing".into()));
        }
        if rows[0].0.abs() > ENDPOINT_TOL || (rows[rows.len() - 1].0 - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::Config("tabulated t values must span [0, 1]".into()));
        }
        let rows = Arc::new(rows);
        let locate = {
            let rows = rows.clone();
            move |t: f64| -> (usize, f64) {
                let i = rows.partition_point(|row| row.0 <= t).clamp(1, rows.len() - 1) - 1;
                let (t0, t1) = (rows[i].0, rows[i + 1].0);
                (i, ((t - t0) / (t1 - t0)).clamp(0.0, 1.0))
            }
        };
        let (rc, lc) = (rows.clone(), locate.clone());
        let center = move |t: f64| {
            let (i, s) = lc(t);
            rc[i].1 * (1.0 - s) + rc[i + 1].1 * s
        };
        let rr = rows.clone();
        let radius = move |t: f64| {
            let (i, s) = locate(t);
            rr[i].2 * (1.0 - s) + rr[i + 1].2 * s
        };
        ChainSpec::custom(center, radius)
    }

    /// Hyperbolic-circle chain: `H(a, ρ(t))` for `t ≤ 1/2`, `H(b, ρ(t))` after.
    pub fn hyperbolic(a: Complex64, b: Complex64, profile: RadiusProfile) -> Result<Self> {
        for p in [a, b] {
            if p.norm() >= 1.0 {
                return Err(Error::Domain(format!("hyperbolic center {p} must lie in the unit disc")));
            }
        }
        profile.validate()?;
        let hyp = move |t: f64| if t <= 0.5 { a } else { b };
        let p1 = profile.clone();
        let center = move |t: f64| hyperbolic_center(hyp(t), p1.value(t));
        let p2 = profile.clone();
        let radius = move |t: f64| hyperbolic_radius(hyp(t), p2.value(t));
        let p3 = profile.clone();
        let velocity = move |t: f64| {
            let h = hyp(t);
            let rho = p3.value(t);
            let drho = p3.derivative(t);
            let m = h.norm_sqr();
            let den = 1.0 - m * rho * rho;
            let dc = h * (-2.0 * rho * (1.0 - m) / (den * den));
            let dr = (1.0 - m) * (1.0 + m * rho * rho) / (den * den);
            (dc * drho, dr * drho)
        };
        Self::two_branch(ChainKind::Hyperbolic, a, b, center, radius, velocity, &profile)
    }

    /// Horicycle chain: `Hor(a, ρ(t))` for `t ≤ 1/2`, `Hor(b, ρ(t))` after.
    pub fn horicycle(a: Complex64, b: Complex64, profile: RadiusProfile) -> Result<Self> {
        for p in [a, b] {
            if (p.norm() - 1.0).abs() > ENDPOINT_TOL {
                return Err(Error::Domain(format!("horicycle point {p} must have unit modulus")));
            }
        }
        profile.validate()?;
        let pt = move |t: f64| if t <= 0.5 { a } else { b };
        Self::horicycle_like(ChainKind::Horicycle, a, b, pt, false, profile)
    }

    /// Mixed chain: concentric `C(0, ρ(t))` for `t ≤ 1/2`, `Hor(b, ρ(t))` after.
    pub fn mixed(b: Complex64, profile: RadiusProfile) -> Result<Self> {
        if (b.norm() - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::Domain(format!("horicycle point {b} must have unit modulus")));
        }
        profile.validate()?;
        let pt = move |_t: f64| b;
        Self::horicycle_like(ChainKind::Mixed, Complex64::new(0.0, 0.0), b, pt, true, profile)
    }

    fn horicycle_like(
        kind: ChainKind,
        a: Complex64,
        b: Complex64,
        point: impl Fn(f64) -> Complex64 + Send + Sync + Clone + 'static,
        concentric_first: bool,
        profile: RadiusProfile,
    ) -> Result<Self> {
        let concentric = move |t: f64| concentric_first && t <= 0.5;
        let (p1, pt1) = (profile.clone(), point.clone());
        let center = move |t: f64| {
            if concentric(t) {
                Complex64::new(0.0, 0.0)
            } else {
                horicycle_circle(pt1(t), p1.value(t)).center
            }
        };
        let p2 = profile.clone();
        let radius = move |t: f64| p2.value(t);
        let p3 = profile.clone();
        let velocity = move |t: f64| {
            let dr = p3.derivative(t);
            if concentric(t) {
                (Complex64::new(0.0, 0.0), dr)
            } else {
                (-point(t) * dr, dr)
            }
        };
        Self::two_branch(kind, a, b, center, radius, velocity, &profile)
    }

    fn two_branch(
        kind: ChainKind,
        a: Complex64,
        b: Complex64,
        center: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        radius: impl Fn(f64) -> f64 + Send + Sync + 'static,
        velocity: impl Fn(f64) -> (Complex64, f64) + Send + Sync + 'static,
        profile: &RadiusProfile,
    ) -> Result<Self> {
        if a == b {
            return Err(Error::Config("chain endpoints must differ".into()));
        }
        let h = 1e-6;
        let left_slope = (profile.value(0.5) - profile.value(0.5 - h)) / h;
        let right_slope = (profile.value(0.5 + h) - profile.value(0.5)) / h;
        let junction = JunctionReport { left_slope, right_slope, c1: (left_slope - right_slope).abs() < 1e-4 };
        let mut chain = ChainSpec {
            kind,
            center_fn: Arc::new(center),
            radius_fn: Arc::new(radius),
            velocity: None,
            endpoint_a: a,
            endpoint_b: b,
            derivative_mode: DerivativeMode::CentralDifference { h: FD_STEP },
            singular_params: Vec::new(),
            exclusion_halfwidth: SINGULAR_HALFWIDTH,
            two_branch: true,
            junction: Some(junction),
        };
        if profile.has_closed_form() {
            chain.velocity = Some(Arc::new(velocity));
            chain.derivative_mode = DerivativeMode::ClosedForm;
        }
        chain.finish()
    }

    fn finish(mut self) -> Result<Self> {
        let (r0, r1) = ((self.radius_fn)(0.0), (self.radius_fn)(1.0));
        if r0.abs() > ENDPOINT_TOL || r1.abs() > ENDPOINT_TOL {
            return Err(Error::Config(format!("radius must vanish at both ends (r(0) = {r0}, r(1) = {r1})")));
        }
        if (self.endpoint_a - self.endpoint_b).norm() <= ENDPOINT_TOL {
            return Err(Error::Config("chain endpoints must differ".into()));
        }
        self.singular_params = self.scan_singular();
        Ok(self)
    }

    /// Parameters where `|c′|² + |r′|²` vanishes: the junction of two-branch
    /// chains plus isolated minima found on a scan grid.
    fn scan_singular(&self) -> Vec<f64> {
        let n = SINGULAR_SCAN;
        let speed: Vec<f64> = (1..n)
            .map(|j| {
                let (dc, dr) = self.derivatives(j as f64 / n as f64);
                dc.norm_sqr() + dr * dr
            })
            .collect();
        let scale = speed.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut out: Vec<f64> = Vec::new();
        if self.two_branch {
            out.push(0.5);
        }
        for i in 1..speed.len() - 1 {
            if speed[i] <= speed[i - 1] && speed[i] <= speed[i + 1] && speed[i] < 1e-8 * scale {
                let t = (i + 1) as f64 / n as f64;
                if out.iter().all(|s| (s - t).abs() > 2.0 / n as f64) {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn endpoint_a(&self) -> Complex64 {
        self.endpoint_a
    }

    pub fn endpoint_b(&self) -> Complex64 {
        self.endpoint_b
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.derivative_mode
    }

    pub fn singular_params(&self) -> &[f64] {
        &self.singular_params
    }

    pub fn exclusion_halfwidth(&self) -> f64 {
        self.exclusion_halfwidth
    }

    /// True for chains glued from two families at `t = 1/2`.
    pub fn is_two_branch(&self) -> bool {
        self.two_branch
    }

    pub fn junction(&self) -> Option<JunctionReport> {
        self.junction
    }

    /// Raw center, defined on the closed interval.
    pub fn center(&self, t: f64) -> Complex64 {
        (self.center_fn)(t)
    }

    /// Raw radius, defined on the closed interval.
    pub fn radius(&self, t: f64) -> f64 {
        (self.radius_fn)(t)
    }

    /// Whether `t` falls inside the exclusion window of a singular parameter.
    pub fn is_excluded(&self, t: f64) -> bool {
        self.singular_params.iter().any(|s| (t - s).abs() <= self.exclusion_halfwidth)
    }

    /// The circle `C_t` for `t ∈ (0, 1)`.
    pub fn circle_at(&self, t: f64) -> Result<Circle> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::ParameterRange { t });
        }
        let radius = self.radius(t);
        if !(radius > 0.0) {
            return Err(Error::DegenerateCircle { t, radius });
        }
        Ok(Circle { center: self.center(t), radius, t })
    }

    /// `(c′(t), r′(t))`, closed form when available.
    pub fn derivatives(&self, t: f64) -> (Complex64, f64) {
        match (&self.velocity, self.derivative_mode) {
            (Some(v), DerivativeMode::ClosedForm) => v(t),
            (_, DerivativeMode::CentralDifference { h }) => self.derivatives_fd(t, h),
            (None, DerivativeMode::ClosedForm) => self.derivatives_fd(t, FD_STEP),
        }
    }

    /// Central differences with step `h`, shifted one-sided near the ends.
    pub fn derivatives_fd(&self, t: f64, h: f64) -> (Complex64, f64) {
        let (lo, hi) = ((t - h).max(0.0), (t + h).min(1.0));
        let span = hi - lo;
        ((self.center(hi) - self.center(lo)) / span, (self.radius(hi) - self.radius(lo)) / span)
    }

    /// Smallest distance from `q` to the union of closed discs sampled on
    /// `n` interior parameters. Negative when `q` is covered.
    pub fn envelope_distance(&self, q: Complex64, n: usize) -> f64 {
        (1..n)
            .map(|j| {
                let t = j as f64 / n as f64;
                (q - self.center(t)).norm() - self.radius(t)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Euclidean center of the hyperbolic circle `H(a, ρ)`.
pub fn hyperbolic_center(a: Complex64, rho: f64) -> Complex64 {
    a * ((1.0 - rho * rho) / (1.0 - a.norm_sqr() * rho * rho))
}

/// Euclidean radius of the hyperbolic circle `H(a, ρ)`.
pub fn hyperbolic_radius(a: Complex64, rho: f64) -> f64 {
    let m = a.norm_sqr();
    rho * (1.0 - m) / (1.0 - m * rho * rho)
}

/// The Euclidean circle equal to the point set `|(z - a)/(1 - āz)| = ρ`.
/// The returned `t` is set to `ρ`.
pub fn hyperbolic_circle_params(a: Complex64, rho: f64) -> Result<Circle> {
    if a.norm() >= 1.0 {
        return Err(Error::Domain(format!("|a| = {} must be below 1", a.norm())));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("hyperbolic radius {rho} outside (0, 1]")));
    }
    Ok(Circle::new(hyperbolic_center(a, rho), hyperbolic_radius(a, rho), rho))
}

/// Circle of radius `r` internally tangent to the unit circle at `a`.
pub fn horicycle_circle(a: Complex64, r: f64) -> Circle {
    Circle::new(a * (1.0 - r), r, r)
}

/// Straight-line chain `c(t) = a + (b - a)t`, `r(t) = amplitude·4t(1 - t)`.
pub fn translating(a: Complex64, b: Complex64, amplitude: f64) -> Result<ChainSpec> {
    let d = b - a;
    ChainSpec::custom(move |t| a + d * t, move |t| amplitude * 4.0 * t * (1.0 - t))?
        .with_velocity(move |t| (d, amplitude * (4.0 - 8.0 * t)))
}

/// A chain whose discriminant inner-root image is a continuous curve on the
/// segment from `a` to `b`: `c(t) = a + (b - a)(1 - (1 - 2t)³)/2`,
/// `r(t) = 4|b - a| t(1 - t)`, so that `|c′| / |r′| = 3|1 - 2t| / 4 < 1`.
pub fn segment_tracing(a: Complex64, b: Complex64) -> Result<ChainSpec> {
    let d = b - a;
    let amp = d.norm();
    ChainSpec::custom(
        move |t| a + d * ((1.0 - (1.0 - 2.0 * t).powi(3)) / 2.0),
        move |t| amp * 4.0 * t * (1.0 - t),
    )?
    .with_velocity(move |t| (d * (3.0 * (1.0 - 2.0 * t).powi(2)), amp * (4.0 - 8.0 * t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hyperbolic_chain_reaches_unit_circle() {
        let chain = ChainSpec::hyperbolic(c(0.3, 0.0), c(-0.4, 0.2), RadiusProfile::Default).unwrap();
        let mid = chain.circle_at(0.5).unwrap();
        assert!(mid.center.norm() < 1e-15);
        assert!((mid.radius - 1.0).abs() < 1e-15);
        let right = chain.circle_at(0.5 + 1e-12).unwrap();
        assert!((right.radius - 1.0).abs() < 1e-9 && right.center.norm() < 1e-9);
        let near0 = chain.circle_at(1e-9).unwrap();
        assert!((near0.center - c(0.3, 0.0)).norm() < 1e-8 && near0.radius < 1e-8);
        assert_eq!(chain.singular_params(), &[0.5]);
    }

    #[test]
    fn horicycle_center_is_minus_one_plus_rho() {
        let chain = ChainSpec::horicycle(c(-1.0, 0.0), c(1.0, 0.0), RadiusProfile::Default).unwrap();
        let circle = chain.circle_at(0.25).unwrap();
        assert!((circle.radius - 0.75).abs() < 1e-15);
        assert!((circle.center - c(-1.0 + 0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn horicycle_tangency() {
        let h = horicycle_circle(c(0.0, 1.0), 0.5);
        assert!((h.center - c(0.0, 0.5)).norm() < 1e-12);
        assert!((h.center.norm() + h.radius - 1.0).abs() < 1e-12);
        assert!((h.center / h.center.norm() - c(0.0, 1.0)).norm() < 1e-12);
        let unit = horicycle_circle(c(0.6, 0.8), 1.0);
        assert!(unit.center.norm() < 1e-15 && unit.radius == 1.0);
    }

    #[test]
    fn mixed_chain_branches() {
        let b = c(0.6, 0.8);
        let chain = ChainSpec::mixed(b, RadiusProfile::Default).unwrap();
        for t in [0.1, 0.3, 0.5] {
            assert_eq!(chain.circle_at(t).unwrap().center, c(0.0, 0.0));
        }
        let mid = chain.circle_at(0.5 + 1e-12).unwrap();
        assert!(mid.center.norm() < 1e-9 && (mid.radius - 1.0).abs() < 1e-9);
        let end = chain.circle_at(1.0 - 1e-9).unwrap();
        assert!((end.center - b).norm() < 1e-8);
    }

    #[test]
    fn default_profile_quarter() {
        assert_eq!(RadiusProfile::Default.value(0.25), 0.75);
        let poly = RadiusProfile::Polynomial(vec![0.0, 4.0, -4.0]);
        assert!((poly.value(0.3) - RadiusProfile::Default.value(0.3)).abs() < 1e-15);
        assert!((poly.derivative(0.3) - RadiusProfile::Default.derivative(0.3)).abs() < 1e-15);
    }

    #[test]
    fn circle_at_errors() {
        let chain = ChainSpec::hyperbolic(c(0.3, 0.0), c(-0.4, 0.2), RadiusProfile::Default).unwrap();
        assert!(matches!(chain.circle_at(0.0), Err(Error::ParameterRange { .. })));
        assert!(matches!(chain.circle_at(1.2), Err(Error::ParameterRange { .. })));
        let flat = ChainSpec::custom(|t| Complex64::new(t, 0.0), |t| (t * (1.0 - t) * (t - 0.5)).max(0.0)).unwrap();
        assert!(matches!(flat.circle_at(0.25), Err(Error::DegenerateCircle { .. })));
    }

    #[test]
    fn invalid_profiles_rejected() {
        let bad_peak = RadiusProfile::Polynomial(vec![0.0, 2.0, -2.0]);
        assert!(ChainSpec::hyperbolic(c(0.1, 0.0), c(0.2, 0.0), bad_peak).is_err());
        let bumpy = RadiusProfile::Custom(Arc::new(|t: f64| {
            4.0 * t * (1.0 - t) + 2.0 * (std::f64::consts::TAU * 8.0 * t).sin() * t * (1.0 - t) * (t - 0.5).abs()
        }));
        assert!(bumpy.validate().is_err());
        assert!(ChainSpec::hyperbolic(c(1.0, 0.0), c(0.2, 0.0), RadiusProfile::Default).is_err());
        assert!(ChainSpec::horicycle(c(0.5, 0.0), c(1.0, 0.0), RadiusProfile::Default).is_err());
    }

    #[test]
    fn hyperbolic_family_derivatives_match_closed_form() {
        // First branch H(b, ρ(t)) with real b; chain rule against dc/dρ, dr/dρ.
        let b = 0.4;
        let chain = ChainSpec::hyperbolic(c(b, 0.0), c(-0.2, 0.1), RadiusProfile::Default).unwrap();
        for t in [0.1, 0.2, 0.35] {
            let rho = RadiusProfile::Default.value(t);
            let drho = RadiusProfile::Default.derivative(t);
            let den = 1.0 - b * b * rho * rho;
            let dc = -2.0 * b * rho * (1.0 - b * b) / (den * den);
            let dr = (1.0 - b * b) * (1.0 + b * b * rho * rho) / (den * den);
            let (fc, fr) = chain.derivatives(t);
            assert!((fc - c(dc * drho, 0.0)).norm() < 1e-14);
            assert!((fr - dr * drho).abs() < 1e-14);
            let circle = hyperbolic_circle_params(c(b, 0.0), rho).unwrap();
            assert!((circle.center.re - b * (1.0 - rho * rho) / den).abs() < 1e-15);
            assert!((circle.radius - rho * (1.0 - b * b) / den).abs() < 1e-15);
        }
    }

    #[test]
    fn junction_report_default_profile_is_c1() {
        let chain = ChainSpec::horicycle(c(-1.0, 0.0), c(1.0, 0.0), RadiusProfile::Default).unwrap();
        assert!(chain.junction().unwrap().c1);
        let kink = RadiusProfile::Custom(Arc::new(|t: f64| 1.0 - (1.0 - 2.0 * t).abs()));
        let chain = ChainSpec::horicycle(c(-1.0, 0.0), c(1.0, 0.0), kink).unwrap();
        let j = chain.junction().unwrap();
        assert!(!j.c1 && (j.left_slope - 2.0).abs() < 1e-6 && (j.right_slope + 2.0).abs() < 1e-6);
    }

    #[test]
    fn tabulated_interpolates() {
        let rows: Vec<_> = (0..=4)
            .map(|j| {
                let t = j as f64 / 4.0;
                (t, Complex64::new(t, 0.0), t * (1.0 - t))
            })
            .collect();
        let chain = ChainSpec::tabulated(rows).unwrap();
        let circle = chain.circle_at(0.375).unwrap();
        assert!((circle.center.re - 0.375).abs() < 1e-14);
        assert!((circle.radius - 0.5 * (0.1875 + 0.25)).abs() < 1e-14);
        assert!(ChainSpec::tabulated(vec![(0.0, c(0.0, 0.0), 0.0), (1.0, c(1.0, 0.0), 0.0)]).is_err());
    }
}
