//! `∂f/∂z̄` on circle boundaries: finite-difference reference values, the
//! Cramer-rule expression through the boundary data `K(w,t)` of the chain,
//! and the center-order bookkeeping of `g = ∂f/∂z̄`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainSpec, Circle};
use crate::defaults::{DISCRIMINANT_REL, MEROM_TOL, ORDER_FLOOR};
use crate::discriminant::{discriminant_eval, DiscriminantCloud};
use crate::functions::TestFunction;
use crate::laurent::{analyze_circle, synthesize, LaurentData};
use crate::{Error, Result};

/// `½(∂_x + i∂_y) f` with fourth-order centered stencils.
pub fn dbar_numeric<F>(f: &F, z: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!("stencil step {h} must be positive")));
    }
    let stencil = |dir: Complex64| -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, wgt) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let p = z + dir * (k * h);
            let v = f(p);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Domain(format!("stencil point {p} outside the function's domain")));
            }
            acc += v * wgt;
        }
        Ok(acc / (12.0 * h))
    };
    let dx = stencil(Complex64::new(1.0, 0.0))?;
    let dy = stencil(Complex64::new(0.0, 1.0))?;
    Ok((dx + Complex64::i() * dy) * 0.5)
}

/// Finite-difference stencil for `t`-derivatives of Laurent coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// `(a(t+h) - a(t-h)) / 2h`.
    Second,
    /// `(-a(t+2h) + 8a(t+h) - 8a(t-h) + a(t-2h)) / 12h`.
    Fourth,
}

impl Stencil {
    fn reach(self) -> f64 {
        match self {
            Stencil::Second => 1.0,
            Stencil::Fourth => 2.0,
        }
    }
}

/// Laurent data at `t` and the `t`-derivative of every coefficient.
pub fn coefficient_derivative<F>(
    chain: &ChainSpec,
    f: &F,
    t: f64,
    n: usize,
    band: usize,
    h: f64,
    stencil: Stencil,
) -> Result<(LaurentData, Vec<Complex64>)>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let at = |s: f64| -> Result<LaurentData> { analyze_circle(f, &chain.circle_at(s)?, n, band) };
    let data = at(t)?;
    let (p1, m1) = (at(t + h)?, at(t - h)?);
    let deriv = match stencil {
        Stencil::Second => p1.coeffs().iter().zip(m1.coeffs()).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
        Stencil::Fourth => {
            let (p2, m2) = (at(t + 2.0 * h)?, at(t - 2.0 * h)?);
            (0..data.coeffs().len())
                .map(|i| {
                    (-p2.coeffs()[i] + p1.coeffs()[i] * 8.0 - m1.coeffs()[i] * 8.0 + m2.coeffs()[i]) / (12.0 * h)
                })
                .collect()
        }
    };
    Ok((data, deriv))
}

/// Whether `d(w,t)` is too small for the Cramer quotient.
pub fn near_discriminant(dc: Complex64, dr: f64, w: Complex64) -> bool {
    discriminant_eval(dc, dr, w).norm() <= DISCRIMINANT_REL * (dc.norm() + 2.0 * dr.abs())
}

/// `[i r w² K_t - w(c′ + r′w) K_ψ] / (i r d(w,t))` with `K_ψ = Σ ik a_k w^k`
/// and `K_t = Σ a_k′ w^k`, at `z = c(t) + r(t)w`, `|w| = 1`.
pub fn cramer_rhs(chain: &ChainSpec, t: f64, data: &LaurentData, dcoeffs: &[Complex64], w: Complex64) -> Result<Complex64> {
    let (dc, dr) = chain.derivatives(t);
    if near_discriminant(dc, dr, w) {
        return Err(Error::NearDiscriminant { t, w });
    }
    let band = data.band as i64;
    let mut k_psi = Complex64::new(0.0, 0.0);
    let mut k_t = Complex64::new(0.0, 0.0);
    for (i, (&a, &da)) in data.coeffs().iter().zip(dcoeffs).enumerate() {
        let k = i as i64 - band;
        let wk = w.powi(k as i32);
        k_psi += Complex64::new(0.0, k as f64) * a * wk;
        k_t += da * wk;
    }
    Ok(cramer_quotient(data.radius, dc, dr, w, k_psi, k_t))
}

fn cramer_quotient(r: f64, dc: Complex64, dr: f64, w: Complex64, k_psi: Complex64, k_t: Complex64) -> Complex64 {
    let ir = Complex64::new(0.0, r);
    (ir * w * w * k_t - w * (dc + dr * w) * k_psi) / (ir * discriminant_eval(dc, dr, w))
}

/// Which reference `∂f/∂z̄` the residuals were measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Exact,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DbarReport {
    pub t: f64,
    pub max_identity_residual: f64,
    pub n_points: usize,
    /// Boundary points dropped because `d(w,t)` nearly vanishes there.
    pub n_excluded: usize,
    pub reference: Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityOptions {
    pub n_theta: usize,
    /// Step of the coefficient differences in `t`.
    pub h: f64,
    pub stencil: Stencil,
}

impl IdentityOptions {
    /// Step tied to a grid of `nt` parameters.
    pub fn for_grid(nt: usize) -> Self {
        IdentityOptions { n_theta: 128, h: 1.0 / nt as f64, stencil: Stencil::Fourth }
    }
}

/// Parameters of `t_grid` where the difference stencil stays inside one
/// smooth piece of the chain.
pub fn stencil_safe(chain: &ChainSpec, t_grid: &[f64], h: f64, stencil: Stencil) -> Vec<f64> {
    let reach = stencil.reach() * h;
    t_grid
        .iter()
        .copied()
        .filter(|&t| t - reach > 0.0 && t + reach < 1.0)
        .filter(|&t| chain.singular_params().iter().all(|s| (t - s).abs() > reach + chain.exclusion_halfwidth()))
        .collect()
}

/// Compares the Cramer expression with a reference `∂f/∂z̄` at `n_theta`
/// boundary points of each admissible circle.
pub fn identity_check(chain: &ChainSpec, f: &TestFunction, t_grid: &[f64], opts: IdentityOptions) -> Result<Vec<DbarReport>> {
    let n = opts.n_theta;
    let band = n / 4;
    let value = f.value_fn();
    let ts = stencil_safe(chain, t_grid, opts.h, opts.stencil);
    ts.par_iter()
        .map(|&t| {
            let (data, deriv) = coefficient_derivative(chain, &*value, t, n, band, opts.h, opts.stencil)?;
            let k = band as i64;
            let psi: Vec<Complex64> = data
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, &a)| Complex64::new(0.0, (i as i64 - k) as f64) * a)
                .collect();
            let k_psi = synthesize(&psi, n);
            let k_t = synthesize(&deriv, n);
            let (dc, dr) = chain.derivatives(t);
            let circle = Circle::new(data.center, data.radius, t);
            let mut worst = 0.0f64;
            let mut excluded = 0;
            let mut reference = Reference::Exact;
            for j in 0..n {
                let w = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
                if near_discriminant(dc, dr, w) {
                    excluded += 1;
                    continue;
                }
                let z = circle.point(w);
                let exact = match f.exact_dbar(z) {
                    Some(g) => g,
                    None => {
                        reference = Reference::Numeric;
                        dbar_numeric(&*value, z, crate::defaults::DBAR_H)?
                    }
                };
                let rhs = cramer_quotient(data.radius, dc, dr, w, k_psi[j], k_t[j]);
                worst = worst.max((rhs - exact).norm());
            }
            Ok(DbarReport { t, max_identity_residual: worst, n_points: n - excluded, n_excluded: excluded, reference })
        })
        .collect()
}

/// Center behavior of one circle's Laurent data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CenterReport {
    pub t: f64,
    pub center_pole_order: usize,
    pub center_zero_order: usize,
    /// Off-center poles inside the disc, in `z`.
    pub extra_poles: Vec<Complex64>,
    /// Distance of the farthest extra pole from the discriminant cloud.
    pub nearest_discriminant_distance: Option<f64>,
    /// The discriminant inner root at `t`, when one exists.
    pub discriminant_root_used: Option<Complex64>,
    pub zero_function: bool,
}

/// First index whose coefficient exceeds `ORDER_FLOOR` times the largest.
fn leading_index(data: &LaurentData, coeffs: &[Complex64]) -> Option<i64> {
    let max = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    coeffs.iter().position(|a| a.norm() > ORDER_FLOOR * max).map(|i| i as i64 - data.band as i64)
}

/// Splits a geometric tail `a_{-k} = β e^{k-1}` (a simple pole at `w = e`)
/// off the coefficients below `-keep`; `None` when the tail is not geometric.
fn strip_simple_pole(data: &LaurentData, keep: i64) -> Option<(Complex64, Vec<Complex64>)> {
    let band = data.band as i64;
    let max = data.coeffs().iter().map(|a| a.norm()).fold(0.0, f64::max);
    let tail: Vec<Complex64> = (keep + 1..=band).map(|k| data.coeff(-k)).take_while(|a| a.norm() > 1e-10 * max).collect();
    if tail.len() < 3 {
        return None;
    }
    let ratios: Vec<Complex64> = tail.windows(2).map(|p| p[1] / p[0]).collect();
    let e = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - e).norm()).fold(0.0, f64::max);
    if e.norm() >= 1.0 || spread > 1e-6 * e.norm().max(1e-3) {
        return None;
    }
    // β/(w - e) = Σ_{k≥1} β e^{k-1} w^{-k}; β from the first tail term.
    let beta = tail[0] / e.powi(keep as i32);
    let mut rest = data.coeffs().to_vec();
    for k in 1..=band {
        rest[(band - k) as usize] -= beta * e.powi(k as i32 - 1);
    }
    Some((e, rest))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoleReductionReport {
    pub pass: bool,
    pub zero_function: bool,
    pub max_center_pole_order: usize,
    pub circles: Vec<CenterReport>,
}

/// Center order and off-center poles of `g = ∂f/∂z̄` on each circle, for
/// `f` extendible with a center pole of order at most `ν`. Passes when:
/// `ν = 0`: `g` vanishes to order ≥ 2 at the center with at most one simple
/// extra pole; `ν > 0`: center pole order ≤ `ν - 1` and extra poles lie
/// within `epsilon` of `cloud`.
#[allow(clippy::too_many_arguments)]
pub fn pole_reduction_check<G>(
    chain: &ChainSpec,
    g: &G,
    nu: usize,
    t_grid: &[f64],
    n: usize,
    cloud: Option<&DiscriminantCloud>,
    epsilon: f64,
) -> Result<PoleReductionReport>
where
    G: Fn(Complex64) -> Complex64 + Sync + ?Sized,
{
    let band = n / 4;
    let circles: Vec<CenterReport> = t_grid
        .par_iter()
        .map(|&t| -> Result<CenterReport> {
            let circle = chain.circle_at(t)?;
            let data = analyze_circle(g, &circle, n, band)?;
            let (dc, dr) = chain.derivatives(t);
            let root = crate::discriminant::inner_root(dc, dr).0;
            let energy = data.energy();
            let scale = data.coeffs().len() as f64 * f64::EPSILON;
            if energy.sqrt() <= 1e-12 || data.coeffs().iter().all(|a| a.norm() <= scale) {
                return Ok(CenterReport {
                    t,
                    center_pole_order: 0,
                    center_zero_order: 0,
                    extra_poles: vec![],
                    nearest_discriminant_distance: None,
                    discriminant_root_used: root,
                    zero_function: true,
                });
            }
            let allowed = nu.saturating_sub(1) as i64;
            let tail: f64 = (allowed + 1..=band as i64).map(|k| data.coeff(-k).norm_sqr()).sum();
            let (coeffs, extra) = if tail <= MEROM_TOL * MEROM_TOL * energy || nu == 0 && tail == 0.0 {
                (data.coeffs().to_vec(), vec![])
            } else {
                match strip_simple_pole(&data, allowed) {
                    Some((e, rest)) => (rest, vec![circle.point(e)]),
                    None => {
                        let defect = (tail / energy).sqrt();
                        return Err(Error::Structural(format!(
                            "∂f/∂z̄ does not extend meromorphically into the circle at t = {t} (defect {defect:e})"
                        )));
                    }
                }
            };
            let lead = leading_index(&data, &coeffs).unwrap_or(0);
            let nearest = match (cloud, extra.is_empty()) {
                (Some(cloud), false) => Some(extra.iter().map(|&p| cloud.distance_to(p)).fold(0.0, f64::max)),
                _ => None,
            };
            Ok(CenterReport {
                t,
                center_pole_order: (-lead).max(0) as usize,
                center_zero_order: lead.max(0) as usize,
                extra_poles: extra,
                nearest_discriminant_distance: nearest,
                discriminant_root_used: root,
                zero_function: false,
            })
        })
        .collect::<Result<_>>()?;

    let zero_function = circles.iter().all(|c| c.zero_function);
    let max_center_pole_order = circles.iter().map(|c| c.center_pole_order).max().unwrap_or(0);
    let pass = circles.iter().filter(|c| !c.zero_function).all(|c| {
        if nu == 0 {
            c.center_pole_order == 0 && c.center_zero_order >= 2 && c.extra_poles.len() <= 1
        } else {
            c.center_pole_order < nu && c.nearest_discriminant_distance.map_or(c.extra_poles.is_empty() || cloud.is_none(), |d| d <= epsilon)
        }
    });
    Ok(PoleReductionReport { pass, zero_function, max_center_pole_order, circles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::RadiusProfile;
    use crate::functions::builtin;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hyper() -> ChainSpec {
        ChainSpec::hyperbolic(c(0.3, 0.0), c(-0.4, 0.2), RadiusProfile::Default).unwrap()
    }

    #[test]
    fn numeric_dbar_examples() {
        let z = c(0.3, -0.7);
        assert!((dbar_numeric(&|z: Complex64| z.conj(), z, 1e-3).unwrap() - 1.0).norm() < 1e-12);
        let p = |z: Complex64| z * z * z - z * 2.0 + 1.0;
        assert!(dbar_numeric(&p, z, 1e-3).unwrap().norm() < 1e-10);
        for z in crate::polyfit::annulus_points(100, 0.0, 2.0) {
            let g = dbar_numeric(&|z: Complex64| Complex64::from(z.norm_sqr()), z, 1e-3).unwrap();
            assert!((g - z).norm() < 1e-8);
        }
        let log = |z: Complex64| if z.re > 0.0 { z.ln() } else { c(f64::NAN, 0.0) };
        assert!(matches!(dbar_numeric(&log, c(0.001, 0.0), 1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn cramer_rhs_for_conj_is_one() {
        let chain = hyper();
        let f = |z: Complex64| z.conj();
        for t in [0.2, 0.37, 0.7] {
            let (data, deriv) = coefficient_derivative(&chain, &f, t, 64, 16, 1e-3, Stencil::Fourth).unwrap();
            for j in 0..8 {
                let w = Complex64::from_polar(1.0, 0.3 + j as f64 * 0.7);
                let v = cramer_rhs(&chain, t, &data, &deriv, w).unwrap();
                assert!((v - 1.0).norm() < 1e-6, "t = {t}: {v}");
            }
        }
    }

    #[test]
    fn cramer_rhs_analytic_and_abs2() {
        let chain = hyper();
        let t = 0.3;
        let an = |z: Complex64| 2.0 + z + z * z * 0.3;
        let (data, deriv) = coefficient_derivative(&chain, &an, t, 64, 16, 1e-3, Stencil::Fourth).unwrap();
        let w = Complex64::from_polar(1.0, 1.1);
        assert!(cramer_rhs(&chain, t, &data, &deriv, w).unwrap().norm() < 1e-6);
        let abs2 = |z: Complex64| Complex64::from(z.norm_sqr());
        let (data, deriv) = coefficient_derivative(&chain, &abs2, t, 64, 16, 1e-3, Stencil::Fourth).unwrap();
        let z = chain.circle_at(t).unwrap().point(w);
        assert!((cramer_rhs(&chain, t, &data, &deriv, w).unwrap() - z).norm() < 1e-6);
    }

    #[test]
    fn horicycle_double_root_is_excluded() {
        let chain = ChainSpec::horicycle(c(-1.0, 0.0), c(1.0, 0.0), RadiusProfile::Default).unwrap();
        let f = |z: Complex64| z.conj();
        let (data, deriv) = coefficient_derivative(&chain, &f, 0.25, 32, 8, 1e-3, Stencil::Second).unwrap();
        assert!(matches!(cramer_rhs(&chain, 0.25, &data, &deriv, c(-1.0, 0.0)), Err(Error::NearDiscriminant { .. })));
    }

    #[test]
    fn identity_check_conj_sq_z() {
        let chain = hyper();
        let f = builtin("conj_sq_z").unwrap();
        let grid = crate::grid::midpoint(64);
        let reports = identity_check(&chain, &f, &grid, IdentityOptions { n_theta: 64, h: 1.0 / 256.0, stencil: Stencil::Fourth }).unwrap();
        assert!(!reports.is_empty());
        let worst = reports.iter().map(|r| r.max_identity_residual).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
        assert!(reports.iter().all(|r| r.reference == Reference::Exact));
    }

    #[test]
    fn pole_reduction_examples() {
        let chain = hyper();
        let grid = crate::grid::analysis_grid(&chain, 64);
        // g = h for f = z̄h.
        let h = builtin("analytic_p").unwrap();
        let report = pole_reduction_check(&chain, &*h.value_fn(), 1, &grid, 64, None, 0.0).unwrap();
        assert!(report.pass && report.max_center_pole_order == 0);
        // g = 2z̄ for f = z̄².
        let g = |z: Complex64| z.conj() * 2.0;
        let report = pole_reduction_check(&chain, &g, 2, &grid, 64, None, 0.0).unwrap();
        assert!(report.pass);
        assert!(report.circles.iter().all(|c| c.center_pole_order == 1));
        // Analytic f: g = 0.
        let report = pole_reduction_check(&chain, &|_| c(0.0, 0.0), 0, &grid, 64, None, 0.0).unwrap();
        assert!(report.pass && report.zero_function);
    }

    #[test]
    fn extra_pole_is_located() {
        let chain = hyper();
        let t = 0.25;
        let circle = chain.circle_at(t).unwrap();
        let p = circle.point(c(0.3, 0.2));
        let g = move |z: Complex64| (z - p).inv() + z;
        let report = pole_reduction_check(&chain, &g, 1, &[t], 256, None, 0.0).unwrap();
        let extra = &report.circles[0].extra_poles;
        assert_eq!(extra.len(), 1);
        assert!((extra[0] - p).norm() < 1e-8);
        assert_eq!(report.circles[0].center_pole_order, 0);
        let bad = |z: Complex64| (z.conj() * 0.1).exp();
        assert!(matches!(pole_reduction_check(&chain, &bad, 1, &[t], 256, None, 0.0), Err(Error::Structural(_))));
    }
}
