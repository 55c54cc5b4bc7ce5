//! Registry of test functions with exact `∂/∂z̄`, exact circle extensions
//! and declared polyanalytic order where known.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::chain::Circle;
use crate::laurent::{analyze_circle, MeromorphicExtension};
use crate::polyfit::Form;
use crate::{ComplexFn, Error, Result};

/// Exact extension into `C(c, r)` truncated to band `K`.
pub type ExtensionFn = Arc<dyn Fn(Complex64, f64, usize) -> MeromorphicExtension + Send + Sync>;

/// Default centers of the `conj_poly` entry.
pub const CONJ_POLY_CENTERS: [Complex64; 2] = [Complex64::new(0.4, 0.0), Complex64::new(-0.3, 0.5)];

/// Polyanalytic polynomial `Σ β_{jk} z̄^j z^k`, `β[j][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyanalyticPoly {
    pub beta: Vec<Vec<Complex64>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PolyanalyticPoly {
    pub fn new(beta: Vec<Vec<Complex64>>) -> Self {
        PolyanalyticPoly { beta }
    }

    /// `z̄^j` times the analytic polynomial with ascending coefficients `h`.
    pub fn conj_times(j: usize, h: &[Complex64]) -> Self {
        let mut beta = vec![vec![]; j + 1];
        beta[j] = h.to_vec();
        PolyanalyticPoly { beta }
    }

    pub fn order(&self) -> usize {
        self.beta.iter().rposition(|row| row.iter().any(|b| b.norm() > 0.0)).unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        self.beta.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, row| acc * zb + horner(row, z))
    }

    pub fn dbar(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        self.beta
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, row)| horner(row, z) * j as f64 * zb.powi(j as i32 - 1))
            .sum()
    }

    /// Laurent series in `w` of the substitution `z = c + rw`, `z̄ = c̄ + r/w`.
    pub fn extension(&self, center: Complex64, radius: f64, band: usize) -> MeromorphicExtension {
        let nu = self.order();
        let mut series = vec![Complex64::new(0.0, 0.0); nu + band + 1];
        for (j, row) in self.beta.iter().enumerate() {
            for (k, &b) in row.iter().enumerate() {
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..=j {
                    let left = b * binomial(j, i) * center.conj().powi((j - i) as i32) * radius.powi(i as i32);
                    for l in 0..=k {
                        let idx = nu + l - i;
                        if l as i64 - i as i64 <= band as i64 {
                            series[idx] += left * binomial(k, l) * center.powi((k - l) as i32) * radius.powi(l as i32);
                        }
                    }
                }
            }
        }
        MeromorphicExtension::new(center, radius, nu, series)
    }
}

fn horner(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// A test function with optional exact oracles.
#[derive(Clone)]
pub struct TestFunction {
    pub id: String,
    pub description: String,
    value: ComplexFn,
    exact_dbar: Option<ComplexFn>,
    exact_extension: Option<ExtensionFn>,
    /// Polyanalytic order, in the form given by `form`.
    pub declared_order: Option<usize>,
    pub form: Form,
    /// Isolated zeros of finite order only, none on the test chains' circles.
    pub regular: bool,
    /// Circles centered here admit analytic extensions (`conj_poly`).
    pub special_centers: Vec<Complex64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("declared_order", &self.declared_order)
            .field("form", &self.form)
            .field("regular", &self.regular)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn new(id: &str, description: &str, value: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        TestFunction {
            id: id.into(),
            description: description.into(),
            value: Arc::new(value),
            exact_dbar: None,
            exact_extension: None,
            declared_order: None,
            form: Form::Euclidean,
            regular: true,
            special_centers: Vec::new(),
        }
    }

    fn from_poly(id: &str, description: &str, poly: PolyanalyticPoly) -> Self {
        let (p1, p2, p3) = (poly.clone(), poly.clone(), poly.clone());
        let mut f = TestFunction::new(id, description, move |z| p1.eval(z));
        f.exact_dbar = Some(Arc::new(move |z| p2.dbar(z)));
        f.exact_extension = Some(Arc::new(move |c, r, k| p3.extension(c, r, k)));
        f.declared_order = Some(poly.order());
        f
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.value)(z)
    }

    pub fn value_fn(&self) -> ComplexFn {
        self.value.clone()
    }

    pub fn has_exact_dbar(&self) -> bool {
        self.exact_dbar.is_some()
    }

    pub fn exact_dbar(&self, z: Complex64) -> Option<Complex64> {
        self.exact_dbar.as_ref().map(|g| g(z))
    }

    pub fn dbar_fn(&self) -> Option<ComplexFn> {
        self.exact_dbar.clone()
    }

    pub fn exact_extension(&self, center: Complex64, radius: f64, band: usize) -> Option<MeromorphicExtension> {
        self.exact_extension.as_ref().map(|e| e(center, radius, band))
    }

    /// Checks the exact `∂/∂z̄` against finite differences at 100
    /// quasi-random annulus points (tolerance `1e-7`) and the exact extension
    /// against sampled Laurent data on two circles (tolerance `1e-9`).
    pub fn self_check(&self) -> Result<()> {
        if let Some(g) = &self.exact_dbar {
            let pts = crate::polyfit::annulus_points(100, 0.3, 0.9);
            for z in pts {
                let num = crate::dbar::dbar_numeric(&*self.value, z, crate::defaults::DBAR_H)?;
                let err = (num - g(z)).norm();
                if err > 1e-7 * (1.0 + g(z).norm()) {
                    return Err(Error::Inconsistent(format!("{}: exact dbar off by {err:e} at {z}", self.id)));
                }
            }
        }
        if let Some(e) = &self.exact_extension {
            let band = 32;
            for circle in [Circle::new(Complex64::new(0.2, 0.1), 0.3, 0.0), Circle::new(Complex64::new(-0.5, 0.4), 0.2, 0.0)] {
                let data = analyze_circle(&*self.value, &circle, 128, band)?;
                let ext = e(circle.center, circle.radius, band);
                for k in -(band as i64)..=band as i64 {
                    let err = (data.coeff(k) - ext.coeff(k)).norm();
                    if err > 1e-9 {
                        return Err(Error::Inconsistent(format!("{}: extension coefficient {k} off by {err:e}", self.id)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Value-only function from samples on a rectangular grid, evaluated by
    /// bilinear interpolation (`NaN` outside the grid).
    pub fn tabulated(id: &str, grid: TabulatedGrid) -> Result<Self> {
        grid.validate()?;
        let mut f = TestFunction::new(id, "tabulated samples", move |z| grid.eval(z));
        f.regular = false;
        Ok(f)
    }
}

/// Samples `values[iy * nx + ix]` at `x0 + ix·dx`, `y0 + iy·dy`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TabulatedGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Complex64>,
}

impl TabulatedGrid {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || self.values.len() != self.nx * self.ny || !(self.x1 > self.x0 && self.y1 > self.y0) {
            return Err(Error::Config("tabulated grid needs nx, ny ≥ 2, nx·ny values and increasing bounds".into()));
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let fx = (z.re - self.x0) / (self.x1 - self.x0) * (self.nx - 1) as f64;
        let fy = (z.im - self.y0) / (self.y1 - self.y0) * (self.ny - 1) as f64;
        let eps = 1e-12;
        if !(fx >= -eps && fy >= -eps && fx <= (self.nx - 1) as f64 + eps && fy <= (self.ny - 1) as f64 + eps) {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        let (sx, sy) = ((fx - ix as f64).clamp(0.0, 1.0), (fy - iy as f64).clamp(0.0, 1.0));
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        v(ix, iy) * (1.0 - sx) * (1.0 - sy)
            + v(ix + 1, iy) * sx * (1.0 - sy)
            + v(ix, iy + 1) * (1.0 - sx) * sy
            + v(ix + 1, iy + 1) * sx * sy
    }

    /// Samples `f` on the grid.
    pub fn sample(f: impl Fn(Complex64) -> Complex64, x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let re = x.0 + (x.1 - x.0) * i as f64 / (nx - 1) as f64;
                let im = y.0 + (y.1 - y.0) * j as f64 / (ny - 1) as f64;
                values.push(f(Complex64::new(re, im)));
            }
        }
        TabulatedGrid { x0: x.0, x1: x.1, y0: y.0, y1: y.1, nx, ny, values }
    }
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ascending coefficients of `Π (z - c_j)`.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![cx(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![cx(0.0, 0.0); p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * r;
        }
        p = next;
    }
    p
}

/// `z̄ Π (z - c_j)`: analytic inside every circle centered at some `c_j`.
pub fn conj_poly(centers: &[Complex64]) -> TestFunction {
    let mut f = TestFunction::from_poly(
        "conj_poly",
        "conj(z) * prod (z - c_j)",
        PolyanalyticPoly::conj_times(1, &poly_from_roots(centers)),
    );
    f.special_centers = centers.to_vec();
    f
}

/// Analytic polynomial `2 + z + 0.3z²`, nonvanishing on the closed unit disc
/// and on the test chains.
pub const ANALYTIC_P: [Complex64; 3] = [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.0)];

/// Components of the `hyper_form` entry: `h_0 = 1 + z`, `h_1 = z² - 0.5`.
pub const HYPER_FORM: [[Complex64; 3]; 2] = [
    [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(-0.5, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

pub const BUILTIN_IDS: [&str; 11] = [
    "conj",
    "conj_poly",
    "abs2",
    "conj_sq",
    "poly_mix",
    "analytic_p",
    "exp_conj",
    "hyper_form",
    "one_minus_abs2",
    "conj_h",
    "conj_sq_z",
];

pub fn builtin(id: &str) -> Result<TestFunction> {
    let one = cx(1.0, 0.0);
    let zero = cx(0.0, 0.0);
    let f = match id {
        "conj" => TestFunction::from_poly(id, "conj(z)", PolyanalyticPoly::conj_times(1, &[one])),
        "conj_poly" => conj_poly(&CONJ_POLY_CENTERS),
        "abs2" => TestFunction::from_poly(id, "|z|^2", PolyanalyticPoly::conj_times(1, &[zero, one])),
        "conj_sq" => TestFunction::from_poly(id, "conj(z)^2", PolyanalyticPoly::conj_times(2, &[one])),
        "poly_mix" => TestFunction::from_poly(id, "1 + conj(z) z^2", PolyanalyticPoly::new(vec![vec![one], vec![zero, zero, one]])),
        "analytic_p" => TestFunction::from_poly(id, "2 + z + 0.3 z^2", PolyanalyticPoly::new(vec![ANALYTIC_P.to_vec()])),
        "conj_h" => TestFunction::from_poly(id, "conj(z) (2 + z + 0.3 z^2)", PolyanalyticPoly::conj_times(1, &ANALYTIC_P)),
        "conj_sq_z" => TestFunction::from_poly(id, "conj(z)^2 z", PolyanalyticPoly::conj_times(2, &[zero, one])),
        "one_minus_abs2" => {
            let mut f = TestFunction::from_poly(id, "1 - |z|^2", PolyanalyticPoly::new(vec![vec![one], vec![zero, -one]]));
            // Vanishes on the unit circle, which the test chains touch.
            f.regular = false;
            f
        }
        "exp_conj" => {
            let mut f = TestFunction::new(id, "exp(conj(z))", |z| z.conj().exp());
            f.exact_dbar = Some(Arc::new(|z| z.conj().exp()));
            f.exact_extension = Some(Arc::new(move |c, r, band| {
                let mut series = vec![zero; 2 * band + 1];
                let mut term = c.conj().exp();
                for k in 0..=band {
                    series[band - k] = term;
                    term *= r / (k + 1) as f64;
                }
                MeromorphicExtension::new(c, r, band, series)
            }));
            f
        }
        "hyper_form" => {
            let h = |j: usize, z: Complex64| horner(&HYPER_FORM[j], z);
            let mut f = TestFunction::new(id, "(1 + z) + (z^2 - 0.5) / (1 - |z|^2)", move |z| {
                let s = 1.0 - z.norm_sqr();
                h(0, z) + h(1, z) / s
            });
            f.exact_dbar = Some(Arc::new(move |z| {
                let s = 1.0 - z.norm_sqr();
                h(1, z) * z / (s * s)
            }));
            f.declared_order = Some(1);
            f.form = Form::Hyperbolic;
            f
        }
        _ => return Err(Error::UnknownFunction(id.into())),
    };
    Ok(f)
}

/// Every builtin entry, in registry order.
pub fn registry() -> Vec<TestFunction> {
    BUILTIN_IDS.iter().map(|id| builtin(id).expect("registered id")).collect()
}
