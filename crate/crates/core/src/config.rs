//! Serializable experiment description: the chain, the function, grids,
//! tolerances and evaluation points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainSpec, RadiusProfile};
use crate::defaults;
use crate::{Error, Result};

/// Chain description; complex numbers are `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChainConfig {
    Hyperbolic {
        a: Complex64,
        b: Complex64,
        /// Polynomial radius profile, ascending coefficients.
        #[serde(default)]
        profile: Option<Vec<f64>>,
    },
    Horicycle {
        a: Complex64,
        b: Complex64,
        #[serde(default)]
        profile: Option<Vec<f64>>,
    },
    Mixed {
        b: Complex64,
        #[serde(default)]
        profile: Option<Vec<f64>>,
    },
    /// Straight-line centers with radius `amplitude·4t(1 - t)`.
    Translating { a: Complex64, b: Complex64, amplitude: f64 },
    /// Chain whose inner-root image runs along the segment `[a, b]`.
    Segment { a: Complex64, b: Complex64 },
    /// Rows `[t, Re c, Im c, r]`, linearly interpolated.
    Tabulated { rows: Vec<[f64; 4]> },
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig::Hyperbolic { a: Complex64::new(0.3, 0.0), b: Complex64::new(-0.4, 0.2), profile: None }
    }
}

fn profile(p: &Option<Vec<f64>>) -> RadiusProfile {
    p.clone().map_or(RadiusProfile::Default, RadiusProfile::Polynomial)
}

impl ChainConfig {
    pub fn build(&self) -> Result<ChainSpec> {
        match self {
            ChainConfig::Hyperbolic { a, b, profile: p } => ChainSpec::hyperbolic(*a, *b, profile(p)),
            ChainConfig::Horicycle { a, b, profile: p } => ChainSpec::horicycle(*a, *b, profile(p)),
            ChainConfig::Mixed { b, profile: p } => ChainSpec::mixed(*b, profile(p)),
            ChainConfig::Translating { a, b, amplitude } => chain::translating(*a, *b, *amplitude),
            ChainConfig::Segment { a, b } => chain::segment_tracing(*a, *b),
            ChainConfig::Tabulated { rows } => {
                ChainSpec::tabulated(rows.iter().map(|r| (r[0], Complex64::new(r[1], r[2]), r[3])).collect())
            }
        }
    }

    /// Short name of the preset, e.g. for file names.
    pub fn name(&self) -> &'static str {
        match self {
            ChainConfig::Hyperbolic { .. } => "hyperbolic",
            ChainConfig::Horicycle { .. } => "horicycle",
            ChainConfig::Mixed { .. } => "mixed",
            ChainConfig::Translating { .. } => "translating",
            ChainConfig::Segment { .. } => "segment",
            ChainConfig::Tabulated { .. } => "tabulated",
        }
    }

    /// Named presets with the default parameters of each family.
    pub fn preset(name: &str) -> Result<Self> {
        let c = Complex64::new;
        Ok(match name {
            "hyperbolic" => ChainConfig::default(),
            "horicycle" => ChainConfig::Horicycle { a: c(-1.0, 0.0), b: c(1.0, 0.0), profile: None },
            "mixed" => ChainConfig::Mixed { b: c(0.6, 0.8), profile: None },
            "translating" => ChainConfig::Translating { a: c(0.5, 0.0), b: c(1.5, 0.0), amplitude: 0.25 },
            "segment" => ChainConfig::Segment { a: c(-0.5, 0.1), b: c(0.4, 0.3) },
            other => return Err(Error::Config(format!("unknown chain preset {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Parameter samples.
    pub nt: usize,
    /// Angular samples for quadrature and identity checks.
    pub ntheta: usize,
    /// Samples per circle for Laurent analysis.
    pub n: usize,
    /// Retained Laurent band `K`.
    pub band: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nt: 512, ntheta: 256, n: 1024, band: 256 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Relative tail energy for extendibility.
    pub merom: f64,
    /// Point-cloud resolution; derived from the cloud when absent.
    pub epsilon: Option<f64>,
    /// Fit residual for order detection.
    pub order: f64,
    /// Maximum `|I(q)|` and branch-balance modulus for a pass.
    pub balance: f64,
    /// Maximum Cramer-identity residual for a pass.
    pub identity: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { merom: defaults::MEROM_TOL, epsilon: None, order: defaults::ORDER_TOL, balance: 1e-3, identity: 1e-5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub samples: usize,
    pub degree: usize,
    pub nu_max: usize,
    pub inner: f64,
    pub outer: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            samples: 2000,
            degree: defaults::FIT_DEGREE,
            nu_max: 6,
            inner: defaults::FIT_ANNULUS.0,
            outer: defaults::FIT_ANNULUS.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub chain: ChainConfig,
    /// Registry id of the test function.
    pub function: String,
    /// Tabulated function samples (JSON grid file), overriding `function`.
    pub function_file: Option<String>,
    pub nu: usize,
    pub grid: GridConfig,
    pub tol: ToleranceConfig,
    pub fit: FitConfig,
    pub q_set: Vec<Complex64>,
    pub out: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let c = Complex64::new;
        ExperimentConfig {
            chain: ChainConfig::default(),
            function: "conj".into(),
            function_file: None,
            nu: 1,
            grid: GridConfig::default(),
            tol: ToleranceConfig::default(),
            fit: FitConfig::default(),
            q_set: vec![c(3.0, 0.0), c(0.0, 3.0), c(-3.0, 0.0), c(2.0, 2.0)],
            out: "out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        for (name, v) in [("nt", g.nt), ("ntheta", g.ntheta), ("n", g.n)] {
            if !v.is_power_of_two() || v < 8 {
                return Err(Error::Config(format!("grid.{name} = {v} must be a power of two ≥ 8")));
            }
        }
        if g.n < 2 * g.band + 2 {
            return Err(Error::Config(format!("grid.n = {} must be at least 2·band + 2 = {}", g.n, 2 * g.band + 2)));
        }
        if self.nu > g.band {
            return Err(Error::Config(format!("nu = {} exceeds the band {}", self.nu, g.band)));
        }
        let t = &self.tol;
        let eps_ok = t.epsilon.is_none_or(|e| e > 0.0);
        if !(t.merom > 0.0 && t.order > 0.0 && t.balance > 0.0 && t.identity > 0.0 && eps_ok) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let f = &self.fit;
        if !(0.0 <= f.inner && f.inner < f.outer) {
            return Err(Error::Config("fit annulus needs 0 ≤ inner < outer".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_with_defaults() {
        let text = r#"
            function = "conj_sq"
            nu = 2
            [chain]
            kind = "horicycle"
            a = [-1.0, 0.0]
            b = [1.0, 0.0]
            [grid]
            nt = 256
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.grid.nt, 256);
        assert_eq!(cfg.grid.band, 256);
        assert_eq!(cfg.function, "conj_sq");
        cfg.validate().unwrap();
        let chain = cfg.chain.build().unwrap();
        assert_eq!(chain.endpoint_b(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.nt = 500;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.tol.merom = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.grid.band = 1024;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_build() {
        for name in ["hyperbolic", "horicycle", "mixed", "translating", "segment"] {
            ChainConfig::preset(name).unwrap().build().unwrap();
        }
        assert!(ChainConfig::preset("spiral").is_err());
    }

    #[test]
    fn tabulated_rows() {
        let rows: Vec<[f64; 4]> = (0..=8).map(|j| {
            let t = j as f64 / 8.0;
            [t, t, 0.0, 0.5 * t * (1.0 - t)]
        }).collect();
        let chain = ChainConfig::Tabulated { rows }.build().unwrap();
        assert!((chain.radius(0.5) - 0.125).abs() < 1e-15);
    }
}
