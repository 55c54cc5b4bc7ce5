use std::path::Path;

use anyhow::{bail, Context as _, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use polychain::config::ExperimentConfig;
use polychain::dynamics::{self, BranchKind, IqOptions, TrackOptions};
use polychain::functions::{self, TabulatedGrid, TestFunction};
use polychain::laurent::{self, analyze_circle, merom_test};
use polychain::polyfit::{self, PolyDecomposition};
use polychain::{dbar, defaults, discriminant, grid, ChainSpec};

use crate::output::Output;
use crate::svg::{bounds, Plot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Violation,
}

impl Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Violation
        }
    }
}

pub struct Context {
    cfg: ExperimentConfig,
    chain: ChainSpec,
    f: TestFunction,
    out: Output,
}

fn load_function(cfg: &ExperimentConfig) -> Result<TestFunction> {
    match &cfg.function_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let grid: TabulatedGrid = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
            let id = Path::new(path).file_stem().map_or("tabulated".into(), |s| s.to_string_lossy().into_owned());
            Ok(TestFunction::tabulated(&id, grid)?)
        }
        None => Ok(functions::builtin(&cfg.function)?),
    }
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let chain = cfg.chain.build()?;
        let f = load_function(&cfg)?;
        let out = Output::create(Path::new(&cfg.out), &cfg)?;
        Ok(Context { cfg, chain, f, out })
    }

    fn finish(&self, verdict: Verdict, summary: &str) -> Verdict {
        println!("{summary}");
        for p in self.out.written() {
            println!("  wrote {}", p.display());
        }
        println!("verdict: {}", if verdict == Verdict::Pass { "pass" } else { "violation" });
        verdict
    }
}

fn pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

/// Equal-aspect plot framing the chain envelope and `extra` points, with a
/// sample of circles drawn in grey.
fn envelope_plot(title: &str, chain: &ChainSpec, extra: impl IntoIterator<Item = (f64, f64)>) -> Plot {
    let circles: Vec<_> = grid::interior(24).into_iter().filter_map(|t| chain.circle_at(t).ok()).collect();
    let mut pts: Vec<(f64, f64)> = extra.into_iter().collect();
    for c in &circles {
        pts.push((c.center.re - c.radius, c.center.im - c.radius));
        pts.push((c.center.re + c.radius, c.center.im + c.radius));
    }
    pts.push(pair(chain.endpoint_a()));
    pts.push(pair(chain.endpoint_b()));
    let (x, y) = bounds(pts);
    let mut plot = Plot::new(title, x, y).equal_aspect().labels("Re z", "Im z");
    for c in &circles {
        plot.circle(c.center.re, c.center.im, c.radius, "#999999");
    }
    plot
}

fn mark_endpoints(plot: &mut Plot, chain: &ChainSpec) {
    let (a, b) = (chain.endpoint_a(), chain.endpoint_b());
    plot.marker(a.re, a.im, "#1f4e9c", "a");
    plot.marker(b.re, b.im, "#1f4e9c", "b");
}

#[derive(Serialize)]
struct CloudRow {
    t: f64,
    re_s: f64,
    im_s: f64,
    abs_w: f64,
    component: usize,
}

pub fn discriminant(mut ctx: Context) -> Result<Verdict> {
    let chain = &ctx.chain;
    let ts = grid::interior(ctx.cfg.grid.nt);
    let cloud = discriminant::discriminant_set_with(chain, &ts, ctx.cfg.tol.epsilon);
    let (a, b) = (chain.endpoint_a(), chain.endpoint_b());
    let star = discriminant::condition_star(&cloud, a, b, cloud.epsilon);
    let regime = discriminant::classify_chain(chain, &grid::interior(ctx.cfg.grid.nt.min(256)));
    let rows: Vec<CloudRow> = cloud
        .points
        .iter()
        .zip(&cloud.labels)
        .map(|(p, &component)| CloudRow { t: p.t, re_s: p.s.re, im_s: p.s.im, abs_w: p.w.norm(), component })
        .collect();
    ctx.out.csv("discriminant.csv", &rows)?;

    let mut plot = envelope_plot("discriminant set", chain, rows.iter().map(|r| (r.re_s, r.im_s)));
    for r in &rows {
        plot.dot(r.re_s, r.im_s, "#c0392b", 2.0);
    }
    mark_endpoints(&mut plot, chain);
    ctx.out.svg("discriminant.svg", &plot)?;

    let components = cloud.components();
    ctx.out.json(
        "discriminant.json",
        &serde_json::json!({
            "chain": ctx.cfg.chain.name(),
            "condition_star": star.holds,
            "epsilon": star.epsilon,
            "n_components": star.n_components,
            "witness": star.witness,
            "components": components,
            "skipped": cloud.skipped,
            "regime": regime,
            "junction": chain.junction(),
        }),
    )?;
    let centroids: Vec<String> = components.iter().map(|c| format!("{:.6}", c.centroid)).collect();
    let summary = format!(
        "{} points, {} components [{}], ε = {:.3e}, condition (*) {}",
        rows.len(),
        components.len(),
        centroids.join(", "),
        star.epsilon,
        if star.holds { "holds" } else { "fails" }
    );
    Ok(ctx.finish(Verdict::from(star.holds), &summary))
}

#[derive(Serialize)]
struct DefectRow {
    t: f64,
    nu: usize,
    defect: f64,
}

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    m: usize,
    abs_moment: f64,
}

#[derive(Serialize)]
struct CoeffRow {
    t: f64,
    k: i64,
    re: f64,
    im: f64,
}

/// Coefficients `|k| ≤ COEFF_WINDOW` go to the coefficient table.
const COEFF_WINDOW: i64 = 16;

pub fn moment_test(mut ctx: Context) -> Result<Verdict> {
    let (nu, tol) = (ctx.cfg.nu, ctx.cfg.tol.merom);
    let (n, band) = (ctx.cfg.grid.n, ctx.cfg.grid.band);
    let ts = grid::analysis_grid(&ctx.chain, ctx.cfg.grid.nt);
    let value = ctx.f.value_fn();
    let chain = &ctx.chain;
    let per_t: Vec<(f64, Vec<f64>, Vec<f64>, Vec<CoeffRow>, bool)> = ts
        .par_iter()
        .map(|&t| -> Result<_> {
            let data = analyze_circle(&*value, &chain.circle_at(t)?, n, band)?;
            let defects: Vec<f64> =
                (0..=nu + 1).map(|v| merom_test(&data, v, tol).map(|r| r.defect)).collect::<polychain::Result<_>>()?;
            let pass = merom_test(&data, nu, tol)?.pass;
            let moments: Vec<f64> = (0..=(nu + 2).min(band - 1)).map(|m| laurent::moment(&data, m).map(|v| v.norm())).collect::<polychain::Result<_>>()?;
            let w = COEFF_WINDOW.min(band as i64);
            let coeffs = (-w..=w).map(|k| CoeffRow { t, k, re: data.coeff(k).re, im: data.coeff(k).im }).collect();
            Ok((t, defects, moments, coeffs, pass))
        })
        .collect::<Result<_>>()?;

    let defect_rows: Vec<DefectRow> =
        per_t.iter().flat_map(|(t, d, ..)| d.iter().enumerate().map(|(v, &defect)| DefectRow { t: *t, nu: v, defect })).collect();
    let moment_rows: Vec<MomentRow> =
        per_t.iter().flat_map(|(t, _, m, ..)| m.iter().enumerate().map(|(m, &abs_moment)| MomentRow { t: *t, m, abs_moment })).collect();
    let coeff_rows: Vec<&CoeffRow> = per_t.iter().flat_map(|p| p.3.iter()).collect();
    ctx.out.csv("defects.csv", &defect_rows)?;
    ctx.out.csv("moments.csv", &moment_rows)?;
    ctx.out.csv("coefficients.csv", &coeff_rows)?;

    let floor = 1e-17;
    let log = |d: f64| d.max(floor).log10();
    let (x, y) = bounds(defect_rows.iter().map(|r| (r.t, log(r.defect))).chain([(0.0, log(tol))]));
    let mut plot = Plot::new("extendibility defect", x, y).labels("t", "log10 defect");
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for v in 0..=nu + 1 {
        let pts: Vec<(f64, f64)> = per_t.iter().map(|p| (p.0, log(p.1[v]))).collect();
        plot.polyline(&pts, colors[v % colors.len()], v != nu);
    }
    plot.hline(log(tol), "#555555");
    ctx.out.svg("defects.svg", &plot)?;

    let failures: Vec<f64> = per_t.iter().filter(|p| !p.4).map(|p| p.0).collect();
    let max_defect = per_t.iter().map(|p| p.1[nu]).fold(0.0, f64::max);
    let pass = failures.is_empty();
    ctx.out.json(
        "moment_test.json",
        &serde_json::json!({
            "function": ctx.f.id,
            "nu": nu,
            "tol": tol,
            "circles": per_t.len(),
            "pass": pass,
            "max_defect": max_defect,
            "failures": failures.len(),
            "first_failure_t": failures.first(),
        }),
    )?;
    let summary = format!(
        "{} at ν = {nu}: {} of {} circles pass, max defect {max_defect:.3e}",
        ctx.f.id,
        per_t.len() - failures.len(),
        per_t.len()
    );
    Ok(ctx.finish(Verdict::from(pass), &summary))
}

#[derive(Serialize)]
struct BranchRow {
    branch_id: usize,
    kind: &'static str,
    t: f64,
    re_z: f64,
    im_z: f64,
    multiplicity: usize,
    traveling: bool,
}

fn track_options(cfg: &ExperimentConfig) -> TrackOptions {
    TrackOptions { n: cfg.grid.n, band: cfg.grid.band, tol: cfg.tol.merom, delta: defaults::TRAVEL_DELTA }
}

pub fn track(mut ctx: Context) -> Result<Verdict> {
    let chain = &ctx.chain;
    let ts = grid::analysis_grid(chain, ctx.cfg.grid.nt);
    let set = dynamics::track_branches(chain, &*ctx.f.value_fn(), ctx.cfg.nu, &ts, &track_options(&ctx.cfg))?;
    let (nz, np) = dynamics::count_traveling(&set);
    let ends = Some((chain.endpoint_a(), chain.endpoint_b()));
    let balance = dynamics::verify_zp_balance(&set, &ctx.cfg.q_set, ends)?;

    let kind = |k: BranchKind| if k == BranchKind::Zero { "zero" } else { "pole" };
    let rows: Vec<BranchRow> = set
        .branches
        .iter()
        .flat_map(|b| {
            b.samples.iter().map(move |s| BranchRow {
                branch_id: b.id,
                kind: kind(b.kind),
                t: s.t,
                re_z: s.z.re,
                im_z: s.z.im,
                multiplicity: s.multiplicity,
                traveling: b.traveling,
            })
        })
        .collect();
    ctx.out.csv("branches.csv", &rows)?;

    let mut plot = envelope_plot("zero (solid) and pole (dashed) branches", chain, rows.iter().map(|r| (r.re_z, r.im_z)));
    for b in &set.branches {
        let pts: Vec<(f64, f64)> = b.samples.iter().map(|s| pair(s.z)).collect();
        let color = if b.traveling { "#c0392b" } else { "#e59866" };
        plot.polyline(&pts, color, b.kind == BranchKind::Pole);
    }
    mark_endpoints(&mut plot, chain);
    ctx.out.svg("branches.svg", &plot)?;

    let balanced = nz == np && balance.max < ctx.cfg.tol.balance && set.winding_mismatches.is_empty();
    let values: Vec<_> = balance.values.iter().map(|(q, v)| serde_json::json!({ "q": q, "re": v.re, "im": v.im })).collect();
    ctx.out.json(
        "balance.json",
        &serde_json::json!({
            "function": ctx.f.id,
            "nu": ctx.cfg.nu,
            "traveling_zeros": nz,
            "traveling_poles": np,
            "balance": values,
            "max_balance": balance.max,
            "winding_checked": set.winding_checked,
            "winding_skipped": set.winding_skipped,
            "winding_mismatches": set.winding_mismatches,
            "stitched": set.stitched,
            "boundary_degenerate": set.boundary_degenerate,
            "pass": balanced,
        }),
    )?;
    let summary = format!(
        "{}: (N_g, M_g) = ({nz}, {np}), max branch balance {:.3e}, {} winding mismatches",
        ctx.f.id,
        balance.max,
        set.winding_mismatches.len()
    );
    Ok(ctx.finish(Verdict::from(balanced), &summary))
}

pub fn verify(mut ctx: Context) -> Result<Verdict> {
    let cfg = ctx.cfg.clone();
    let chain = &ctx.chain;
    let nu = cfg.nu;
    let mut notes: Vec<String> = vec![];

    let cloud = discriminant::discriminant_set_with(chain, &grid::interior(cfg.grid.nt), cfg.tol.epsilon);
    let star = discriminant::condition_star(&cloud, chain.endpoint_a(), chain.endpoint_b(), cloud.epsilon);
    if !star.holds {
        notes.push("condition (*) fails: a and b are joined inside the discriminant set".into());
    }

    let value = ctx.f.value_fn();
    let ts = grid::analysis_grid(chain, cfg.grid.nt);
    let defects: Vec<(f64, f64, bool)> = ts
        .par_iter()
        .map(|&t| -> Result<_> {
            let data = analyze_circle(&*value, &chain.circle_at(t)?, cfg.grid.n, cfg.grid.band)?;
            let r = merom_test(&data, nu, cfg.tol.merom)?;
            Ok((t, r.defect, r.pass))
        })
        .collect::<Result<_>>()?;
    let extendible = defects.iter().all(|d| d.2);
    let max_defect = defects.iter().map(|d| d.1).fold(0.0, f64::max);
    if !extendible {
        let t = defects.iter().find(|d| !d.2).map_or(0.0, |d| d.0);
        notes.push(format!("not extendible with a center pole of order ≤ {nu} (first at t = {t:.4}, max defect {max_defect:.3e})"));
    }

    // ∂f/∂z̄ pole reduction, only meaningful once f extends.
    let reduction = if !extendible {
        None
    } else if ctx.f.dbar_fn().is_none() && ctx.f.form == polyfit::Form::Euclidean && !ctx.f.regular {
        notes.push("pole reduction skipped: sampled data has no derivative oracle".into());
        None
    } else {
        let g: polychain::ComplexFn = match ctx.f.dbar_fn() {
            Some(g) => g,
            None => {
                let v = value.clone();
                std::sync::Arc::new(move |z| dbar::dbar_numeric(&*v, z, defaults::DBAR_H).unwrap_or(Complex64::new(f64::NAN, f64::NAN)))
            }
        };
        let red_ts = grid::analysis_grid(chain, cfg.grid.nt.min(128));
        match dbar::pole_reduction_check(chain, &*g, nu, &red_ts, cfg.grid.n.min(512), Some(&cloud), cloud.epsilon) {
            Ok(r) => {
                if !r.pass {
                    notes.push(format!("pole reduction fails (max center order {})", r.max_center_pole_order));
                }
                Some(r)
            }
            Err(e) => {
                notes.push(format!("pole reduction: {e}"));
                None
            }
        }
    };

    let fit = &cfg.fit;
    let samples = polyfit::sample_annulus(&*value, fit.samples, fit.inner, fit.outer);
    let order = polyfit::order_detect(&samples, fit.nu_max, fit.degree, cfg.tol.order, ctx.f.form)?;
    let dec = polyfit::fit(&samples, order.unwrap_or(nu).min(fit.nu_max), fit.degree, ctx.f.form)?;
    ctx.out.json("decomposition.json", &dec)?;
    let curve = polyfit::residual_curve(&samples, fit.nu_max, fit.degree, ctx.f.form)?;

    let hypotheses = star.holds && extendible;
    let conclusion = order.is_some_and(|o| o <= nu);
    if hypotheses && !conclusion {
        notes.push(format!("hypotheses hold but the detected order is {order:?}, not ≤ {nu}"));
    }
    ctx.out.json(
        "verify.json",
        &serde_json::json!({
            "function": ctx.f.id,
            "nu": nu,
            "condition_star": star.holds,
            "extendible": extendible,
            "max_defect": max_defect,
            "pole_reduction": reduction.as_ref().map(|r| serde_json::json!({
                "pass": r.pass,
                "zero_function": r.zero_function,
                "max_center_pole_order": r.max_center_pole_order,
            })),
            "detected_order": order,
            "residual_curve": curve,
            "fit_samples": "halton bases 2, 3",
            "implication_confirmed": hypotheses && conclusion,
            "notes": notes,
        }),
    )?;
    let summary = format!(
        "{} on {}: condition (*) {}, extendible at ν = {nu}: {}, detected order {}{}",
        ctx.f.id,
        cfg.chain.name(),
        star.holds,
        extendible,
        order.map_or("absent".into(), |o| o.to_string()),
        if notes.is_empty() { String::new() } else { format!("\n  {}", notes.join("\n  ")) }
    );
    Ok(ctx.finish(Verdict::from(hypotheses && conclusion), &summary))
}

#[derive(Serialize)]
struct IqRow {
    re_q: f64,
    im_q: f64,
    n_theta: usize,
    n_t: usize,
    re_i: f64,
    im_i: f64,
    abs_i: f64,
    excluded_fraction: f64,
}

pub fn iq(mut ctx: Context) -> Result<Verdict> {
    let cfg = ctx.cfg.clone();
    let value = ctx.f.value_fn();
    let levels: Vec<(usize, usize)> =
        [4, 2, 1].iter().map(|d| (cfg.grid.ntheta / d, cfg.grid.nt / d)).filter(|&(a, b)| a >= 8 && b >= 8).collect();
    if levels.is_empty() {
        bail!("grid too coarse for I(q)");
    }
    let mut rows = vec![];
    for &q in &cfg.q_set {
        for &(nth, nt) in &levels {
            let opts = IqOptions { n_theta: nth, n_t: nt, band: (nth / 4).min(cfg.grid.band), ..IqOptions::square(nth) };
            let r = dynamics::i_of_q(&ctx.chain, &*value, cfg.nu, q, &opts)?;
            rows.push(IqRow {
                re_q: q.re,
                im_q: q.im,
                n_theta: nth,
                n_t: nt,
                re_i: r.value.re,
                im_i: r.value.im,
                abs_i: r.value.norm(),
                excluded_fraction: r.excluded_fraction,
            });
        }
    }
    ctx.out.csv("iq.csv", &rows)?;

    let finest: Vec<&IqRow> = rows.chunks(levels.len()).filter_map(|c| c.last()).collect();
    let log = |v: f64| v.max(1e-17).log10();
    let (x, y) = bounds(rows.iter().map(|r| ((r.n_theta as f64).log2(), log(r.abs_i))));
    let mut plot = Plot::new("|I(q)| under refinement", x, y).labels("log2 N_theta", "log10 |I(q)|");
    for chunk in rows.chunks(levels.len()) {
        let pts: Vec<(f64, f64)> = chunk.iter().map(|r| ((r.n_theta as f64).log2(), log(r.abs_i))).collect();
        plot.polyline(&pts, "#1f77b4", false);
    }
    plot.hline(log(cfg.tol.balance), "#555555");
    ctx.out.svg("iq.svg", &plot)?;

    let max = finest.iter().map(|r| r.abs_i).fold(0.0, f64::max);
    let pass = max < cfg.tol.balance;
    let results: Vec<_> = finest
        .iter()
        .map(|r| serde_json::json!({ "q": [r.re_q, r.im_q], "re": r.re_i, "im": r.im_i, "excluded_fraction": r.excluded_fraction }))
        .collect();
    ctx.out.json(
        "iq.json",
        &serde_json::json!({ "function": ctx.f.id, "nu": cfg.nu, "results": results, "max_abs": max, "tol": cfg.tol.balance, "pass": pass }),
    )?;
    let summary = format!("{}: max |I(q)| = {max:.3e} over {} points at N_θ × N_t = {:?}", ctx.f.id, finest.len(), levels.last().unwrap());
    Ok(ctx.finish(Verdict::from(pass), &summary))
}

pub fn list_functions() {
    println!("{:<15} {:>5} {:<10} {:<8} {:<6} description", "id", "order", "form", "regular", "dbar");
    for f in functions::registry() {
        let order = f.declared_order.map_or("-".into(), |o| o.to_string());
        let form = format!("{:?}", f.form).to_lowercase();
        println!("{:<15} {:>5} {:<10} {:<8} {:<6} {}", f.id, order, form, f.regular, f.has_exact_dbar(), f.description);
    }
}

fn parse_point(s: &str) -> Result<Complex64> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    Ok(Complex64::new(re.trim().parse()?, im.trim().parse()?))
}

pub fn eval_fit(path: &Path, points: &[String]) -> Result<Verdict> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let dec: PolyDecomposition = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for p in points {
        let z = parse_point(p).with_context(|| format!("point {p:?} is not re,im"))?;
        let v = dec.evaluate(z);
        println!("{} {} {:.17e} {:.17e}", z.re, z.im, v.re, v.im);
    }
    Ok(Verdict::Pass)
}
