//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one `PASS`/`FAIL` line per criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use polychain::chain::{self, ChainSpec, RadiusProfile};
use polychain::dbar::{self, IdentityOptions, Stencil};
use polychain::discriminant;
use polychain::dynamics::{self, Branch, BranchKind, BranchSample, BranchSet, IqOptions, TrackOptions};
use polychain::functions::{self, builtin, CONJ_POLY_CENTERS};
use polychain::grid;
use polychain::laurent::{analyze_circle, merom_test};
use polychain::polyfit::{self, Form};
use polychain::Complex64;

type Outcome = (bool, String);

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn hyperbolic() -> ChainSpec {
    ChainSpec::hyperbolic(cx(0.3, 0.0), cx(-0.4, 0.2), RadiusProfile::Default).unwrap()
}

fn horicycle() -> ChainSpec {
    ChainSpec::horicycle(cx(-1.0, 0.0), cx(1.0, 0.0), RadiusProfile::Default).unwrap()
}

fn mixed() -> ChainSpec {
    ChainSpec::mixed(cx(0.6, 0.8), RadiusProfile::Default).unwrap()
}

fn named_chains() -> Vec<(&'static str, ChainSpec)> {
    vec![("hyperbolic", hyperbolic()), ("horicycle", horicycle()), ("mixed", mixed())]
}

/// Chain with `|c(t)| > r(t)` everywhere.
fn translating() -> ChainSpec {
    chain::translating(cx(0.5, 0.0), cx(1.5, 0.0), 0.25).unwrap()
}

fn criterion_1() -> Outcome {
    let mut ok = true;
    let mut notes = vec![];
    for (name, chain) in named_chains() {
        let cloud = discriminant::discriminant_set(&chain, &grid::interior(2048));
        let comps = cloud.components();
        let (a, b) = (chain.endpoint_a(), chain.endpoint_b());
        let diam = comps.iter().map(|c| c.diameter).fold(0.0, f64::max);
        let near = |p: Complex64| comps.iter().map(|c| (c.centroid - p).norm()).fold(f64::INFINITY, f64::min);
        let off = near(a).max(near(b));
        ok &= comps.len() == 2 && diam < 1e-6 && off < 1e-8;
        notes.push(format!("{name}: {} comps, diam {diam:.1e}, off {off:.1e}", comps.len()));
    }
    (ok, notes.join("; "))
}

fn criterion_2() -> Outcome {
    let f = |z: Complex64| z.conj();
    let (mut worst_pass, mut worst_fail) = (0.0f64, 0.0f64);
    let mut ok = true;
    for (_, chain) in named_chains() {
        for t in grid::admissible(&chain, grid::interior(512), 0.0) {
            let circle = chain.circle_at(t).unwrap();
            let data = analyze_circle(&f, &circle, 1024, 256).unwrap();
            let pass = merom_test(&data, 1, 1e-12).unwrap();
            let fail = merom_test(&data, 0, 1e-12).unwrap();
            let expect = circle.radius / (circle.center.norm_sqr() + circle.radius.powi(2)).sqrt();
            worst_pass = worst_pass.max(pass.defect);
            worst_fail = worst_fail.max((fail.defect - expect).abs());
            ok &= pass.pass && !fail.pass;
        }
    }
    ok &= worst_pass < 1e-12 && worst_fail < 1e-10;
    (ok, format!("max ν=1 defect {worst_pass:.1e}; max |ν=0 defect - r/√(|c|²+r²)| {worst_fail:.1e}"))
}

fn track(chain: &ChainSpec, id: &str, nu: usize) -> BranchSet {
    let f = builtin(id).unwrap();
    let ts = grid::analysis_grid(chain, 512);
    dynamics::track_branches(chain, &*f.value_fn(), nu, &ts, &TrackOptions::default()).unwrap()
}

fn criterion_3(sets: &mut Vec<(String, BranchSet)>) -> Outcome {
    let chain = translating();
    let mut ok = true;
    let mut notes = vec![];
    for (id, nu, expect) in [("conj", 1, (1, 1)), ("conj_sq", 2, (2, 2)), ("analytic_p", 0, (0, 0))] {
        let set = track(&chain, id, nu);
        let got = dynamics::count_traveling(&set);
        ok &= got == expect;
        notes.push(format!("{id}: {got:?}"));
        sets.push((format!("translating/{id}"), set));
    }
    (ok, notes.join("; "))
}

fn criterion_4(sets: &mut Vec<(String, BranchSet)>) -> Outcome {
    for (name, chain) in named_chains() {
        for (id, nu) in [("conj", 1), ("abs2", 1), ("conj_sq", 2)] {
            sets.push((format!("{name}/{id}"), track(&chain, id, nu)));
        }
    }
    let checked: usize = sets.iter().map(|(_, s)| s.winding_checked).sum();
    let skipped: usize = sets.iter().map(|(_, s)| s.winding_skipped).sum();
    let bad: Vec<String> =
        sets.iter().filter(|(_, s)| !s.winding_mismatches.is_empty()).map(|(n, s)| format!("{n}×{}", s.winding_mismatches.len())).collect();
    let ok = checked > 0 && bad.is_empty();
    (ok, format!("{checked} circles checked, {skipped} skipped at boundary roots, mismatches [{}]", bad.join(", ")))
}

/// Zero branch `c - r²/c̄` of `z̄^k` (multiplicity `k`) and the pole branch
/// at the centers.
fn closed_form_branches(chain: &ChainSpec, k: usize, n: usize) -> BranchSet {
    let ts = grid::midpoint(n);
    let zeros = ts.iter().map(|&t| {
        let (c, r) = (chain.center(t), chain.radius(t));
        BranchSample { t, z: c - r * r / c.conj(), multiplicity: k }
    });
    let poles = ts.iter().map(|&t| BranchSample { t, z: chain.center(t), multiplicity: k });
    let mut set = BranchSet::default();
    for (kind, samples) in [(BranchKind::Zero, zeros.collect::<Vec<_>>()), (BranchKind::Pole, poles.collect())] {
        let mut b = Branch::new(kind, samples);
        b.traveling = true;
        set.branches.push(b);
    }
    set
}

fn criterion_5() -> Outcome {
    let chain = hyperbolic();
    let f = |z: Complex64| z.conj();
    let qs = [cx(3.0, 0.0), cx(0.0, 3.0), cx(-3.0, 0.0), cx(2.0, 2.0)];
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for q in qs {
        let coarse = dynamics::i_of_q(&chain, &f, 1, q, &IqOptions::square(128)).unwrap().value.norm();
        let fine = dynamics::i_of_q(&chain, &f, 1, q, &IqOptions::square(512)).unwrap().value.norm();
        ok &= fine < 1e-3 && fine <= coarse;
        worst = (worst.0.max(coarse), worst.1.max(fine));
    }
    let tr = translating();
    let mut balance = 0.0f64;
    for k in [1, 2] {
        let set = closed_form_branches(&tr, k, 2048);
        let ends = Some((tr.endpoint_a(), tr.endpoint_b()));
        balance = balance.max(dynamics::verify_zp_balance(&set, &qs, ends).unwrap().max);
    }
    ok &= balance < 1e-5;
    (ok, format!("max |I(q)| 128²: {:.1e}, 512²: {:.1e}; closed-form branch balance {balance:.1e}", worst.0, worst.1))
}

fn identity_max(chain: &ChainSpec, id: &str, ts: &[f64], opts: IdentityOptions) -> f64 {
    let f = builtin(id).unwrap();
    dbar::identity_check(chain, &f, ts, opts).unwrap().iter().map(|r| r.max_identity_residual).fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let chain = hyperbolic();
    let fine = 1024;
    let ts = dbar::stencil_safe(&chain, &grid::analysis_grid(&chain, fine), 2.0 / fine as f64, Stencil::Fourth);
    // Convergence order of the central second-order stencil on a fixed
    // probe set.
    let levels = [64, 128, 256];
    let probe = dbar::stencil_safe(&chain, &grid::analysis_grid(&chain, 32), 1.0 / levels[0] as f64, Stencil::Second);
    let mut ok = true;
    let mut notes = vec![];
    for id in ["conj", "abs2", "analytic_p"] {
        let residual = identity_max(&chain, id, &ts, IdentityOptions::for_grid(fine));
        let errs: Vec<f64> = levels
            .iter()
            .map(|&nt| identity_max(&chain, id, &probe, IdentityOptions { stencil: Stencil::Second, ..IdentityOptions::for_grid(nt) }))
            .collect();
        let order = (errs[1] / errs[2]).log2().min((errs[0] / errs[1]).log2());
        ok &= residual < 1e-5 && order >= 1.8;
        notes.push(format!("{id}: {residual:.1e}, order {order:.2}"));
    }
    (ok, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let chain = hyperbolic();
    let ts = grid::analysis_grid(&chain, 256);
    let cloud = discriminant::discriminant_set(&chain, &grid::interior(2048));
    let eps = cloud.epsilon;
    let mut ok = true;
    let mut notes = vec![];
    for (id, nu, want) in [("conj_h", 1, 0), ("conj", 1, 0), ("conj_sq", 2, 1), ("conj_sq_z", 2, 1)] {
        let f = builtin(id).unwrap();
        let g = f.dbar_fn().unwrap();
        let rep = dbar::pole_reduction_check(&chain, &*g, nu, &ts, 256, Some(&cloud), eps).unwrap();
        let orders: Vec<usize> = rep.circles.iter().filter(|c| !c.zero_function).map(|c| c.center_pole_order).collect();
        let exact = !orders.is_empty() && orders.iter().all(|&o| o == want);
        let far = rep.circles.iter().filter_map(|c| c.nearest_discriminant_distance).fold(0.0, f64::max);
        ok &= rep.pass && exact && far <= eps;
        notes.push(format!("{id}: order {}", rep.max_center_pole_order));
    }
    (ok, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let (inner, outer) = (0.3, 0.9);
    let mut ok = true;
    let mut notes = vec![];
    for f in functions::registry() {
        let samples = polyfit::sample_annulus(&*f.value_fn(), 2000, inner, outer);
        let got = polyfit::order_detect(&samples, 6, 8, 1e-6, f.form).unwrap();
        match (f.declared_order, f.id.as_str()) {
            (Some(want), _) => {
                ok &= got == Some(want);
                if got != Some(want) {
                    notes.push(format!("{}: {got:?} ≠ {want}", f.id));
                }
            }
            (None, "exp_conj") => {
                ok &= got.is_none();
                notes.push(format!("exp_conj: {got:?}"));
            }
            _ => {}
        }
    }
    // F·(1 - |z|²)^ν fitted in the Euclidean basis, converted back.
    let f = builtin("hyper_form").unwrap();
    let nu = f.declared_order.unwrap();
    let weighted = |z: Complex64| f.eval(z) * (1.0 - z.norm_sqr()).powi(nu as i32);
    let samples = polyfit::sample_annulus(&weighted, 2000, inner, outer);
    let dec = polyfit::fit(&samples, nu, 8, Form::Euclidean).unwrap();
    let hyp = polyfit::euclidean_to_hyperbolic(&dec, 1e-8).unwrap();
    let round_trip = polyfit::annulus_points(500, inner, outer)
        .into_iter()
        .map(|z| (hyp.evaluate(z) - f.eval(z)).norm())
        .fold(0.0, f64::max);
    ok &= round_trip < 1e-8;
    notes.push(format!("hyperbolic round trip {round_trip:.1e}"));
    (ok, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let f = functions::conj_poly(&CONJ_POLY_CENTERS);
    let value = f.value_fn();
    let mut worst = 0.0f64;
    for &c in &CONJ_POLY_CENTERS {
        for r in [0.05, 0.2, 0.5, 1.0] {
            let data = analyze_circle(&*value, &polychain::Circle::new(c, r, 0.5), 1024, 256).unwrap();
            worst = worst.max(merom_test(&data, 0, 1e-12).unwrap().defect);
        }
    }
    let samples = polyfit::sample_annulus(&*value, 2000, 0.3, 0.9);
    let order = polyfit::order_detect(&samples, 6, 8, 1e-6, Form::Euclidean).unwrap();
    (worst < 1e-12 && order != Some(0), format!("max ν=0 defect {worst:.1e}; detected order {order:?}"))
}

fn main() -> ExitCode {
    let mut sets = vec![];
    let mut results: Vec<(usize, Outcome, f64)> = vec![];
    let mut run = |k: usize, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {k}: {} ({}) [{secs:.1}s]", if out.0 { "PASS" } else { "FAIL" }, out.1);
        results.push((k, out, secs));
    };
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut || criterion_3(&mut sets));
    run(4, &mut || criterion_4(&mut sets));
    run(5, &mut criterion_5);
    run(6, &mut criterion_6);
    run(7, &mut criterion_7);
    run(8, &mut criterion_8);
    run(9, &mut criterion_9);
    if results.iter().all(|r| r.1 .0) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
