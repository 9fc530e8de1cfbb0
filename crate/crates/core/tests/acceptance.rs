//! End-to-end acceptance suite. Runs every criterion at full size, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! Every Monte Carlo run is done with one worker and rerun with eight;
//! criterion 11 compares the serialized results byte for byte.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use grassdeg::edeg::{
    edeg_general, edeg_lines_quadrature, edeg_upper_bound, epsilon_k, log_edeg_lines_asymptotic, GeneralMethod,
};
use grassdeg::incidence::{edeg24_transversal_mc, rig_union_of_lines_mc};
use grassdeg::mc::{
    alpha_complex_mc, density_gof, density_normalization, edeg24_integral, schubert_ratio_exact, schubert_ratio_mc,
    vitale_check, vitale_closed_form, Edeg24Mode,
};
use grassdeg::specfun::{deg_grassmann_complex, vol_grassmann_real};
use grassdeg::zonoid::{build_radial_profile_2, vol_c_quadrature, Differentiation, DEFAULT_PROFILE_GRID, DEFAULT_QUAD_POINTS};
use grassdeg::{Estimate, McConfig, RadialProfile2};

const SEED: u64 = 20_190_517;
const EDEG24: f64 = 1.7262;

/// A Monte Carlo run that can be repeated with another worker count.
struct McRun {
    label: String,
    rerun: Box<dyn Fn(McConfig) -> String>,
    first: String,
}

struct Suite {
    results: Vec<(usize, bool, String)>,
    runs: Vec<McRun>,
}

impl Suite {
    fn mc(&mut self, label: &str, f: impl Fn(McConfig) -> Estimate + 'static) -> Estimate {
        let e = f(McConfig::new(SEED, 1));
        let first = serde_json::to_string(&e).unwrap();
        self.runs.push(McRun {
            label: label.to_string(),
            rerun: Box::new(move |cfg| serde_json::to_string(&f(cfg)).unwrap()),
            first,
        });
        e
    }

    fn record(&mut self, id: usize, ok: bool, detail: String, started: Instant) {
        let line = format!(
            "criterion {id:>2}: {} ({:.1} s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        println!("{line}");
        self.results.push((id, ok, line));
    }
}

fn sigma(a: &Estimate, b: &Estimate) -> f64 {
    (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

fn main() {
    let total = Instant::now();
    let mut s = Suite { results: Vec::new(), runs: Vec::new() };
    let profile: RadialProfile2 = build_radial_profile_2(DEFAULT_PROFILE_GRID, Differentiation::Analytic).unwrap();

    // 1. Three-way agreement on edeg G(2,4).
    let t = Instant::now();
    let trans = s.mc("transversal 1e7", |c| edeg24_transversal_mc(c, 10_000_000).unwrap());
    let integ = s.mc("edeg24 integral 1e7", |c| {
        edeg24_integral(Edeg24Mode::MonteCarlo { cfg: c, samples: 10_000_000 }).unwrap()
    });
    let quad = edeg_lines_quadrature(3, &profile, DEFAULT_QUAD_POINTS).unwrap();
    let quad_est = Estimate {
        value: quad.value().unwrap(),
        stderr: quad.error_estimate().unwrap(),
        n_samples: 0,
        seed: 0,
        method: "quadrature".into(),
        degenerate_count: 0,
    };
    let three = [&trans, &integ, &quad_est];
    let in_band = three.iter().all(|e| (e.value - EDEG24).abs() <= 0.005);
    let mut pairwise = true;
    for i in 0..3 {
        for j in i + 1..3 {
            pairwise &= (three[i].value - three[j].value).abs() <= 3.0 * sigma(three[i], three[j]);
        }
    }
    s.record(
        1,
        in_band && pairwise,
        format!(
            "transversal {:.5}±{:.5}, integral {:.5}±{:.5}, quadrature {:.7}±{:.1e}",
            trans.value, trans.stderr, integ.value, integ.stderr, quad_est.value, quad_est.stderr
        ),
        t,
    );

    // 2. Zonoid pipeline closure.
    let t = Instant::now();
    let (vc, _) = vol_c_quadrature(2, &profile, DEFAULT_QUAD_POINTS).unwrap();
    let assembled = vc * vol_grassmann_real(2, 4).unwrap() * 24.0 / 16.0;
    s.record(
        2,
        (assembled - trans.value).abs() <= 0.01,
        format!("|C(2,2)| = {vc:.8}, assembled {assembled:.6} vs transversal {:.6}", trans.value),
        t,
    );

    // 3. Schubert ratios.
    let t = Instant::now();
    let exact24 = schubert_ratio_exact(2, 4).unwrap();
    let mut ok = exact24 == FRAC_PI_4;
    let mut detail = format!("exact(2,4) = {exact24:.16}");
    for (k, n) in [(2usize, 4usize), (2, 5), (3, 6)] {
        let e = s.mc(&format!("schubert ({k},{n})"), move |c| {
            schubert_ratio_mc(k, n, 0.01, 0.01, c, 10_000_000).unwrap()
        });
        let x = schubert_ratio_exact(k, n).unwrap();
        let rel = (e.value / x - 1.0).abs();
        ok &= rel <= 0.05;
        detail.push_str(&format!("; ({k},{n}) mc {:.4}±{:.4} vs {x:.4} ({:.2}%)", e.value, e.stderr, 100.0 * rel));
    }
    s.record(3, ok, detail, t);

    // 4. Principal-angle density.
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (k, l, n) in [(1usize, 1usize, 2usize), (2, 2, 4), (2, 3, 5)] {
        let z = density_normalization(k, l, n, 64).unwrap();
        ok &= (z - 1.0).abs() <= 1e-6;
        detail.push_str(&format!("norm({k},{l},{n}) = {z:.12}; "));
    }
    let gof = density_gof(2, 2, 4, McConfig::new(SEED, 1), 1_000_000).unwrap();
    let gof8 = density_gof(2, 2, 4, McConfig::new(SEED, 8), 1_000_000).unwrap();
    ok &= gof < 0.02;
    detail.push_str(&format!("gof L1(2,2,4) = {gof:.5}"));
    s.runs.push(McRun {
        label: "density gof".into(),
        rerun: Box::new(move |_| gof8.to_bits().to_string()),
        first: gof.to_bits().to_string(),
    });
    s.record(4, ok, detail, t);

    // 5. Complex cross-checks.
    let t = Instant::now();
    let ac = s.mc("alpha_C(2,2)", |c| alpha_complex_mc(2, 2, c, 1_000_000).unwrap());
    let mut ok = ac.within_sigma(3.0 / 32.0, 3.0);
    let mut catalan_ok = true;
    let mut cat: u128 = 1; // Catalan C_0
    for n in 2..=12usize {
        // deg G_C(2,n) = C_{n-2}
        let j = (n - 2) as u128;
        if j > 0 {
            cat = cat * 2 * (2 * j - 1) / (j + 1);
        }
        catalan_ok &= deg_grassmann_complex(2, n).unwrap() == cat.into();
    }
    let d24 = deg_grassmann_complex(2, 4).unwrap();
    ok &= catalan_ok && d24 == 2u32.into();
    s.record(
        5,
        ok,
        format!("alpha_C(2,2) {:.5}±{:.5} vs 3/32; Catalan n<=12 {catalan_ok}; deg G_C(2,4) = {d24}", ac.value, ac.stderr),
        t,
    );

    // 6. Radial profile at the diagonal.
    let t = Instant::now();
    let r2 = |th: f64| profile.eval(th).powi(2);
    let at = r2(FRAC_PI_4);
    let mut coefs = Vec::new();
    for h in [1e-2, 3e-3] {
        // r² is symmetric about π/4, so the central difference gives 2c.
        coefs.push((r2(FRAC_PI_4 + h) - 2.0 * at + r2(FRAC_PI_4 - h)) / (2.0 * h * h));
    }
    let ok = (at - 0.125).abs() <= 1e-6 && coefs.iter().all(|c| (c + 0.125).abs() <= 1e-2);
    s.record(6, ok, format!("r(π/4)² = {at:.12}, Taylor coefficient {coefs:.5?}"), t);

    // 7. Lines asymptotics.
    let t = Instant::now();
    let log_q = |n: usize| edeg_lines_quadrature(n, &profile, DEFAULT_QUAD_POINTS).unwrap().log_value.ln();
    let ratio = |n: usize| (log_q(n) - log_edeg_lines_asymptotic(n).unwrap().ln()).exp();
    let rs: Vec<f64> = [10, 20, 50].iter().map(|&n| ratio(n)).collect();
    let monotone = (rs[0] - 1.0).abs() > (rs[1] - 1.0).abs() && (rs[1] - 1.0).abs() > (rs[2] - 1.0).abs();
    let limit = 2.0 * (PI / 2.0).ln();
    let slopes: Vec<f64> = [(10usize, 20usize), (20, 40)]
        .iter()
        .map(|&(a, b)| (log_q(b) - log_q(a)) / (b - a) as f64)
        .collect();
    let ok = (0.95..=1.05).contains(&rs[2]) && monotone && slopes.iter().all(|x| (x - limit).abs() <= 0.1);
    s.record(
        7,
        ok,
        format!("ratios n=10,20,50: {rs:.5?}; slopes {slopes:.4?} vs {limit:.4}"),
        t,
    );

    // 8. Upper bounds and exponents.
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    let b24 = edeg_upper_bound(2, 4).unwrap().value().unwrap();
    for (name, e) in [("transversal", &trans), ("quadrature", &quad_est)] {
        ok &= e.value <= b24 + 3.0 * e.stderr;
        detail.push_str(&format!("(2,4) {name} {:.4} <= {b24:.4}; ", e.value));
    }
    let q25 = edeg_general(
        2,
        5,
        GeneralMethod::ZonoidQuadrature { profile: &profile, quad_points: DEFAULT_QUAD_POINTS },
    )
    .unwrap();
    let b25 = edeg_upper_bound(2, 5).unwrap().value().unwrap();
    ok &= q25.value().unwrap() <= b25 + 3.0 * q25.error_estimate().unwrap();
    detail.push_str(&format!("(2,5) {:.4} <= {b25:.4}; ", q25.value().unwrap()));
    let v36 = s.mc("edeg (3,6) vitale", |c| {
        let r = edeg_general(3, 6, GeneralMethod::ZonoidVitale { cfg: c, samples: 1_000_000 }).unwrap();
        Estimate {
            value: r.value().unwrap(),
            stderr: r.error_estimate().unwrap(),
            n_samples: r.n_samples,
            seed: c.seed,
            method: r.method.as_str().into(),
            degenerate_count: r.degenerate_count,
        }
    });
    let b36 = edeg_upper_bound(3, 6).unwrap().value().unwrap();
    ok &= v36.value > 0.0 && v36.value <= b36 + 3.0 * v36.stderr;
    detail.push_str(&format!("(3,6) {:.3}±{:.3} <= {b36:.3}; ", v36.value, v36.stderr));
    let e2 = epsilon_k(2).unwrap();
    let decreasing = (2..50).all(|k| epsilon_k(k).unwrap() > epsilon_k(k + 1).unwrap());
    ok &= decreasing && (e2 - 1.30).abs() <= 0.01;
    detail.push_str(&format!("ε_2 = {e2:.5}, decreasing on 2..50: {decreasing}"));
    s.record(8, ok, detail, t);

    // 9. Product law for unions of lines.
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for r in [[2usize, 1, 1, 1], [2, 2, 1, 1]] {
        let e = s.mc(&format!("rig {r:?}"), move |c| rig_union_of_lines_mc(r, c, 1_000_000).unwrap());
        let f = r.iter().product::<usize>() as f64;
        let combined = (e.stderr.powi(2) + (f * trans.stderr).powi(2)).sqrt();
        ok &= (e.value - f * trans.value).abs() <= 3.0 * combined;
        detail.push_str(&format!(
            "{r:?}: {:.4}±{:.4} vs {f}×{:.4} = {:.4}; ",
            e.value,
            e.stderr,
            trans.value,
            f * trans.value
        ));
    }
    s.record(9, ok, detail, t);

    // 10. Vitale identities.
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    let closed = [(2.0 / PI).sqrt(), 1.0, vitale_closed_form(3)];
    for d in 1..=3usize {
        let e = s.mc(&format!("vitale d={d}"), move |c| vitale_check(d, c, 1_000_000).unwrap());
        ok &= e.within_sigma(closed[d - 1], 3.0);
        detail.push_str(&format!("d={d}: {:.5}±{:.5} vs {:.5}; ", e.value, e.stderr, closed[d - 1]));
    }
    ok &= (vitale_closed_form(1) / closed[0] - 1.0).abs() < 1e-13 && (vitale_closed_form(2) - 1.0).abs() < 1e-13;
    s.record(10, ok, detail, t);

    // 11. Determinism across worker counts.
    let t = Instant::now();
    let mut ok = true;
    let mut mismatched = Vec::new();
    for run in &s.runs {
        if (run.rerun)(McConfig::new(SEED, 8)) != run.first {
            ok = false;
            mismatched.push(run.label.clone());
        }
    }
    let n_runs = s.runs.len();
    s.record(
        11,
        ok,
        format!("{n_runs} Monte Carlo runs rerun with 8 workers; mismatches: {mismatched:?}"),
        t,
    );

    let failed: Vec<usize> = s.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        s.results.len() - failed.len(),
        s.results.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
