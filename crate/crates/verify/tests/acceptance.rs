//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use mac3_core::lfa::analytic::{self, Exact, Rational};
use mac3_core::lfa::symbols::{relax_error_symbol, smoothing_factor, Frequency};
use mac3_core::lfa::twogrid::two_grid_factor;
use mac3_core::mac::{Bc, SaddleSystem};
use mac3_core::multigrid::{solve, CycleKind, GridHierarchy, DEFAULT_MAX_ITERS};
use mac3_core::reference::{LFA_TWO_GRID, MEASURED};
use mac3_core::smoothers::{periodic_mode_amplification, Smoother};
use mac3_core::{RelaxParams, Scheme, TransferPair};
use mac3_verify::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn analytic_optima() -> Outcome {
    let start = Instant::now();
    let results = [
        analytic::optimal_scalar(),
        analytic::optimal_qdr(),
        analytic::optimal_qbsr(),
    ];
    let uz = analytic::optimal_uzawa();
    let (ua, us) = analytic::uzawa_unit_omega_exact();
    let elapsed = start.elapsed();

    let rational_ok = results.iter().all(|r| {
        r.mu_opt == Exact::Rational(q(17, 47)) && r.ratio == Some(Exact::Rational(q(36, 47)))
    });
    let uzawa_ok = uz.mu_opt == Exact::Sqrt(q(17, 47)) && ua == q(47, 36) && us == q(15, 32);
    let (lo, hi) = uz.omega_interval.unwrap();
    let feasible = (lo..=hi).contains(&1.0);
    let fast = elapsed.as_secs_f64() < 1e-3;
    outcome(
        rational_ok && uzawa_ok && feasible && fast,
        format!(
            "17/47 & 36/47 exact: {rational_ok}; sqrt(17/47), (1, 47/36, 15/32): {uzawa_ok}; ω=1 in [{lo:.6}, {hi:.6}]: {feasible}; {:.1} µs",
            elapsed.as_secs_f64() * 1e6
        ),
    )
}

fn sampled_smoothing() -> Outcome {
    let n = 81;
    let h = 1.0 / n as f64;
    let target = 17.0f64 / 47.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, goal, tol) in [
        (Scheme::Qdr, target, 1e-3),
        (Scheme::QbsrExact, target, 1e-3),
        (Scheme::Quzawa, target.sqrt(), 2e-3),
    ] {
        let mu = smoothing_factor(&RelaxParams::lfa_optimal(s), n, h).unwrap();
        let gap = (mu - goal).abs();
        pass &= gap <= tol;
        parts.push(format!("{s} {mu:.6} (gap {gap:.1e})"));
    }
    outcome(pass, parts.join(", "))
}

fn lfa_tables(n: usize, tol: f64) -> Outcome {
    let h = 1.0 / 81.0;
    let mut worst = (0.0f64, String::new());
    let mut misses = Vec::new();
    let mut cells = 0;
    for (r, rows) in LFA_TWO_GRID {
        let tp = TransferPair::new(r);
        for (s, printed) in rows {
            let p = RelaxParams::lfa_optimal(s);
            for (k, want) in printed.iter().enumerate() {
                let got = two_grid_factor(k + 1, 0, &p, tp, n, h).unwrap().rho;
                let gap = (got - want).abs();
                cells += 1;
                let tag = format!("{s}/{}/ν={}: {got:.3} vs {want:.3}", r.name(), k + 1);
                if gap > worst.0 {
                    worst = (gap, tag.clone());
                }
                if gap > tol {
                    misses.push(tag);
                }
            }
        }
    }
    let detail = if misses.is_empty() {
        format!(
            "{cells} cells at sampling n={n} within ±{tol}; worst {} ({:.4})",
            worst.1, worst.0
        )
    } else {
        format!(
            "{}/{cells} cells at sampling n={n} within ±{tol}; outside: {}",
            cells - misses.len(),
            misses.join("; ")
        )
    };
    outcome(misses.is_empty(), detail)
}

fn g_extrema_scan() -> Outcome {
    let (min, argmin, max, argmax) = g_scan(2001);
    let lib = analytic::g_extrema();
    let near = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9;
    let at_min = near(argmin, (1.0, 0.5)) || near(argmin, (0.5, 1.0));
    let at_max = near(argmax, (0.0, 0.0));
    let pass = (min - 3.75).abs() <= 1e-6
        && (max - 8.0).abs() <= 1e-6
        && at_min
        && at_max
        && (lib.min - min).abs() <= 1e-6
        && (lib.max - max).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "scan min {min:.9} at {argmin:?}, max {max:.9} at {argmax:?}; closed form {} / {}",
            lib.min, lib.max
        ),
    )
}

fn periodic_oracle() -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    for s in Scheme::ALL {
        let p = RelaxParams::lfa_optimal(s);
        for tp in TransferPair::all() {
            let gap = (radius(&grid_spectrum(9, &p, tp, 1, 0))
                - radius(&lattice_spectrum(9, &p, tp, 1, 0)))
            .abs();
            worst = worst.max(gap);
            pass &= gap <= 1e-8;
        }
    }
    outcome(
        pass,
        format!("n=9, ν=1, 4 schemes × 4 transfer pairs: max |ρ_grid − ρ_LFA| = {worst:.2e} (constant modes deflated)"),
    )
}

fn per_mode_relaxation() -> Outcome {
    let n = 81;
    let sys = SaddleSystem::new(n, Bc::Periodic).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for s in Scheme::ALL {
        let p = RelaxParams::lfa_optimal(s);
        let sm = Smoother::new(&sys, p).unwrap();
        for _ in 0..20 {
            let k = loop {
                let k = (rng.gen_range(0..n), rng.gen_range(0..n));
                if k != (0, 0) {
                    break k;
                }
            };
            let amp = periodic_mode_amplification(&sys, &sm, k).unwrap();
            let t = Frequency::new(
                2.0 * PI * k.0 as f64 / n as f64,
                2.0 * PI * k.1 as f64 / n as f64,
            )
            .canonical();
            let sym = relax_error_symbol(&p, t, sys.h()).unwrap().matrix;
            let scale = sym.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let err = (amp - sym).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
            worst = worst.max(err);
        }
    }
    outcome(
        worst <= 1e-10,
        format!("80 modes, max relative symbol mismatch {worst:.2e}"),
    )
}

fn measured(schemes: &[Scheme]) -> Outcome {
    let tp = TransferPair::new(mac3_core::Restriction::P25T);
    let mut pass = true;
    let mut rows = Vec::new();
    for row in MEASURED.iter().filter(|r| schemes.contains(&r.scheme)) {
        let p = RelaxParams::experiment(row.scheme);
        let mut hier = GridHierarchy::new(81, Bc::Dirichlet, p, tp).unwrap();
        for (kind, printed) in [
            (CycleKind::TwoGrid, row.two_grid),
            (CycleKind::V, row.v_cycle),
        ] {
            let mut cells = Vec::new();
            for (k, want) in printed.iter().enumerate() {
                let rep = solve(&mut hier, kind, k + 1, 0, DEFAULT_MAX_ITERS, 1).unwrap();
                let ok = rep.converged && (rep.rho - want).abs() <= row.tolerance;
                pass &= ok;
                cells.push(format!(
                    "{:.3}/{want:.3}{}",
                    rep.rho,
                    if ok { "" } else { "!" }
                ));
            }
            rows.push(format!(
                "{} {}: {}",
                row.scheme,
                kind.name(),
                cells.join(" ")
            ));
        }
    }
    outcome(
        pass,
        format!(
            "measured/printed, ! = outside tolerance: {}",
            rows.join("; ")
        ),
    )
}

fn uzawa_machinery() -> Outcome {
    let mu = (17.0f64 / 47.0).sqrt();
    let (omega, alpha, sigma) = (1.0, 47.0 / 36.0, 15.0 / 32.0);
    let m2 = analytic::uzawa_m2(alpha, sigma);
    let mu_c = analytic::uzawa_mu_c(omega, alpha, sigma, m2.max(5.0 / 6.0)).unwrap();
    let mu_r = analytic::uzawa_mu_r(omega, alpha, sigma, m2).unwrap();
    let mut pass = (mu_c - mu).abs() <= 1e-12 && (mu_r - mu).abs() <= 1e-12;

    let (lo, hi) = analytic::uzawa_omega_interval();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let w = lo + (hi - lo) * (k as f64 + 0.5) / 100.0;
        let (a, s) = analytic::uzawa_params_from_omega(w).unwrap();
        let a_ref = 376.0 * w * w / (9.0 * (47.0 * w - 15.0));
        let s_ref = 15.0 / (47.0 * w - 15.0);
        worst = worst
            .max(((a - a_ref) / a_ref).abs())
            .max(((s - s_ref) / s_ref).abs());
    }
    pass &= worst <= 1e-12;
    let scan = uzawa_scan(omega, alpha, sigma, 20001);
    pass &= (scan - mu).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "μ^C − μ = {:.1e}, μ^R − μ = {:.1e}; parameter map max rel. error {worst:.1e} over 100 ω; m_r scan {scan:.9}",
            mu_c - mu,
            mu_r - mu
        ),
    )
}

fn cost_ratio() -> Outcome {
    let c = analytic::cost_ratio();
    let spread = [1e-4, 1e-8, 1e-12, 1e-16]
        .iter()
        .map(|&e| (analytic::cost_ratio_for(e) - c).abs())
        .fold(0.0, f64::max);
    let independent = 3.0 * (17.0f64 / 47.0).ln() / (1.0f64 / 3.0).ln();
    outcome(
        (c - 2.78).abs() <= 0.01 && spread <= 1e-12 && (c - independent).abs() <= 1e-12,
        format!("T1/T2 = {c:.6}, spread over ε {spread:.1e}"),
    )
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "analytic optimal smoothing factors",
            Box::new(analytic_optima),
        ),
        (
            "sampled smoothing factors at n=81",
            Box::new(sampled_smoothing),
        ),
        (
            "two-grid LFA tables at n=81, ±0.01",
            Box::new(|| lfa_tables(81, 0.01)),
        ),
        (
            "two-grid LFA tables smoke run n=27, ±0.03",
            Box::new(|| lfa_tables(27, 0.03)),
        ),
        ("g(x,y) extrema by grid scan", Box::new(g_extrema_scan)),
        (
            "periodic two-grid matrix vs LFA lattice",
            Box::new(periodic_oracle),
        ),
        (
            "per-mode relaxation vs error symbol",
            Box::new(per_mode_relaxation),
        ),
        (
            "measured Q-IBSR, Dirichlet n=81, ±0.03",
            Box::new(|| measured(&[Scheme::Qibsr])),
        ),
        (
            "measured Q-DR and Q-Uzawa, Dirichlet n=81, ±0.05",
            Box::new(|| measured(&[Scheme::Qdr, Scheme::Quzawa])),
        ),
        ("Uzawa optimal-family identities", Box::new(uzawa_machinery)),
        ("cost ratio", Box::new(cost_ratio)),
    ];
    let ids = ["1", "2", "3", "3s", "4", "5", "6", "7", "8", "9", "10"];
    let mut failed = Vec::new();
    for (id, (name, check)) in ids.iter().zip(&criteria) {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{id}] {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(*id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", ids.len());
    } else {
        println!(
            "acceptance: {} of {} criteria failed: {}",
            failed.len(),
            ids.len(),
            failed.join(", ")
        );
        std::process::exit(1);
    }
}
