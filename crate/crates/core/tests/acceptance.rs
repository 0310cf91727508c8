//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{exact_bounds, q, to_f64};
use erw_core::branching::symmetric_closed_form;
use erw_core::{
    estimate_speed, pi0_bracket, simulate_walk, solve_stationary, speed_interval, symmetric_interval,
    CookieEnvironment, SpeedSign, TransitionKernel, Transience,
};

type Outcome = Result<String, String>;

fn env(p: &[f64]) -> CookieEnvironment {
    CookieEnvironment::new(p.to_vec()).unwrap()
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn erw_json(args: &[&str]) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_erw"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("erw {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().expect("numeric field")
}

fn symmetric_gap() -> Outcome {
    let r = erw_json(&["gap", "--region", "symmetric", "--grid", "0.001"])?;
    let (gap, arg) = (num(&r["max_gap"]), num(&r["argmax"][0]));
    let msg = format!("max_gap={gap:.7} argmax={arg:.5}");
    ensure((gap - 0.010326).abs() <= 1e-4, msg.clone())?;
    ensure((arg - 0.86649).abs() <= 1e-3, msg.clone())?;
    Ok(msg)
}

fn general_gap() -> Outcome {
    let r = erw_json(&["gap", "--region", "general", "--grid", "0.01"])?;
    let gap = num(&r["max_gap"]);
    let arg: Vec<f64> = r["argmax"].as_array().unwrap().iter().map(num).collect();
    let msg = format!("max_gap={gap:.7} argmax=({:.6}, {:.6}, {:.6})", arg[0], arg[1], arg[2]);
    ensure((gap - 0.0194564).abs() <= 1e-4, msg.clone())?;
    for (x, want) in arg.iter().zip([0.913811, 0.666396, 1.0]) {
        ensure((x - want).abs() <= 1e-2, msg.clone())?;
    }
    Ok(msg)
}

fn three_way_consistency() -> Outcome {
    let p = q(9, 10);
    let ex = exact_bounds(p, p, p);
    let (lo, hi) = (to_f64(ex.v_lower), to_f64(ex.v_upper));
    ensure(
        (lo - 0.72258).abs() < 1e-5 && (hi - 0.73028).abs() < 1e-5,
        format!("exact interval [{lo}, {hi}]"),
    )?;
    let e = env(&[0.9, 0.9, 0.9]);
    let b = speed_interval(&e).map_err(|e| e.to_string())?;
    ensure(
        (b.v_lower - lo).abs() < 1e-15 && (b.v_upper - hi).abs() < 1e-15,
        format!("closed form [{}, {}] vs exact [{lo}, {hi}]", b.v_lower, b.v_upper),
    )?;
    let sol = solve_stationary(&TransitionKernel::new(e.clone()), 200, 1e-12).map_err(|e| e.to_string())?;
    let mc = estimate_speed(&e, 1_000_000, 100, 2024).map_err(|e| e.to_string())?;
    let msg = format!(
        "interval=[{lo:.6}, {hi:.6}] stationary={:.6} monte_carlo={:.4}+-{:.4}",
        sol.speed_estimate, mc.mean, mc.std_error
    );
    ensure(b.contains(sol.speed_estimate, 1e-4), msg.clone())?;
    ensure(mc.within(lo, hi, 4.0), msg.clone())?;
    Ok(msg)
}

fn identity_suite() -> Outcome {
    let axis: Vec<f64> = (0..10).map(|k| 0.73 + 0.03 * k as f64).collect();
    let mut points = 0;
    let mut worst = [0.0f64; 5];
    for &p1 in &axis {
        for &p2 in &axis {
            for &p3 in &axis {
                let e = env(&[p1, p2, p3]);
                if e.delta() <= 2.0 {
                    continue;
                }
                points += 1;
                let k = TransitionKernel::new(e.clone());
                for i in 0..=50 {
                    let s: f64 = k.row(i, 600).iter().sum();
                    worst[0] = worst[0].max((s - 1.0).abs());
                }
                let sol = solve_stationary(&k, 200, 1e-12).map_err(|e| e.to_string())?;
                worst[1] = worst[1].max(sol.genabc_residual);
                let (lo, hi) = pi0_bracket(&e).map_err(|e| e.to_string())?;
                let outside = (lo - sol.pi_hat[0]).max(sol.pi_hat[0] - hi).max(0.0);
                worst[2] = worst[2].max(outside);
                for m in 0..=30u64 {
                    let closed = m as f64 + 1.0 - e.delta();
                    if m >= 2 {
                        worst[3] = worst[3].max((k.series_mean(m) - closed).abs());
                    }
                }
                if p1 == p2 && p2 == p3 {
                    for i in 0..=20 {
                        for j in 0..=20 {
                            let d = (k.transition_prob(i, j) - symmetric_closed_form(p1, i, j)).abs();
                            worst[4] = worst[4].max(d);
                        }
                    }
                }
            }
        }
    }
    let msg = format!(
        "{points} points: row_sum={:.1e} genabc={:.1e} pi0_outside={:.1e} moment={:.1e} closed_form={:.1e}",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    );
    let limits = [1e-12, 1e-8, 1e-6, 1e-10, 1e-12];
    ensure(worst.iter().zip(limits).all(|(w, l)| *w < l), msg.clone())?;
    Ok(msg)
}

fn degenerate_anchors() -> Outcome {
    let ones = env(&[1.0, 1.0, 1.0]);
    let b = speed_interval(&ones).map_err(|e| e.to_string())?;
    ensure((b.v_lower, b.v_upper) == (1.0, 1.0), format!("bounds at (1,1,1): {b:?}"))?;
    let sol = solve_stationary(&TransitionKernel::new(ones.clone()), 200, 1e-12).map_err(|e| e.to_string())?;
    ensure(sol.speed_estimate == 1.0, format!("stationary speed {}", sol.speed_estimate))?;
    let mc = estimate_speed(&ones, 10_000, 10, 1).map_err(|e| e.to_string())?;
    ensure(mc.mean == 1.0 && mc.std_error == 0.0, format!("monte carlo {mc:?}"))?;
    ensure(simulate_walk(&ones, 1000, 3).final_position == 1000, "walk at (1,1,1)".into())?;

    let mut last = f64::INFINITY;
    for k in 2..=9 {
        let (lo, hi) = symmetric_interval(5.0 / 6.0 + 10f64.powi(-k)).map_err(|e| e.to_string())?;
        ensure(0.0 < lo && lo <= hi && hi < last, format!("bounds near 5/6 not shrinking: {hi}"))?;
        last = hi;
    }
    // both bounds vanish linearly in the distance to 5/6
    ensure(last < 100.0 * 1e-9, format!("upper bound at 5/6 + 1e-9 is {last}"))?;

    let half = env(&[0.5, 0.5, 0.5]);
    let c = half.classify();
    ensure(
        c.transience == Transience::Recurrent && c.speed_sign == SpeedSign::Zero,
        format!("{c:?}"),
    )?;
    let mc = estimate_speed(&half, 100_000, 100, 7).map_err(|e| e.to_string())?;
    ensure(mc.within(0.0, 0.0, 4.0), format!("fair walk mean {}+-{}", mc.mean, mc.std_error))?;
    Ok(format!(
        "(1,1,1) exact; upper bound {last:.1e} at 5/6+1e-9; fair mean {:.4}+-{:.4}",
        mc.mean, mc.std_error
    ))
}

fn zero_speed_regime() -> Outcome {
    let e = env(&[0.9, 0.8, 0.7]);
    let mut means = Vec::new();
    for steps in [10_000u64, 100_000, 1_000_000] {
        means.push(estimate_speed(&e, steps, 200, 99).map_err(|e| e.to_string())?.mean);
    }
    let k = TransitionKernel::new(e);
    let mut stat = Vec::new();
    for n in [50, 100, 200, 400] {
        stat.push(solve_stationary(&k, n, 1e-12).map_err(|e| e.to_string())?.mean_estimate);
    }
    let msg = format!("X_n/n means {means:.4?}; stationary means {stat:.4?}");
    ensure(means.windows(2).all(|w| w[1] < w[0]), msg.clone())?;
    ensure(stat.windows(2).all(|w| w[1] > w[0]), msg.clone())?;
    Ok(msg)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("1 symmetric gap maximum", symmetric_gap),
        ("2 general gap maximum", general_gap),
        ("3 three-way speed consistency", three_way_consistency),
        ("4 identity suite", identity_suite),
        ("5 degenerate and analytic anchors", degenerate_anchors),
        ("6 zero-speed transient regime", zero_speed_regime),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
