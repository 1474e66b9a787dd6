use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde_json::json;

use scarforge::circuits::{Circuit, Gate};
use scarforge::dynamics::{
    adiabatic_evolve, find_tstar, gap_extrapolate, gap_scan, project_magnetization, revival_fidelity, revival_period,
    SweepConfig,
};
use scarforge::hamiltonians::build_hj_compressed;
use scarforge::metrics::{bhattacharyya_distance, distribution_from_counts, fidelity, Distribution};
use scarforge::mpscompile::{compile_mps, depth_estimate, projected_dicke_mps};
use scarforge::refstates::{
    count_constrained, embed_with_boundaries, normalization_z, projected_dicke, scar_state, scar_state_tilde,
    tilde_transform, xi_state,
};
use scarforge::scarprep::{
    build_ansatz, kmax_circuit, kmax_compressed_circuit, kmax_plan, optimize_ansatz, GradientMethod, OptimizeConfig,
};
use scarforge::xiprep::{
    angle_schedule, build_linear_circuit, build_stitch_circuit, postselect_ancillas, rational_to_f64,
    success_probability_closed, success_probability_exact, StitchPlan,
};
use scarforge::Error;

use crate::report::RunReport;
use crate::{ProjectMz, Revival, SkKmax, SkMps, SkVariational, Sweep, Tstar, XiLinear, XiStitch};

type Outcome = anyhow::Result<(RunReport, Option<String>)>;

/// Bad flag combination; exits with status 2 like a clap usage error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_) | Error::Validation(_) | Error::Capacity(_) | Error::DimensionMismatch { .. }) => 2,
        _ => 1,
    }
}

#[derive(Clone, Copy, Debug)]
pub enum TimeArg {
    Auto,
    At(f64),
}

impl FromStr for TimeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(TimeArg::Auto);
        }
        s.parse().map(TimeArg::At).map_err(|_| format!("expected a number or `auto`, got {s:?}"))
    }
}

fn write_circuit(path: Option<&Path>, circuit: &Circuit) -> anyhow::Result<()> {
    if let Some(p) = path {
        std::fs::write(p, circuit.to_json()).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?;
    }
    Ok(())
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn xi_linear(a: &XiLinear) -> Outcome {
    if a.n < 3 {
        return Err(UsageError(format!("--n must be at least 3, got {}", a.n)).into());
    }
    let mut report = RunReport::new("xi linear", json!({ "n": a.n, "xi": a.xi, "tilde": a.tilde }));
    let circuit = build_linear_circuit(a.n - 2, a.xi, a.tilde)?;
    let sched = angle_schedule(a.n - 2, a.xi, a.tilde)?;
    let out = embed_with_boundaries(&circuit.run()?)?;
    let oracle = xi_state(a.n, c(a.xi))?;
    let target = if a.tilde { tilde_transform(&oracle) } else { oracle };
    let f = fidelity(&out, &target)?;
    report.metric("theta", &sched.theta);
    report.metric("gate_counts", circuit.gate_counts());
    report.metric("fidelity", f);
    report.check_near_one("fidelity", f, a.tol);
    write_circuit(a.out.as_deref(), &circuit)?;
    Ok((report, None))
}

pub fn xi_stitch(a: &XiStitch) -> Outcome {
    if a.block == 0 || a.n < 3 || !(a.n - 2).is_multiple_of(a.block) {
        return Err(UsageError(format!("--block must divide N−2 = {}", a.n.saturating_sub(2))).into());
    }
    let k = (a.n - 2) / a.block;
    let plan = StitchPlan::new(k, a.block, a.xi)?;
    let mut report = RunReport::new(
        "xi stitch",
        json!({ "n": a.n, "block": a.block, "blocks": k, "xi": a.xi, "tilde": a.tilde, "shots": a.shots }),
    );
    let exact = success_probability_exact(a.block, k, a.xi)?;
    report.metric("success_probability", exact);
    if a.xi == 1.0 {
        let closed = success_probability_closed(a.block, k)?;
        report.metric("success_probability_formula", format!("F{}/F{}^{}", k * a.block + 2, a.block + 2, k));
        report.metric("success_probability_exact", closed.to_string());
        report.check_close("closed_form_vs_projection", rational_to_f64(&closed), exact, 1e-12);
    }
    let circuit = build_stitch_circuit(&plan, a.tilde)?;
    report.metric("n_qubits", plan.total_qubits());
    report.metric("gate_counts", circuit.gate_counts());
    let full = circuit.run()?;
    let (post, p) = postselect_ancillas(&full, &plan)?;
    report.metric("simulated_success_probability", p);
    report.check_close("simulated_success_probability", p, exact, 1e-12);
    let oracle = xi_state(a.n, c(a.xi))?;
    let target = if a.tilde { tilde_transform(&oracle) } else { oracle };
    let f = fidelity(&embed_with_boundaries(&post)?, &target)?;
    report.metric("postselected_fidelity", f);
    report.check_near_one("postselected_fidelity", f, a.tol);
    if let Some(shots) = a.shots {
        report.seed = Some(a.seed);
        let counts = full.sample(shots, a.seed)?;
        let anc = plan.ancilla_count();
        let mask = (1usize << anc) - 1;
        let kept: BTreeMap<usize, u64> = counts
            .iter()
            .filter(|(&x, _)| x & mask == 0)
            .fold(BTreeMap::new(), |mut m, (&x, &n)| {
                *m.entry(x >> anc).or_insert(0) += n;
                m
            });
        let accepted: u64 = kept.values().sum();
        report.metric("sampled_success_probability", accepted as f64 / shots as f64);
        if accepted > 0 {
            let emp = distribution_from_counts(&kept, accepted)?;
            let d = bhattacharyya_distance(&Distribution::from_state(&post), &emp)?;
            report.metric("bhattacharyya_postselected", d);
        }
    }
    write_circuit(a.out.as_deref(), &circuit)?;
    Ok((report, None))
}

pub fn sk_mps(a: &SkMps) -> Outcome {
    let mut report = RunReport::new("sk mps", json!({ "m": a.m, "k": a.k }));
    let mps = projected_dicke_mps(a.m, a.k)?;
    let stair = compile_mps(&mps)?;
    let circuit = stair.to_circuit()?;
    let f = fidelity(&circuit.run()?, &projected_dicke(a.m, a.k)?)?;
    report.metric("bond_dimension", mps.chi());
    report.metric("bond_ranks", &stair.bond_ranks);
    report.metric("max_block_width", stair.max_width());
    report.metric("depth_estimate", depth_estimate(a.m, a.k));
    report.metric("gate_counts", circuit.gate_counts());
    report.metric("fidelity", f);
    report.check_near_one("fidelity", f, a.tol);
    write_circuit(a.out.as_deref(), &circuit)?;
    Ok((report, None))
}

pub fn sk_variational(a: &SkVariational) -> Outcome {
    let mut report = RunReport::new(
        "sk variational",
        json!({ "n": a.n, "k": a.k, "restarts": a.restarts, "stop_below": a.stop_below, "finite_difference": a.finite_difference }),
    );
    report.seed = Some(a.seed);
    let cfg = OptimizeConfig {
        restarts: a.restarts,
        seed: a.seed,
        stop_below: a.stop_below,
        gradient: if a.finite_difference { GradientMethod::FiniteDifference } else { GradientMethod::Adjoint },
        ..OptimizeConfig::default()
    };
    let opt = optimize_ansatz(a.n, a.k, &cfg)?;
    let spec = build_ansatz(a.n, a.k)?;
    let circuit = spec.circuit(&opt.best_theta, true)?;
    let f = fidelity(&circuit.run()?, &scar_state(a.n, a.k)?)?;
    report.metric("n_params", opt.n_params);
    report.metric("restarts_run", opt.restarts_run);
    report.metric("best_restart", opt.best_restart);
    report.metric("infidelity", opt.best_infidelity);
    report.metric("circuit_fidelity", f);
    report.metric("best_theta", &opt.best_theta);
    report.metric("gate_counts", circuit.gate_counts());
    if a.n >= 5 {
        report.metric("interior_gate_counts", spec.stripped_circuit(&opt.best_theta, true)?.gate_counts());
    }
    if let Some(bound) = a.max_infidelity {
        report.check_at_most("infidelity", opt.best_infidelity, bound);
    }
    write_circuit(a.out.as_deref(), &circuit)?;
    Ok((report, Some(opt.histogram_csv())))
}

pub fn sk_kmax(a: &SkKmax) -> Outcome {
    let mut report = RunReport::new("sk kmax", json!({ "n": a.n, "compressed": a.compressed }));
    let plan = kmax_plan(a.n)?;
    let small = kmax_compressed_circuit(a.n)?;
    let energy = build_hj_compressed(a.n)?.expectation(&small.run()?)?;
    report.metric("k", plan.k_max);
    report.metric("theta", &plan.theta);
    report.metric("energy_hj", energy);
    report.check_close("energy_hj", energy, -(a.n as f64 - 3.0), a.tol);
    let circuit = if a.compressed {
        small
    } else {
        let full = kmax_circuit(a.n)?;
        let f_tilde = fidelity(&full.run()?, &scar_state_tilde(a.n, plan.k_max)?)?;
        let mut signed = full.clone();
        for q in (0..a.n).step_by(2) {
            signed.push(Gate::z(q))?;
        }
        let f = fidelity(&signed.run()?, &scar_state(a.n, plan.k_max)?)?;
        report.metric("fidelity_tilde", f_tilde);
        report.metric("fidelity", f);
        report.check_near_one("fidelity", f, a.tol);
        full
    };
    report.metric("gate_counts", circuit.gate_counts());
    write_circuit(a.out.as_deref(), &circuit)?;
    Ok((report, None))
}

pub fn adiabatic_sweep(a: &Sweep) -> Outcome {
    let mut report = RunReport::new("adiabatic sweep", json!({ "n": a.n, "t": a.t, "steps": a.steps }));
    let mut rows = Vec::new();
    let mut csv = String::from("t,fidelity\n");
    for &t in &a.t {
        let r = adiabatic_evolve(&SweepConfig { n: a.n, total_time: t, steps: a.steps })?;
        csv.push_str(&format!("{t:?},{:?}\n", r.fidelity));
        report.check_at_most("step_norm_drift", r.max_step_norm_drift, 1e-10);
        if let Some(min) = a.min_fidelity {
            report.check_at_most("infidelity_vs_min", 1.0 - r.fidelity, 1.0 - min);
        }
        rows.push(r);
    }
    report.metric("runs", &rows);
    Ok((report, Some(csv)))
}

pub fn adiabatic_gap(a: &crate::Gap) -> Outcome {
    if a.n.is_none() && a.fit.is_empty() {
        return Err(UsageError("give --n for a gap curve and/or --fit for the extrapolation".into()).into());
    }
    let mut report = RunReport::new("adiabatic gap", json!({ "n": a.n, "points": a.points, "fit": a.fit }));
    let mut csv = None;
    if let Some(n) = a.n {
        let curve = gap_scan(n, a.points)?;
        report.metric("min_gap", curve.min_gap);
        report.metric("min_s_over_t", curve.min_s_over_t);
        report.metric("all_gaps_above_0_1", curve.samples.iter().all(|s| s.gap > 0.1));
        csv = Some(curve.to_csv());
        report.metric("curve", &curve.samples);
    }
    if !a.fit.is_empty() {
        let fit = gap_extrapolate(&a.fit)?;
        report.metric("reference_intercept", 1.0 - 1.0 / 2f64.sqrt());
        report.metric("fit", fit);
    }
    Ok((report, csv))
}

pub fn adiabatic_tstar(a: &Tstar) -> Outcome {
    let mut report = RunReport::new(
        "adiabatic tstar",
        json!({ "n": a.n, "target": a.target, "steps": a.steps, "t_max": a.t_max }),
    );
    let mut csv = String::from("n,t_star\n");
    let mut values = Vec::new();
    for &n in &a.n {
        let t = find_tstar(n, a.target, a.steps, a.t_max)?;
        csv.push_str(&format!("{n},{t:?}\n"));
        values.push(json!({ "n": n, "t_star": t }));
    }
    report.metric("t_star", values);
    Ok((report, Some(csv)))
}

pub fn verify_revival(a: &Revival) -> Outcome {
    let period = revival_period(a.delta, a.j);
    if !period.is_finite() || period <= 0.0 {
        return Err(UsageError("revival period needs Δ + 2J > 0".into()).into());
    }
    let t = match a.t {
        TimeArg::Auto => period,
        TimeArg::At(t) => t,
    };
    let mut report = RunReport::new(
        "verify revival",
        json!({ "n": a.n, "xi": a.xi, "delta": a.delta, "j": a.j, "t": t }),
    );
    let f = revival_fidelity(a.n, c(a.xi), a.delta, a.j, t)?;
    report.metric("period", period);
    report.metric("fidelity", f);
    if matches!(a.t, TimeArg::Auto) {
        report.check_close("fidelity_at_period", f, 1.0, a.tol);
    }
    let mut csv = String::from("t,revival\n");
    for i in 0..=200 {
        let ti = 2.0 * period * i as f64 / 200.0;
        csv.push_str(&format!("{ti:?},{:?}\n", revival_fidelity(a.n, c(a.xi), a.delta, a.j, ti)?));
    }
    Ok((report, Some(csv)))
}

pub fn verify_project_mz(a: &ProjectMz) -> Outcome {
    let mut report = RunReport::new("verify project-mz", json!({ "n": a.n, "xi": a.xi, "k": a.k }));
    let state = xi_state(a.n, c(a.xi))?;
    let (proj, p) = project_magnetization(&state, a.k)?;
    let expected = a.xi.powi(2 * a.k as i32) * count_constrained(a.n, a.k) as f64 / normalization_z(a.n, a.xi * a.xi);
    let f = fidelity(&proj, &scar_state(a.n, a.k)?)?;
    report.metric("magnetization", a.n as f64 - 2.0 * a.k as f64);
    report.metric("probability", p);
    report.metric("expected_probability", expected);
    report.metric("fidelity", f);
    report.check_close("probability", p, expected, 1e-12);
    report.check_near_one("fidelity", f, a.tol);
    Ok((report, None))
}
