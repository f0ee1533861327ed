use crate::args::{Cli, Command, GridArgs, LoopArgs, PlantArgs};
use crate::output::{artifact, write_csv, write_json, Cell};
use crate::Failure;
use loewner_lab::data::densify_log;
use loewner_lab::descriptor::closed_loop_delay;
use loewner_lab::io::{load_realization, save_realization};
use loewner_lab::lddc;
use loewner_lab::loewner::{fit, interpolation_residual};
use loewner_lab::mfsa::{self, MfsaOptions, SweepOptions};
use loewner_lab::pi::{self, PiOptions, WeightingFilters};
use loewner_lab::plant::{default_band, log_grid};
use loewner_lab::{case_study, FrequencyDataset, PIController, PlantParameters, Realization, ReferenceModelSpec, TransferMap};
use serde::Serialize;
use std::path::{Path, PathBuf};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn existing(path: &Path) -> Result<&Path, Failure> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(usage(format!("input file {} does not exist", path.display())))
    }
}

fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!("--{name} must be positive, got {x}")))
    }
}

fn relative_tol(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(usage(format!("--{name} must lie in (0, 1), got {x}")))
    }
}

fn grid(g: &GridArgs) -> Result<Vec<f64>, Failure> {
    let (lo, hi) = default_band::<f64>();
    log_grid(g.grid_n, g.wmin.unwrap_or(lo), g.wmax.unwrap_or(hi)).map_err(|e| usage(e.to_string()))
}

fn plant_params(p: &PlantArgs) -> Result<PlantParameters, Failure> {
    let mut params = PlantParameters::default();
    if let Some(v) = p.length {
        params.length = v;
    }
    if let Some(v) = p.omega0 {
        params.omega0 = v;
    }
    if let Some(v) = p.damping {
        params.damping = v;
    }
    if let Some(v) = p.x_m {
        params.x_m = v;
    }
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(params)
}

fn load_plant(spec: &str, params: &PlantArgs) -> Result<TransferMap, Failure> {
    if spec == "builtin" {
        return Ok(plant_params(params)?.measured_transfer());
    }
    let path = PathBuf::from(spec);
    let rlz = load_realization(existing(&path)?)?;
    Ok(TransferMap::from_realization(spec, rlz))
}

/// `pi:KP,KI` or a realization JSON.
fn load_controller(spec: &str) -> Result<TransferMap, Failure> {
    if let Some(gains) = spec.strip_prefix("pi:") {
        let parts: Vec<&str> = gains.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
        return match parsed.as_deref() {
            Some(&[kp, ki]) => Ok(TransferMap::pi(kp, ki)),
            _ => Err(usage(format!("controller {spec:?} is not of the form pi:KP,KI"))),
        };
    }
    let path = PathBuf::from(spec);
    let rlz = load_realization(existing(&path)?)?;
    Ok(TransferMap::from_realization(spec, rlz))
}

fn mfsa_options(lp: &LoopArgs) -> Result<MfsaOptions<f64>, Failure> {
    positive("epsilon", lp.epsilon)?;
    Ok(MfsaOptions { svd_tol: relative_tol("svd-tol", lp.svd_tol)?, ..MfsaOptions::default() })
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Sample { grid: g, plant } => sample(out, &g, &plant),
        Command::Approximate { data, svd_tol, order } => approximate(out, &data, svd_tol, order),
        Command::Lddc { data, reference, svd_tol, model_order, order, max_order, kp, ki } => {
            let model_order = (model_order > 0).then_some(model_order);
            lddc(out, &data, &reference, svd_tol, model_order, order, max_order, PIController::new(kp, ki))
        }
        Command::Synth { realization, kp, ki, grid: g, plant } => {
            synth(out, &realization, PIController::new(kp, ki), &g, &plant)
        }
        Command::Mfsa { lp, tau } => stability(out, &lp, tau),
        Command::DelaySweep { lp, tau_min, tau_max, tau_n, refine } => delay_sweep(out, &lp, tau_min, tau_max, tau_n, refine),
    }
}

fn sample(out: &Path, g: &GridArgs, p: &PlantArgs) -> Result<(), Failure> {
    let h = plant_params(p)?.measured_transfer();
    let data = FrequencyDataset::from_transfer(&h, &grid(g)?)?;
    let path = artifact(out, "plant.csv");
    data.save_csv(&path)?;
    println!("wrote {} samples to {}", data.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct ApproximationSummary {
    order: usize,
    detected_rank: usize,
    svd_tol: f64,
    consistent: bool,
    max_relative_residual: f64,
    singular_values: Vec<f64>,
}

fn approximate(out: &Path, data: &Path, svd_tol: f64, order: Option<usize>) -> Result<(), Failure> {
    let svd_tol = relative_tol("svd-tol", svd_tol)?;
    let data = FrequencyDataset::load_csv(existing(data)?)?;
    if order == Some(0) {
        return Err(usage("--order must be at least 1"));
    }
    let f = fit(&data, svd_tol, order)?;
    let residual = interpolation_residual(&f.realization, &data.close_conjugate()?)?;
    save_realization(artifact(out, "realization.json"), &f.realization)?;
    let summary = ApproximationSummary {
        order: f.realization.order(),
        detected_rank: f.report.rank,
        svd_tol,
        consistent: f.report.consistent,
        max_relative_residual: residual,
        singular_values: f.report.row_singular_values.clone(),
    };
    write_json(&artifact(out, "approximation.json"), &summary)?;
    println!("order r = {} (detected {}), max relative residual {:.3e}", summary.order, summary.detected_rank, residual);
    Ok(())
}

fn reference_model(
    spec: &str,
    data: &FrequencyDataset,
    svd_tol: f64,
    model_order: Option<usize>,
    design: PIController,
) -> Result<ReferenceModelSpec, Failure> {
    match spec {
        "m1" => Ok(case_study::reference_m1()),
        "m2" => {
            let model = fit(data, relative_tol("svd-tol", svd_tol)?, model_order)?.realization;
            Ok(ReferenceModelSpec::closed_loop(&model, &design.realization())?)
        }
        path => {
            let rlz = load_realization(existing(Path::new(path))?)?;
            Ok(ReferenceModelSpec::new(TransferMap::from_realization(path, rlz)))
        }
    }
}

#[derive(Serialize)]
struct LddcSummary {
    reference: String,
    achievable: bool,
    gamma: f64,
    threshold: f64,
    smallest_safe_order: Option<usize>,
    exported_order: usize,
    exported_error: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn lddc(
    out: &Path,
    data: &Path,
    reference: &str,
    svd_tol: f64,
    model_order: Option<usize>,
    order: Option<usize>,
    max_order: usize,
    design: PIController,
) -> Result<(), Failure> {
    if max_order == 0 {
        return Err(usage("--max-order must be at least 1"));
    }
    let data = FrequencyDataset::load_csv(existing(data)?)?;
    let m = reference_model(reference, &data, svd_tol, model_order, design)?;
    let ach = lddc::check_achievability(&m)?;
    if !ach.achievable {
        log::warn!("reference model violates its interpolation constraints");
    }
    let kstar = lddc::ideal_controller_response(&data, &m)?;
    let mut orders: Vec<usize> = (1..=max_order).collect();
    if let Some(o) = order {
        if o == 0 {
            return Err(usage("--order must be at least 1"));
        }
        orders.push(o);
    }
    let mut sweep = lddc::reduce_controller(&kstar, &orders)?;
    let bound = lddc::small_gain_bound(&data, &m)?;
    sweep.apply_bound(bound);
    let chosen = order.or(sweep.smallest_safe_order()).unwrap_or(1);
    let row = sweep.row(chosen).expect("requested order is part of the sweep");
    let Some(k) = &row.realization else {
        let why = row.failure.clone().unwrap_or_default();
        return Err(Failure::Domain(anyhow::anyhow!("reduction to order {chosen} failed: {why}")));
    };
    save_realization(artifact(out, "controller.json"), k)?;
    let threshold = bound.threshold();
    write_csv(
        &artifact(out, "sweep.csv"),
        "order,error,gamma_inverse,verdict",
        sweep.rows.iter().map(|r| {
            vec![
                Cell::Int(r.order),
                Cell::Num(r.error.unwrap_or(f64::NAN)),
                Cell::Num(threshold),
                Cell::Text(r.verdict.to_string()),
            ]
        }),
    )?;
    let summary = LddcSummary {
        reference: reference.to_string(),
        achievable: ach.achievable,
        gamma: bound.gamma,
        threshold,
        smallest_safe_order: sweep.smallest_safe_order(),
        exported_order: chosen,
        exported_error: row.error,
    };
    write_json(&artifact(out, "lddc.json"), &summary)?;
    println!(
        "controller of order {chosen} (degree {}), grid error {:.3e}, small-gain threshold {:.4e}, smallest safe order {:?}",
        k.order(),
        row.error.unwrap_or(f64::NAN),
        threshold,
        summary.smallest_safe_order
    );
    if let Some((kp, ki)) = pi_form(k) {
        println!("PI form: kp = {kp:.6}, ki = {ki:.6}");
    }
    Ok(())
}

/// `(kp, ki)` of a first-order controller whose pole sits at the origin to
/// within 1e-6.
fn pi_form(k: &Realization) -> Option<(f64, f64)> {
    if k.order() != 1 || k.e()[(0, 0)] == 0.0 {
        return None;
    }
    let e = k.e()[(0, 0)];
    let pole = k.a()[(0, 0)] / e;
    (pole.abs() < 1e-6).then(|| (k.d(), k.c()[0] * k.b()[0] / e))
}

#[derive(Serialize)]
struct PiSummary {
    kp: f64,
    ki: f64,
    gamma: f64,
    omega: f64,
    start_gamma: f64,
    stable: Option<bool>,
    closed_loop_poles: Vec<[f64; 2]>,
}

fn synth(out: &Path, realization: &Path, start: PIController, g: &GridArgs, p: &PlantArgs) -> Result<(), Failure> {
    positive("kp", start.kp)?;
    positive("ki", start.ki)?;
    let rlz = load_realization(existing(realization)?)?;
    let model = TransferMap::from_realization("model", rlz);
    let grid = grid(g)?;
    let oracle = plant_params(p)?.measured_transfer();
    let d = pi::optimize_pi(&model, &WeightingFilters::default(), &grid, start, &PiOptions::default())?;
    let summary = PiSummary {
        kp: d.controller.kp,
        ki: d.controller.ki,
        gamma: d.performance.gamma,
        omega: d.performance.omega,
        start_gamma: d.start_gamma,
        stable: d.stable,
        closed_loop_poles: d.closed_loop_poles.unwrap_or_default().iter().map(|z| [z.re, z.im]).collect(),
    };
    write_json(&artifact(out, "pi.json"), &summary)?;
    for (name, h) in [("sensitivity_model.csv", &model), ("sensitivity_oracle.csv", &oracle)] {
        let pts = pi::sensitivity_sweep(h, &d.controller, &grid)?;
        write_csv(
            &artifact(out, name),
            "omega_rad_s,s_re,s_im,t_re,t_im",
            pts.iter().map(|q| vec![Cell::Num(q.omega), Cell::Num(q.s.re), Cell::Num(q.s.im), Cell::Num(q.t.re), Cell::Num(q.t.im)]),
        )?;
    }
    println!(
        "kp = {:.6}, ki = {:.6}, gamma = {:.4} (start {:.4}), stable {:?}",
        summary.kp, summary.ki, summary.gamma, summary.start_gamma, summary.stable
    );
    Ok(())
}

fn check_tau(tau: f64) -> Result<f64, Failure> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(tau)
    } else {
        Err(usage(format!("delay must be non-negative, got {tau}")))
    }
}

#[derive(Serialize)]
struct StabilitySummary<'a> {
    label: String,
    tau: f64,
    #[serde(flatten)]
    report: &'a mfsa::StabilityReport<f64>,
}

fn stability(out: &Path, lp: &LoopArgs, tau: f64) -> Result<(), Failure> {
    let tau = check_tau(tau)?;
    let opts = mfsa_options(lp)?;
    let plant = load_plant(&lp.plant, &lp.params)?;
    let base = grid(&lp.grid)?;
    let h = match &lp.controller {
        Some(spec) => closed_loop_delay(&plant, &load_controller(spec)?, tau)?,
        None => plant.delay(tau),
    };
    let sweep_defaults = SweepOptions::<f64>::default();
    let g = if tau > 0.0 { densify_log(&base, sweep_defaults.delay_densify) } else { base };
    let report = mfsa::stability_tag_with(&h, &g, lp.epsilon, &opts)?;
    write_json(&artifact(out, "stability.json"), &StabilitySummary { label: h.label().to_string(), tau, report: &report })?;
    println!("stab_tag = {:e}, verdict {} (order {})", report.stab_tag, report.verdict, report.order);
    if let Some(d) = &report.diagnostic {
        println!("diagnostic: {d}");
    }
    Ok(())
}

fn delay_sweep(out: &Path, lp: &LoopArgs, tau_min: f64, tau_max: f64, tau_n: usize, refine: usize) -> Result<(), Failure> {
    check_tau(tau_min)?;
    check_tau(tau_max)?;
    if tau_n == 0 || tau_max < tau_min || (tau_n > 1 && tau_max == tau_min) {
        return Err(usage(format!("bad delay range [{tau_min}, {tau_max}] with {tau_n} points")));
    }
    let opts = SweepOptions { mfsa: mfsa_options(lp)?, refine_steps: refine, ..SweepOptions::default() };
    let plant = load_plant(&lp.plant, &lp.params)?;
    let k = match &lp.controller {
        Some(spec) => load_controller(spec)?,
        None => case_study::lddc_pi().transfer(),
    };
    let base = grid(&lp.grid)?;
    let taus = mfsa::linspace(tau_min, tau_max, tau_n);
    let res = mfsa::delay_margin_sweep(&plant, &k, &taus, &base, lp.epsilon, &opts)?;
    write_csv(
        &artifact(out, "sweep.csv"),
        "tau_s,stab_tag,verdict",
        res.rows.iter().map(|r| vec![Cell::Num(r.tau), Cell::Num(r.stab_tag), Cell::Text(r.verdict.to_string())]),
    )?;
    write_json(&artifact(out, "sweep.json"), &res)?;
    let dense = densify_log(&base, opts.delay_densify);
    let mut rows = Vec::new();
    for &tau in &taus {
        let curve = mfsa::nyquist_curve(&plant, &k, tau, &dense)?;
        rows.extend(dense.iter().zip(curve).map(|(&w, z)| vec![Cell::Num(w), Cell::Num(z.re), Cell::Num(z.im), Cell::Num(tau)]));
    }
    write_csv(&artifact(out, "nyquist.csv"), "omega_rad_s,re,im,tau_s", rows)?;
    for r in &res.rows {
        println!("tau = {:.4} s  stab_tag = {:e}  {}", r.tau, r.stab_tag, r.verdict);
    }
    match res.first_unstable {
        Some(t) => println!("first unstable delay: {t:.4} s"),
        None => println!("no unstable delay in the sweep"),
    }
    if let Some(t) = res.refined {
        println!("refined destabilising delay: {t:.6} s");
    }
    Ok(())
}
