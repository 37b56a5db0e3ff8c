use std::io::Write;
use std::time::Instant;

use subexp_core::estimators::{CSV_HEADER, RATE_SWEEP_HEADER};
use subexp_core::{
    assumption, big_jump_diagnostics, esscher_is, esscher_is_with_tilt, ibp_identity_check, json, legendre,
    legendre_second, naive_mc, optimal_tilt, phi, rate_sweep, relative_variance, shift_is, subexp_tchebychev_bound,
    symmetrized_tchebychev_bound, DistributionModel, Error, EstimatorResult, EventSpec, RandomStream, TiltedLaw,
};

use crate::model::{self, Model};
use crate::{svg, Cli, Command, EventShapeArg, Failure, Format, MethodArg, Options};

const DEFAULT_REPS: u64 = 100_000;
const DEFAULT_SEED: u64 = 1;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let opts = &cli.opts;
    if let Some(t) = opts.threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start thread pool: {e}")))?;
    }
    let model = model::build(opts)?;
    match cli.command {
        Command::FreeEnergy => free_energy(opts, &model),
        Command::Check => check(opts, &model),
        Command::Legendre => legendre_table(opts, &model),
        Command::Estimate => estimate(opts, &model),
        Command::RateSweep => sweep(opts, &model),
        Command::Diagnostics => diagnostics(opts, &model),
        Command::Bench => bench(opts, &model),
    }
}

fn emit(opts: &Options, text: &str) -> Result<(), Failure> {
    match &opts.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn format(opts: &Options) -> Format {
    opts.format.unwrap_or(Format::Csv)
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        json::number(v)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.into_iter().map(csv_number).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn json_rows(keys: &[&str], rows: &[Vec<f64>]) -> String {
    json::array(rows.iter().map(|r| {
        let fields: Vec<(&str, String)> = keys.iter().copied().zip(r.iter().map(|v| json::number(*v))).collect();
        json::object(&fields)
    }))
}

fn theory_rate(model: &Model, x: f64) -> f64 {
    model.fe.xi() * x.powf(model.alpha())
}

fn default_eta_grid(xi: f64) -> Vec<f64> {
    let span = if xi.is_finite() { xi } else { 2.0 };
    (-19..=19).map(|k| k as f64 * span / 20.0).collect()
}

fn free_energy(opts: &Options, model: &Model) -> Result<(), Failure> {
    let fe = &model.fe;
    let grid = opts.eta_grid.clone().unwrap_or_else(|| default_eta_grid(fe.xi()));
    if grid.is_empty() {
        return Err(Failure::usage("eta grid is empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &eta in &grid {
        let v = match relative_variance(fe, eta) {
            Ok(v) => v.value(),
            Err(Error::UndefinedAtZero) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        rows.push(vec![eta, fe.lambda(eta)?, fe.lambda_prime(eta)?, fe.lambda_second(eta)?, v]);
    }
    let keys = ["eta", "lambda", "lambda_prime", "lambda_second", "V"];
    let text = match format(opts) {
        Format::Csv => csv_table(&keys.join(","), rows),
        Format::Json => {
            json::object(&[
                ("model", json::string(&model.label)),
                ("alpha", json::number(model.alpha())),
                ("xi", json::number(fe.xi())),
                ("rows", json_rows(&keys, &rows)),
            ]) + "\n"
        }
    };
    emit(opts, &text)
}

fn check(opts: &Options, model: &Model) -> Result<(), Failure> {
    let report = assumption::check(&model.fe, &assumption::CheckConfig::default())?;
    emit(opts, &(report.to_json() + "\n"))?;
    if report.all_ok() {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!("assumption check failed for {} (status {})", model.label, report.status),
        })
    }
}

fn legendre_table(opts: &Options, model: &Model) -> Result<(), Failure> {
    let grid = opts
        .x_grid
        .clone()
        .unwrap_or_else(|| vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4]);
    if grid.is_empty() {
        return Err(Failure::usage("x grid is empty"));
    }
    let fe = &model.fe;
    let xi = fe.xi();
    let mut rows = Vec::with_capacity(grid.len());
    for &x in &grid {
        let point = legendre(fe, x)?;
        let curvature = legendre_second(fe, x)?;
        let slope = if x != 0.0 { point.value / x } else { f64::NAN };
        let rate = if xi.is_finite() { xi * x.abs().powf(model.alpha()) } else { f64::NAN };
        rows.push(vec![x, point.value, point.maximizer, curvature, slope, rate]);
    }
    let keys = ["x", "legendre", "maximizer", "legendre_second", "slope", "rate_function"];
    let text = match format(opts) {
        Format::Csv => csv_table(&keys.join(","), rows),
        Format::Json => json_rows(&keys, &rows) + "\n",
    };
    emit(opts, &text)
}

fn event(opts: &Options) -> Result<EventSpec, Failure> {
    let n = opts.n.unwrap_or(100);
    let x = opts.x.unwrap_or(1.0);
    Ok(match opts.shape.unwrap_or(EventShapeArg::Tail) {
        EventShapeArg::Tail => {
            if opts.delta.is_some() {
                return Err(Failure::usage("--delta only applies to --shape ball"));
            }
            EventSpec::tail(n, x)?
        }
        EventShapeArg::Ball => {
            let delta = opts.delta.ok_or_else(|| Failure::usage("--shape ball needs --delta"))?;
            EventSpec::ball(n, x, delta)?
        }
    })
}

fn run_method(
    method: MethodArg,
    opts: &Options,
    model: &Model,
    dist: &DistributionModel,
    ev: &EventSpec,
) -> Result<EstimatorResult, Failure> {
    let reps = opts.reps.unwrap_or(DEFAULT_REPS);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    Ok(match method {
        MethodArg::Naive => naive_mc(dist, ev, reps, seed)?,
        MethodArg::Esscher => match opts.eta {
            Some(eta) => esscher_is_with_tilt(dist, &model.fe, ev, reps, seed, eta)?,
            None => esscher_is(dist, &model.fe, ev, reps, seed)?,
        },
        MethodArg::Shift => shift_is(dist, ev, reps, seed)?,
        MethodArg::All => unreachable!("expanded by the caller"),
    })
}

fn methods(opts: &Options) -> Vec<MethodArg> {
    match opts.method.unwrap_or(MethodArg::Esscher) {
        MethodArg::All => vec![MethodArg::Naive, MethodArg::Esscher, MethodArg::Shift],
        m => vec![m],
    }
}

fn results_text(opts: &Options, results: &[EstimatorResult]) -> String {
    match format(opts) {
        Format::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            for r in results {
                out.push_str(&r.to_csv_row());
                out.push('\n');
            }
            out
        }
        Format::Json => json::array(results.iter().map(EstimatorResult::to_json)) + "\n",
    }
}

fn estimate(opts: &Options, model: &Model) -> Result<(), Failure> {
    let dist = model.dist()?;
    let ev = event(opts)?;
    let theory = theory_rate(model, ev.x);
    let mut results = Vec::new();
    for m in methods(opts) {
        let r = run_method(m, opts, model, dist, &ev)?;
        eprintln!(
            "{}: estimate={:.6e} se={:.3e} empirical_rate={} theory_rate={}",
            r.method,
            r.estimate,
            r.standard_error,
            csv_number(r.empirical_rate),
            csv_number(theory)
        );
        results.push(r);
    }
    emit(opts, &results_text(opts, &results))
}

fn sweep(opts: &Options, model: &Model) -> Result<(), Failure> {
    let dist = model.dist()?;
    let x = opts.x.unwrap_or(1.0);
    let grid = opts.n_grid.clone().unwrap_or_else(|| vec![10, 50, 100, 500]);
    let points = rate_sweep(
        dist,
        &model.fe,
        x,
        &grid,
        opts.reps.unwrap_or(DEFAULT_REPS),
        opts.seed.unwrap_or(DEFAULT_SEED),
    )?;
    let theory = points[0].theory_rate;
    let text = match format(opts) {
        Format::Csv => {
            let mut out = format!("{RATE_SWEEP_HEADER}\n");
            for p in &points {
                out.push_str(&p.to_csv_row());
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows = json::array(points.iter().map(|p| {
                let rate = p.result.empirical_rate;
                json::object(&[
                    ("n", p.n.to_string()),
                    ("estimate", json::number(p.result.estimate)),
                    ("std_error", json::number(p.result.standard_error)),
                    (
                        "empirical_rate",
                        if rate.is_finite() { json::number(rate) } else { json::string("+inf") },
                    ),
                    ("theory_rate", json::number(p.theory_rate)),
                    ("tilt_eta", p.result.tilt_eta.map(json::number).unwrap_or_else(|| "null".into())),
                ])
            }));
            json::object(&[
                ("model", json::string(&model.label)),
                ("x", json::number(x)),
                ("points", rows),
            ]) + "\n"
        }
    };
    for p in &points {
        eprintln!(
            "n={}: empirical_rate={} theory_rate={}",
            p.n,
            csv_number(p.result.empirical_rate),
            csv_number(theory)
        );
    }
    if let Some(path) = &opts.plot {
        let series: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.result.empirical_rate)).collect();
        let title = format!("empirical rate, {} at x = {x}", model.label);
        std::fs::write(path, svg::rate_chart(&title, &series, theory))?;
    }
    emit(opts, &text)
}

fn diagnostics(opts: &Options, model: &Model) -> Result<(), Failure> {
    let dist = model.dist()?;
    let fe = &model.fe;
    let ev = event(opts)?;
    let reps = opts.reps.unwrap_or(DEFAULT_REPS);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let jump = big_jump_diagnostics(dist, fe, &ev, reps, seed)?;

    let xi = fe.xi();
    let z = ev.n as f64 * ev.x;
    let tail = if dist.has_closed_tail() { Some(dist.tail(z)?) } else { None };
    let mut tcheb = Vec::new();
    for frac in [0.5, 0.9, 0.99] {
        let eta = frac * xi;
        let bound = subexp_tchebychev_bound(fe, eta, z)?;
        tcheb.push(json::object(&[
            ("eta", json::number(eta)),
            ("z", json::number(z)),
            ("bound", json::number(bound)),
            ("tail", tail.map(json::number).unwrap_or_else(|| "null".into())),
            ("dominates", tail.map(|t| (t <= bound).to_string()).unwrap_or_else(|| "null".into())),
        ]));
    }

    // symmetrized bound at the optimal tilt against tilted draws of phi_a(X~)
    let eta = optimal_tilt(fe, ev.n, ev.x)?;
    let k = 0.5 * (xi - eta);
    let law = TiltedLaw::new(fe, eta)?;
    let mean = fe.lambda_prime(eta)?;
    let mut rng = RandomStream::derived(seed, u64::MAX);
    let draws = reps.min(1_000_000);
    let zs = (0..draws)
        .map(|_| law.sample(&mut rng).map(|y| phi(law.alpha(), y)))
        .collect::<subexp_core::Result<Vec<f64>>>()?;
    let sd = fe.lambda_second(eta)?.sqrt();
    let mut sym = Vec::new();
    for mult in [0.5, 1.0, 2.0, 4.0] {
        let a = mult * sd;
        let bound = symmetrized_tchebychev_bound(fe, k, a, eta)?;
        let freq = zs.iter().filter(|z| (*z - mean).abs() > a).count() as f64 / draws as f64;
        sym.push(json::object(&[
            ("eta", json::number(eta)),
            ("k", json::number(k)),
            ("a", json::number(a)),
            ("bound", json::number(bound)),
            ("simulated", json::number(freq)),
            ("dominates", (freq <= bound).to_string()),
        ]));
    }

    let ibp = ibp_identity_check(dist, 0.5, -1.0, 1.0)?;
    let text = json::object(&[
        ("model", json::string(&model.label)),
        ("big_jump", jump.to_json()),
        ("tchebychev", json::array(tcheb)),
        ("symmetrized_tchebychev", json::array(sym)),
        (
            "ibp",
            json::object(&[
                ("a", json::number(0.5)),
                ("r1", json::number(-1.0)),
                ("r2", json::number(1.0)),
                ("lhs", json::number(ibp.lhs)),
                ("rhs", json::number(ibp.rhs)),
                ("abs_diff", json::number(ibp.abs_diff)),
            ]),
        ),
    ]);
    eprintln!(
        "A1={:.6e} A2={:.6e} conditional_max_fraction={:.4}",
        jump.a1, jump.a2, jump.conditional_max_fraction
    );
    emit(opts, &(text + "\n"))
}

fn bench(opts: &Options, model: &Model) -> Result<(), Failure> {
    let dist = model.dist()?;
    let ev = event(opts)?;
    let mut rows = Vec::new();
    for m in [MethodArg::Naive, MethodArg::Esscher, MethodArg::Shift] {
        let start = Instant::now();
        let r = run_method(m, opts, model, dist, &ev)?;
        let seconds = start.elapsed().as_secs_f64();
        // variance per unit time: smaller is better
        let work = seconds * r.standard_error.powi(2) * r.replications as f64;
        rows.push((r, seconds, work));
    }
    let text = match format(opts) {
        Format::Csv => {
            let mut out = String::from("method,estimate,std_error,relative_error,seconds,work_normalized_variance\n");
            for (r, s, w) in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.method,
                    csv_number(r.estimate),
                    csv_number(r.standard_error),
                    csv_number(r.relative_error()),
                    csv_number(*s),
                    csv_number(*w)
                ));
            }
            out
        }
        Format::Json => {
            json::array(rows.iter().map(|(r, s, w)| {
                json::object(&[
                    ("method", json::string(&r.method.to_string())),
                    ("estimate", json::number(r.estimate)),
                    ("std_error", json::number(r.standard_error)),
                    ("relative_error", json::number(r.relative_error())),
                    ("seconds", json::number(*s)),
                    ("work_normalized_variance", json::number(*w)),
                ])
            })) + "\n"
        }
    };
    emit(opts, &text)
}
