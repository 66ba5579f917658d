use std::time::Instant;

use chrono::Utc;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{load_config, GridSpec, ModelSpec, RunConfig};
use super::manifest::{emit, render_csv, write_sidecar, RunManifest, RunRecord, TOOL};
use super::model_file::ModelFile;
use super::{
    Command, Failure, Format, LimitsArgs, Mutation, OutputArgs, SimulateArgs, SweepArgs, VerifyArgs, EXIT_OK,
    EXIT_VERIFY_FAILED,
};
use crate::asymptotics::{self, LimitSpec};
use crate::error::Error;
use crate::exact::{self, ConvolutionConfig, ExceedanceReport};
use crate::model::OutcomeModel;
use crate::sim::{self, SimConfig};
use crate::verify::{self, VerifyOptions};

type CmdResult = Result<u8, Failure>;

const DEFAULT_T: [f64; 3] = [-1.0, 0.0, 1.0];
const DEFAULT_J: u32 = 1;
const DEFAULT_REPLICATES: u64 = 1000;
const DEFAULT_SEED: u64 = 0;

pub(super) fn dispatch(command: Command, argv: &[String]) -> CmdResult {
    let started = Utc::now();
    let clock = Instant::now();
    let (name, output, workers, code) = match command {
        Command::Exact(a) => {
            let (w, code) = cmd_sweep(&a, false)?;
            ("exact", a.output, w, code)
        }
        Command::Bounds(a) => {
            let (w, code) = cmd_sweep(&a, true)?;
            ("bounds", a.output, w, code)
        }
        Command::Simulate(a) => {
            let (w, code) = cmd_simulate(&a)?;
            ("simulate", a.output, w, code)
        }
        Command::Verify(a) => {
            let code = cmd_verify(&a)?;
            ("verify", a.output, 1, code)
        }
        Command::Limits(a) => {
            let code = cmd_limits(&a)?;
            ("limits", a.output, 1, code)
        }
    };
    let wall = clock.elapsed().as_secs_f64();
    info!("{name} finished in {wall:.3} s");
    if let Some(out) = &output.out {
        let record = RunRecord {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: name.to_string(),
            output: out.display().to_string(),
            started_at: started,
            finished_at: Utc::now(),
            wall_seconds: wall,
            workers,
            argv: argv.to_vec(),
        };
        write_sidecar(out, &record)?;
    }
    Ok(code)
}

fn file_config(output: &OutputArgs) -> Result<RunConfig, Failure> {
    match &output.config {
        Some(path) => Ok(load_config(path)?),
        None => Ok(RunConfig::default()),
    }
}

fn model_of(cfg: &RunConfig) -> Result<OutcomeModel, Failure> {
    let spec = cfg
        .model
        .as_ref()
        .ok_or_else(|| Error::config("no model given (use --model classical, chess or a model file)"))?;
    Ok(spec.resolve().map_err(|e| Error::config(e.to_string()))?)
}

fn n_grid(cfg: &RunConfig) -> Result<Vec<u64>, Failure> {
    Ok(cfg
        .n
        .as_ref()
        .ok_or_else(|| Error::config("no player counts given (use --n)"))?
        .n_values()?)
}

fn t_grid(cfg: &RunConfig) -> Result<Vec<f64>, Failure> {
    match &cfg.t_grid {
        Some(g) => Ok(g.t_values()?),
        None => Ok(DEFAULT_T.to_vec()),
    }
}

fn workers_of(cfg: &RunConfig) -> Result<usize, Failure> {
    match cfg.workers {
        Some(0) => Err(Error::config("workers must be at least 1").into()),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")).into())
}

fn list(values: impl IntoIterator<Item = f64>) -> Option<GridSpec> {
    Some(GridSpec::List(values.into_iter().collect()))
}

/// The resolved configuration echoed into the manifest, without the worker
/// count.
fn resolved(model: &OutcomeModel, n: &[u64], t: &[f64]) -> RunConfig {
    RunConfig {
        model: Some(ModelSpec::Inline(ModelFile::from_model(model))),
        n: list(n.iter().map(|&v| v as f64)),
        t_grid: list(t.iter().copied()),
        ..Default::default()
    }
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: T,
}

fn json_bytes<T: Serialize>(manifest: &RunManifest, body: T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(&JsonDoc { manifest, body }).map_err(Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn cmd_sweep(args: &SweepArgs, bounds: bool) -> Result<(usize, u8), Failure> {
    let flags = RunConfig {
        model: args.model.clone().map(ModelSpec::Name),
        n: args.n.clone().map(GridSpec::Spec),
        t_grid: args.t.clone().map(GridSpec::Spec),
        workers: args.output.workers,
        ..Default::default()
    };
    let cfg = file_config(&args.output)?.overridden_by(flags);
    let model = model_of(&cfg)?;
    let ns = n_grid(&cfg)?;
    let ts = t_grid(&cfg)?;
    let workers = workers_of(&cfg)?;
    if let Some(&n) = ns.iter().find(|&&n| n < 4) {
        return Err(Error::config(format!("exact computations need n >= 4, got n = {n}")).into());
    }

    let jobs: Vec<(u64, f64)> = ns.iter().flat_map(|&n| ts.iter().map(move |&t| (n, t))).collect();
    let conv = ConvolutionConfig::default();
    let results: Vec<Result<ExceedanceReport, Failure>> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(n, t)| exact::exceedance_report(&model, n, t, &conv).map_err(|e| Failure::from(e).at(n, t)))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let schema = if bounds { "bounds" } else { "exceedance" };
    let name = if bounds { "bounds" } else { "exact" };
    let manifest = RunManifest::new(name, schema, resolved(&model, &ns, &ts));
    let format = args.output.format.unwrap_or(Format::Csv);
    let bytes = if bounds {
        let rows = reports.iter().map(BoundsRow::from).collect::<Vec<_>>();
        match format {
            Format::Csv => render_csv(&manifest, &BoundsRow::HEADER, &rows.iter().map(BoundsRow::record).collect::<Vec<_>>())?,
            Format::Json => json_bytes(&manifest, Rows { rows })?,
        }
    } else {
        match format {
            Format::Csv => render_csv(
                &manifest,
                &ExceedanceReport::CSV_HEADER,
                &reports.iter().map(ExceedanceReport::csv_record).collect::<Vec<_>>(),
            )?,
            Format::Json => json_bytes(&manifest, Rows { rows: reports })?,
        }
    };
    emit(args.output.out.as_deref(), &bytes)?;
    Ok((workers, EXIT_OK))
}

#[derive(Serialize)]
struct Rows<T: Serialize> {
    rows: Vec<T>,
}

#[derive(Debug, Clone, Serialize)]
struct BoundsRow {
    model_id: String,
    n: u64,
    t: f64,
    p_n: f64,
    lambda_n: f64,
    pair_cov: f64,
    var_w: f64,
    stein_bound: f64,
    mean_mismatch_bound: f64,
    combined_bound: f64,
    rate_envelope: Option<f64>,
    ratio: Option<f64>,
}

impl BoundsRow {
    const HEADER: [&'static str; 12] = [
        "model_id",
        "n",
        "t",
        "p_n",
        "lambda_n",
        "pair_cov",
        "var_W",
        "stein_bound",
        "mean_mismatch_bound",
        "combined_bound",
        "rate_envelope",
        "ratio",
    ];

    fn from(r: &ExceedanceReport) -> Self {
        let envelope = asymptotics::rate_envelope(r.n).ok();
        BoundsRow {
            model_id: r.model_id.clone(),
            n: r.n,
            t: r.t,
            p_n: r.p_n,
            lambda_n: r.lambda_n,
            pair_cov: r.pair_cov,
            var_w: r.var_w,
            stein_bound: r.stein_bound,
            mean_mismatch_bound: r.mean_mismatch_bound,
            combined_bound: r.combined_bound,
            rate_envelope: envelope,
            ratio: envelope.map(|e| r.combined_bound / e),
        }
    }

    fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        vec![
            self.model_id.clone(),
            self.n.to_string(),
            fmt(self.t),
            fmt(self.p_n),
            fmt(self.lambda_n),
            fmt(self.pair_cov),
            fmt(self.var_w),
            fmt(self.stein_bound),
            fmt(self.mean_mismatch_bound),
            fmt(self.combined_bound),
            opt(self.rate_envelope),
            opt(self.ratio),
        ]
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(usize, u8), Failure> {
    let flags = RunConfig {
        model: args.model.clone().map(ModelSpec::Name),
        n: args.n.clone().map(GridSpec::Spec),
        t_grid: args.t.clone().map(GridSpec::Spec),
        j_max: args.j,
        replicates: args.replicates,
        seed: args.seed,
        workers: args.output.workers,
        ..Default::default()
    };
    let cfg = file_config(&args.output)?.overridden_by(flags);
    let model = model_of(&cfg)?;
    let ns = n_grid(&cfg)?;
    let [n] = ns.as_slice() else {
        return Err(Error::config(format!("simulate takes a single n, got {ns:?}")).into());
    };
    let sim_cfg = SimConfig {
        model,
        n: *n,
        t_grid: t_grid(&cfg)?,
        j_max: cfg.j_max.unwrap_or(DEFAULT_J),
        replicates: cfg.replicates.unwrap_or(DEFAULT_REPLICATES),
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        workers: workers_of(&cfg)?,
    };
    sim_cfg.validate()?;

    let refs = exact_references(&sim_cfg);
    let report = sim::run_experiment(&sim_cfg, refs.as_deref())?;

    let mut echoed = resolved(&sim_cfg.model, &[sim_cfg.n], &sim_cfg.t_grid);
    echoed.j_max = Some(sim_cfg.j_max);
    echoed.replicates = Some(sim_cfg.replicates);
    echoed.seed = Some(sim_cfg.seed);
    let manifest = RunManifest::new("simulate", "simulation", echoed);
    let bytes = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => json_bytes(&manifest, Report { report: &report })?,
        Format::Csv => render_csv(
            &manifest,
            &["section", "index", "key", "count"],
            &report.tidy_rows().into_iter().map(Vec::from).collect::<Vec<_>>(),
        )?,
    };
    emit(args.output.out.as_deref(), &bytes)?;
    Ok((sim_cfg.workers, EXIT_OK))
}

#[derive(Serialize)]
struct Report<'a> {
    report: &'a sim::SimReport,
}

/// Exact `λ_n(t)` for the simulated grid, when the convolution fits.
fn exact_references(cfg: &SimConfig) -> Option<Vec<ExceedanceReport>> {
    if cfg.n < 4 {
        return None;
    }
    let conv = ConvolutionConfig::default();
    let refs: Result<Vec<_>, _> = cfg
        .t_grid
        .iter()
        .map(|&t| exact::exceedance_report(&cfg.model, cfg.n, t, &conv))
        .collect();
    match refs {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("no exact reference: {e}");
            None
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let cfg = file_config(&args.output)?.overridden_by(RunConfig {
        budget: args.budget,
        ..Default::default()
    });
    let opts = VerifyOptions {
        budget: cfg.budget.unwrap_or(crate::oracle::DEFAULT_BUDGET),
        negate_covariance: args.mutate == Some(Mutation::NegateCovariance),
    };
    let report = verify::run_suite(&opts)?;
    let manifest = RunManifest::new(
        "verify",
        "verification",
        RunConfig {
            budget: Some(opts.budget),
            ..Default::default()
        },
    );
    let rendered = |format: Format| -> Result<Vec<u8>, Failure> {
        match format {
            Format::Json => json_bytes(&manifest, &report),
            Format::Csv => {
                let rows: Vec<Vec<String>> = report
                    .checks
                    .iter()
                    .map(|c| {
                        vec![
                            c.name.clone(),
                            c.status.to_string(),
                            c.grid_size.to_string(),
                            c.max_violation_exact.clone().unwrap_or_default(),
                            fmt(c.max_violation),
                            fmt(c.tolerance),
                            c.detail.clone(),
                        ]
                    })
                    .collect();
                render_csv(
                    &manifest,
                    &["check", "status", "grid_size", "max_violation_exact", "max_violation", "tolerance", "detail"],
                    &rows,
                )
                .map_err(Failure::from)
            }
        }
    };
    match (&args.output.out, args.output.format) {
        (Some(out), format) => {
            emit(Some(out), &rendered(format.unwrap_or(Format::Json))?)?;
            print!("{}", report.table());
        }
        (None, Some(format)) => emit(None, &rendered(format)?)?,
        (None, None) => print!("{}", report.table()),
    }
    let failed = report.failed();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        for c in failed {
            eprintln!("verification failed: {}", c.name);
        }
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn cmd_limits(args: &LimitsArgs) -> CmdResult {
    let flags = RunConfig {
        n: args.n.clone().map(GridSpec::Spec),
        t_grid: args.t.clone().map(GridSpec::Spec),
        j_max: args.j,
        ..Default::default()
    };
    let cfg = file_config(&args.output)?.overridden_by(flags);
    let ns = n_grid(&cfg)?;
    let ts = t_grid(&cfg)?;
    let j_max = cfg.j_max.unwrap_or(DEFAULT_J);

    let mut header: Vec<String> = [
        "n",
        "t",
        "a_n",
        "b_n",
        "x_n",
        "predicted_lambda",
        "predicted_pair_cov",
        "rate_envelope",
        "huber_centering",
        "phi_xn_asymptotic",
        "mills_tail_x_n",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..=j_max).map(|j| format!("limit_cdf_j{j}")));

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for &n in &ns {
        let norming = asymptotics::norming(n).map_err(|e| Failure::from(e).at(n, f64::NAN))?;
        for &t in &ts {
            let x = norming.x(t);
            let mut row = vec![
                n.to_string(),
                fmt(t),
                fmt(norming.a_n),
                fmt(norming.b_n),
                fmt(x),
                fmt(asymptotics::predicted_lambda(t)),
                fmt(asymptotics::predicted_pair_cov(n, t)?),
                asymptotics::rate_envelope(n).map(fmt).unwrap_or_default(),
                fmt(asymptotics::huber_centering(n)?),
                fmt(asymptotics::phi_xn_asymptotic(n, t)?),
                asymptotics::mills_tail(x).map(fmt).unwrap_or_default(),
            ];
            row.extend((0..=j_max).map(|j| fmt(asymptotics::order_stat_limit_cdf(LimitSpec { t, j }))));
            json_rows.push(header.iter().cloned().zip(row.iter().cloned()).collect::<std::collections::BTreeMap<_, _>>());
            rows.push(row);
        }
    }
    let mut echoed = RunConfig {
        n: list(ns.iter().map(|&v| v as f64)),
        t_grid: list(ts.iter().copied()),
        ..Default::default()
    };
    echoed.j_max = Some(j_max);
    let manifest = RunManifest::new("limits", "limits", echoed);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let bytes = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => render_csv(&manifest, &header_refs, &rows)?,
        Format::Json => json_bytes(&manifest, Rows { rows: json_rows })?,
    };
    emit(args.output.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}
