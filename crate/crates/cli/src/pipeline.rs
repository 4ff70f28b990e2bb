//! Orchestration of the classify → predict → verify pipelines behind the
//! subcommands, plus the symbol generators.

use crate::config::{
    DataSpec, DerivativeSpec, GridSpec, OperatorSource, PqPair, RunConfig, TimeWindow, Tolerances,
    SCHEMA_VERSION,
};
use crate::report::{
    fnv1a64, write_chart_svg, write_report, write_series_csv, ChartSeries, GridInfo, OperatorInfo,
    PredictionRow, Report, ToolInfo, VerificationRow,
};
use hypdecay::classify::classify_field;
use hypdecay::decay::{
    fit_decay, norm_series, solution_snapshot, verify_prediction_with, DecayFit, NormRequest,
};
use hypdecay::dual_gap;
use hypdecay::grid::FrequencyGrid;
use hypdecay::models::{GradSystem, WaveFamily, WaveFamilyCase};
use hypdecay::roots::{write_roots_csv, RootField};
use hypdecay::symbol::{OperatorJson, OperatorSymbol};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// Process-level failure with its exit code. Codes: 2 bad config, 3
/// numerical failure, 4 inconclusive classification, 5 fit non-convergence.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Inconclusive(String),
    Fit(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Inconclusive(_) => 4,
            CliError::Fit(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical: {m}"),
            CliError::Inconclusive(m) => write!(f, "inconclusive: {m}"),
            CliError::Fit(m) => write!(f, "fit: {m}"),
        }
    }
}

impl From<hypdecay::Error> for CliError {
    fn from(e: hypdecay::Error) -> Self {
        use hypdecay::Error as E;
        match &e {
            E::InvalidSymbol(_) | E::InvalidGrid(_) | E::DimensionMismatch(_) | E::Json(_)
            | E::Io(_) => CliError::Config(e.to_string()),
            E::Inconclusive(_) | E::MissingGeometry(_) | E::OnAxisBranch => {
                CliError::Inconclusive(e.to_string())
            }
            E::DegenerateFit(_) => CliError::Fit(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?;
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

pub fn build_symbol(source: &OperatorSource) -> Result<(OperatorSymbol, String), CliError> {
    match source {
        OperatorSource::Inline { symbol } => {
            let sym = OperatorSymbol::from_json_value(symbol)?;
            let desc = format!("inline symbol (n = {}, m = {})", sym.n, sym.m);
            Ok((sym, desc))
        }
        OperatorSource::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let sym = OperatorSymbol::from_json_str(&text)?;
            Ok((sym, format!("symbol from {}", path.display())))
        }
        OperatorSource::Wave { n, delta, c2, mu } => {
            let fam = WaveFamily::new(*n, *delta, *c2, *mu)?;
            let desc = format!(
                "wave family (n = {n}, delta = {delta}, c2 = {c2}, mu = {mu}): {}",
                wave_case_label(fam.case())
            );
            Ok((fam.symbol(), desc))
        }
        OperatorSource::Grad { n, truncation } => {
            let system = GradSystem::new(*n, *truncation)?;
            let sym = system.to_operator_symbol()?;
            let desc = format!(
                "grad moment system (n = {n}, truncation = {truncation}, {} moments)",
                system.m
            );
            Ok((sym, desc))
        }
    }
}

pub fn wave_case_label(case: WaveFamilyCase) -> &'static str {
    match case {
        WaveFamilyCase::FreeWave => "free wave",
        WaveFamilyCase::KleinGordon => "klein-gordon",
        WaveFamilyCase::DissipativeWave => "dissipative wave",
        WaveFamilyCase::DampedKleinGordon => "damped klein-gordon",
        WaveFamilyCase::NegativeMass => "negative mass",
        WaveFamilyCase::Unstable => "unstable",
    }
}

/// Canonical serialization the config hash runs over: the effective run
/// with the operator resolved to its JSON form, so `inline` and `file`
/// sources describing the same symbol hash identically. Output paths are
/// deliberately absent.
#[derive(Serialize)]
struct HashView<'a> {
    schema_version: u32,
    operator: OperatorJson,
    grid: &'a GridSpec,
    data: &'a DataSpec,
    pq: &'a [PqPair],
    derivatives: &'a DerivativeSpec,
    time_window: &'a TimeWindow,
    tolerances: &'a Tolerances,
}

fn config_hash(cfg: &RunConfig, sym: &OperatorSymbol) -> String {
    let view = HashView {
        schema_version: cfg.schema_version,
        operator: sym.to_json_value(),
        grid: &cfg.grid,
        data: &cfg.data,
        pq: &cfg.pq,
        derivatives: &cfg.derivatives,
        time_window: &cfg.time_window,
        tolerances: &cfg.tolerances,
    };
    let text = serde_json::to_string(&view).expect("hash view serialization cannot fail");
    format!("fnv1a64:{:016x}", fnv1a64(text.as_bytes()))
}

pub struct PipelineSummary {
    pub stability: String,
    pub applicable: bool,
    pub verification_counts: Option<(usize, usize, usize, usize)>,
    pub files: Vec<String>,
}

/// Shared analyze/verify pipeline. `verify` additionally measures norm
/// series, fits their exponents, and grades them against the prediction.
pub fn run_pipeline(
    cfg: &RunConfig,
    out_dir: &Path,
    verify: bool,
) -> Result<PipelineSummary, CliError> {
    cfg.validate().map_err(CliError::Config)?;
    std::fs::create_dir_all(out_dir)?;
    let (sym, desc) = build_symbol(&cfg.operator)?;
    if cfg.data.slot >= sym.m {
        return Err(CliError::Config(format!(
            "data slot {} out of range for operator order {}",
            cfg.data.slot, sym.m
        )));
    }
    let hyp = sym.check_strict_hyperbolicity(None);
    let grid = FrequencyGrid::new(sym.n, cfg.grid.extent, cfg.grid.points_per_axis)?;
    let field = RootField::compute(&sym, &grid)?;
    let mask = cfg.data.profile.support_mask(&grid);
    if !mask.iter().any(|&m| m) {
        return Err(CliError::Config("data profile has empty support on the grid".into()));
    }
    let classification = classify_field(&sym, &field, Some(&mask))?;
    let stability_class = classification.stability.class;

    let mut warnings = Vec::new();
    if !hyp.strictly_hyperbolic {
        warnings.push(format!(
            "principal symbol is not strictly hyperbolic (gap {:.3e}); classification may be \
             unreliable",
            hyp.min_gap
        ));
    }

    let mut per_pq = Vec::new();
    if classification.prediction.applicable {
        for pair in &cfg.pq {
            for &r in &cfg.derivatives.time_orders {
                for &a in &cfg.derivatives.space_orders {
                    let est = classification.prediction.evaluate(pair.p, pair.q, r, a)?;
                    per_pq.push(PredictionRow {
                        p: pair.p,
                        q: pair.q_label(),
                        time_order: r,
                        space_order: a,
                        power: est.power,
                        exp_rate: est.exp_rate,
                    });
                }
            }
        }
    } else {
        warnings.push("no decay prediction: operator grows on the sampled data support".into());
    }

    let mut files = vec!["report.json".to_string(), "roots.csv".to_string()];
    let mut verification = None;
    let mut counts = None;
    if verify {
        if classification.prediction.applicable {
            let (rows, series_files, series_warnings) =
                run_verification(cfg, &sym, &grid, &classification, out_dir)?;
            counts = Some(count_verdicts(&rows));
            files.extend(series_files);
            warnings.extend(series_warnings);
            verification = Some(rows);
        } else {
            warnings.push(
                "verification skipped: the operator is unstable on the data support, so there \
                 is no decay to measure"
                    .into(),
            );
            verification = Some(Vec::new());
        }
    }

    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::current(),
        config_hash: config_hash(cfg, &sym),
        operator: OperatorInfo {
            description: desc,
            n: sym.n,
            m: sym.m,
            strictly_hyperbolic: hyp.strictly_hyperbolic,
            min_principal_gap: hyp.min_gap,
        },
        grid: GridInfo {
            extent: grid.extent,
            points_per_axis: grid.points_per_axis,
            nodes: grid.num_nodes(),
        },
        classification,
        per_pq,
        verification,
        warnings,
    };
    write_report(&out_dir.join("report.json"), &report)?;
    let mut roots_file = std::fs::File::create(out_dir.join("roots.csv"))?;
    write_roots_csv(&field, &mut roots_file)?;

    Ok(PipelineSummary {
        stability: format!("{:?}", stability_class).to_lowercase(),
        applicable: report.classification.prediction.applicable,
        verification_counts: counts,
        files,
    })
}

fn count_verdicts(rows: &[VerificationRow]) -> (usize, usize, usize, usize) {
    let mut pass = 0;
    let mut fail = 0;
    let mut better = 0;
    let mut na = 0;
    for row in rows {
        match row.verdict.as_str() {
            "pass" => pass += 1,
            "fail" => fail += 1,
            "better_than_predicted" => better += 1,
            _ => na += 1,
        }
    }
    (pass, fail, better, na)
}

fn run_verification(
    cfg: &RunConfig,
    sym: &OperatorSymbol,
    grid: &FrequencyGrid,
    classification: &hypdecay::classify::ClassificationReport,
    out_dir: &Path,
) -> Result<(Vec<VerificationRow>, Vec<String>, Vec<String>), CliError> {
    let times = cfg.sample_times();
    let request = NormRequest {
        slot: cfg.data.slot,
        time_orders: cfg.derivatives.time_orders.clone(),
        space_orders: cfg.derivatives.space_orders.clone(),
        times: times.clone(),
    };
    let series = norm_series(sym, grid, &cfg.data.profile, &request)?;
    let warnings = series.warnings.clone();

    // Fit each measured series once; (p, q) rows share them.
    let mut fits: BTreeMap<(bool, usize, usize), DecayFit> = BTreeMap::new();
    let mut files = Vec::new();
    let needs_linf = cfg.pq.iter().any(|pair| pair.q.is_infinite());
    let needs_l2 = cfg.pq.iter().any(|pair| (pair.q - 2.0).abs() < 1e-9);
    for (ri, &r) in cfg.derivatives.time_orders.iter().enumerate() {
        for (ai, &a) in cfg.derivatives.space_orders.iter().enumerate() {
            for (use_l2, tag, needed) in
                [(false, "linf", needs_linf), (true, "l2", needs_l2)]
            {
                if !needed {
                    continue;
                }
                let values = series.series(ri, ai, use_l2);
                let csv = format!("series_{tag}_r{r}_a{a}.csv");
                write_series_csv(&out_dir.join(&csv), &times, &values)?;
                let chart = format!("chart_{tag}_r{r}_a{a}.svg");
                write_chart_svg(
                    &out_dir.join(&chart),
                    &format!("{tag} norm surrogate, d_t^{r}, |alpha| = {a}"),
                    "t",
                    "norm",
                    &[ChartSeries {
                        label: format!("{tag} r={r} a={a}"),
                        points: times.iter().cloned().zip(values.iter().cloned()).collect(),
                    }],
                    true,
                    true,
                )?;
                files.push(csv);
                files.push(chart);
                fits.insert((use_l2, ri, ai), fit_decay(&times, &values)?);
            }
        }
    }

    let mut rows = Vec::new();
    for pair in &cfg.pq {
        let surrogate = if pair.q.is_infinite() {
            Some(false)
        } else if (pair.q - 2.0).abs() < 1e-9 {
            Some(true)
        } else {
            None
        };
        for (ri, &r) in cfg.derivatives.time_orders.iter().enumerate() {
            for (ai, &a) in cfg.derivatives.space_orders.iter().enumerate() {
                let predicted = classification.prediction.evaluate(pair.p, pair.q, r, a)?;
                let row = match surrogate {
                    None => VerificationRow {
                        p: pair.p,
                        q: pair.q_label(),
                        time_order: r,
                        space_order: a,
                        surrogate: "none".into(),
                        predicted_power: predicted.power,
                        predicted_rate: predicted.exp_rate,
                        fitted_power: f64::NAN,
                        fitted_rate: f64::NAN,
                        fit_model: "none".into(),
                        fit_rms: 0.0,
                        verdict: "not_applicable".into(),
                        detail: "no grid surrogate for intermediate (p, q); only q = 2 and \
                                 q = inf are measured"
                            .into(),
                    },
                    Some(use_l2) => {
                        let fit = &fits[&(use_l2, ri, ai)];
                        let outcome = verify_prediction_with(
                            &predicted,
                            classification.stability.class,
                            dual_gap(pair.p, pair.q),
                            fit,
                            cfg.tolerances.power,
                            cfg.tolerances.rate_rel,
                        );
                        VerificationRow {
                            p: pair.p,
                            q: pair.q_label(),
                            time_order: r,
                            space_order: a,
                            surrogate: if use_l2 { "l2".into() } else { "linf".into() },
                            predicted_power: predicted.power,
                            predicted_rate: predicted.exp_rate,
                            fitted_power: fit.power,
                            fitted_rate: fit.rate,
                            fit_model: format!("{:?}", fit.model).to_lowercase(),
                            fit_rms: fit.rms,
                            verdict: verdict_label(outcome.verdict).into(),
                            detail: outcome.detail,
                        }
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok((rows, files, warnings))
}

fn verdict_label(v: hypdecay::decay::Verdict) -> &'static str {
    use hypdecay::decay::Verdict as V;
    match v {
        V::Pass => "pass",
        V::BetterThanPredicted => "better_than_predicted",
        V::Fail => "fail",
        V::NotApplicable => "not_applicable",
    }
}

/// Snapshot sampling for `solve`.
pub fn run_solve(
    cfg: &RunConfig,
    out_dir: &Path,
    times: &[f64],
) -> Result<Vec<String>, CliError> {
    cfg.validate().map_err(CliError::Config)?;
    std::fs::create_dir_all(out_dir)?;
    let (sym, _) = build_symbol(&cfg.operator)?;
    if sym.n != 1 {
        return Err(CliError::Config("solve snapshots are implemented for n = 1 only".into()));
    }
    if times.is_empty() {
        return Err(CliError::Config("at least one snapshot time is required".into()));
    }
    let grid = FrequencyGrid::new(sym.n, cfg.grid.extent, cfg.grid.points_per_axis)?;
    let mut files = Vec::new();
    let mut chart_data = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let snap = solution_snapshot(&sym, &grid, &cfg.data.profile, cfg.data.slot, t)?;
        let name = format!("solution_{k:02}.csv");
        let mut text = String::from("x,magnitude\n");
        for (x, m) in snap.xs.iter().zip(&snap.magnitudes) {
            text.push_str(&format!("{x:.12e},{m:.12e}\n"));
        }
        std::fs::write(out_dir.join(&name), text)?;
        files.push(name);
        chart_data.push(ChartSeries {
            label: format!("t = {t}"),
            points: snap.xs.iter().cloned().zip(snap.magnitudes.iter().cloned()).collect(),
        });
    }
    write_chart_svg(
        &out_dir.join("chart_solution.svg"),
        "|u(t, x)|",
        "x",
        "|u|",
        &chart_data,
        false,
        false,
    )?;
    files.push("chart_solution.svg".into());
    Ok(files)
}

fn template_grid(n: usize, grad: bool) -> GridSpec {
    match (n, grad) {
        (1, false) => GridSpec { extent: 7.0, points_per_axis: 257 },
        (1, true) => GridSpec { extent: 20.0, points_per_axis: 1025 },
        (2, _) => GridSpec { extent: 6.0, points_per_axis: 193 },
        _ => GridSpec { extent: 3.0, points_per_axis: 65 },
    }
}

fn write_config_template(
    path: &Path,
    operator: OperatorSource,
    grid: GridSpec,
    slot: usize,
) -> Result<(), CliError> {
    let cfg = RunConfig {
        schema_version: SCHEMA_VERSION,
        operator,
        grid,
        data: DataSpec {
            profile: hypdecay::decay::DataProfile::Gaussian { width: 1.0 },
            slot,
        },
        pq: crate::config::default_pq(),
        derivatives: DerivativeSpec::default(),
        time_window: TimeWindow::default(),
        tolerances: Tolerances::default(),
        out_dir: None,
    };
    let mut text = serde_json::to_string_pretty(&cfg)
        .map_err(|e| CliError::Config(format!("template serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `grad` subcommand: emit the symbol JSON, a readable matrix dump, and a
/// ready-to-run config.
pub fn run_grad(n: usize, truncation: u32, out_dir: &Path) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let system = GradSystem::new(n, truncation)?;
    let sym = system.to_operator_symbol()?;
    std::fs::write(out_dir.join("symbol.json"), sym.to_json_string())?;

    let mut dump = String::new();
    dump.push_str(&format!(
        "grad moment system: n = {n}, truncation = {truncation}, moments = {}\n\n",
        system.m
    ));
    dump.push_str("moment multi-indices (graded order):\n");
    for alpha in &system.alphas {
        dump.push_str(&format!("  {:?}\n", alpha.0));
    }
    for (axis, a) in system.a_mats.iter().enumerate() {
        dump.push_str(&format!("\nA_{} =\n", axis + 1));
        for row in 0..system.m {
            let cells: Vec<String> =
                (0..system.m).map(|col| format!("{:8.4}", a[row * system.m + col])).collect();
            dump.push_str(&format!("  [{}]\n", cells.join(", ")));
        }
    }
    let diag: Vec<String> = system.b_diag.iter().map(|d| format!("{d}")).collect();
    dump.push_str(&format!("\nB = diag({})\n", diag.join(", ")));
    std::fs::write(out_dir.join("matrices.txt"), dump)?;

    write_config_template(
        &out_dir.join("config.json"),
        OperatorSource::Grad { n, truncation },
        template_grid(n, true),
        0,
    )?;
    Ok(vec!["symbol.json".into(), "matrices.txt".into(), "config.json".into()])
}

/// `wave` subcommand: emit the wave-family symbol and a starter config.
pub fn run_wave(
    n: usize,
    delta: f64,
    c2: f64,
    mu: f64,
    out_dir: &Path,
) -> Result<(Vec<String>, &'static str), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let fam = WaveFamily::new(n, delta, c2, mu)?;
    let sym = fam.symbol();
    std::fs::write(out_dir.join("symbol.json"), sym.to_json_string())?;
    write_config_template(
        &out_dir.join("config.json"),
        OperatorSource::Wave { n, delta, c2, mu },
        template_grid(n, false),
        sym.m - 1,
    )?;
    Ok((vec!["symbol.json".into(), "config.json".into()], wave_case_label(fam.case())))
}

/// Resolve the output directory: explicit flag, then the `HYPDECAY_OUT`
/// environment override, then the config, then the working directory.
pub fn resolve_out_dir(flag: Option<PathBuf>, from_config: Option<&Path>) -> PathBuf {
    flag.or_else(|| std::env::var_os("HYPDECAY_OUT").map(PathBuf::from))
        .or_else(|| from_config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."))
}
