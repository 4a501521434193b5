//! The experiment subcommands. Each resolves its configuration, writes a
//! `manifest.csv` echoing it (defaults included), runs the study and emits
//! result CSVs into the output directory.

use std::path::Path;

use nvsde_core::errorlab::{
    bracket_mn, compare_distributions, fit_rate, normalized_error_samples, simulate_limit_sde_u,
    simulate_limit_sde_v, strong_error, ErrorKind, ErrorSampleSet, Scheme,
};
use nvsde_core::registry::build_model;
use nvsde_core::schemes::RefConfig;
use nvsde_core::vecfield::{check_commutativity, sample_points, SdeModel, COMMUTE_BASE_TOL};
use nvsde_core::Error;

use crate::config::{ExperimentConfig, KindChoice};
use crate::output::{fmt17, CsvFile};
use crate::par::RayonMap;
use crate::{EXIT_DEGENERATE, EXIT_FAILURE, EXIT_OK};

fn exit_of(err: &Error) -> i32 {
    match err {
        Error::DegenerateData(_) => EXIT_DEGENERATE,
        _ => EXIT_FAILURE,
    }
}

fn fail(context: &str, err: &Error) -> i32 {
    eprintln!("{context}: {err}");
    exit_of(err)
}

fn fail_io(context: &str, err: &std::io::Error) -> i32 {
    eprintln!("{context}: {err}");
    EXIT_FAILURE
}

fn write_manifest(cfg: &ExperimentConfig, dir: &Path) -> std::io::Result<()> {
    let mut csv = CsvFile::create(&dir.join("manifest.csv"), &["key", "value"])?;
    for (k, v) in cfg.manifest_rows() {
        csv.row_str(&[&k, &v])?;
    }
    csv.finish()
}

/// Build model and manifest; shared preamble of every subcommand.
fn setup(cfg: &ExperimentConfig) -> Result<SdeModel, i32> {
    let mut model = build_model(
        &cfg.model,
        &cfg.params,
        cfg.x0.as_deref(),
        cfg.horizon,
    )
    .map_err(|e| fail("model", &e))?;
    if let Some(substeps) = cfg.flow_substeps {
        use nvsde_core::flows::FlowSpec;
        let spec = FlowSpec::numeric(substeps).map_err(|e| fail("flow_substeps", &e))?;
        if matches!(model.drift_flow, FlowSpec::Numeric { .. }) {
            model.drift_flow = spec.clone();
        }
        for f in &mut model.diffusion_flows {
            if matches!(f, FlowSpec::Numeric { .. }) {
                *f = spec.clone();
            }
        }
    }
    write_manifest(cfg, &cfg.out).map_err(|e| fail_io("manifest.csv", &e))?;
    Ok(model)
}

pub fn cmd_converge(cfg: &ExperimentConfig) -> i32 {
    let model = match setup(cfg) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let scheme = match Scheme::parse(&cfg.scheme) {
        Ok(s) => s,
        Err(e) => return fail("scheme", &e),
    };
    let exec = match RayonMap::new(cfg.threads) {
        Ok(e) => e,
        Err(e) => return fail("threads", &e),
    };
    let table = match strong_error(
        &model,
        scheme,
        &cfg.n_list,
        cfg.m,
        cfg.seed,
        RefConfig {
            refinement: cfg.ref_refine,
        },
        &exec,
    ) {
        Ok(t) => t,
        Err(e) => return fail("converge", &e),
    };
    let fit = fit_rate(&table);
    let write = || -> std::io::Result<()> {
        let mut csv = CsvFile::create(&cfg.out.join("rates.csv"), &["N", "M", "err", "ci_half"])?;
        for row in &table.rows {
            csv.row(&[
                row.n_steps.to_string(),
                row.n_paths.to_string(),
                fmt17(row.err),
                fmt17(row.ci_half),
            ])?;
        }
        if let Ok((slope, _, ci)) = &fit {
            csv.row_str(&["slope", &fmt17(*slope)])?;
            csv.row_str(&["slope_ci", &fmt17(*ci)])?;
        }
        csv.finish()
    };
    if let Err(e) = write() {
        return fail_io("rates.csv", &e);
    }
    match fit {
        Ok((slope, _, ci)) => {
            println!("slope {} +/- {}", fmt17(slope), fmt17(ci));
            EXIT_OK
        }
        Err(e) => fail("rate fit", &e),
    }
}

fn write_samples(path: &Path, set: &ErrorSampleSet) -> std::io::Result<()> {
    let header: Vec<String> = (1..=set.dim).map(|i| format!("x{i}")).collect();
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvFile::create(path, &header_refs)?;
    for i in 0..set.n_samples() {
        let row: Vec<String> = (0..set.dim)
            .map(|c| fmt17(set.samples[i * set.dim + c]))
            .collect();
        csv.row(&row)?;
    }
    csv.finish()
}

pub fn cmd_errordist(cfg: &ExperimentConfig) -> i32 {
    let model = match setup(cfg) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let exec = match RayonMap::new(cfg.threads) {
        Ok(e) => e,
        Err(e) => return fail("threads", &e),
    };
    // the largest requested step count drives the study
    let n = *cfg.n_list.iter().max().expect("non-empty N list");
    let ref_cfg = RefConfig {
        refinement: cfg.ref_refine,
    };
    let (empirical_kind, limit_is_u) = match cfg.kind {
        KindChoice::UN => (ErrorKind::UN, true),
        KindChoice::VN => (ErrorKind::VN, false),
    };
    let empirical =
        match normalized_error_samples(&model, n, cfg.m, cfg.seed, ref_cfg, empirical_kind, &exec) {
            Ok(s) => s,
            Err(e) => return fail("empirical samples", &e),
        };
    // limit SDE on the matching fine grid, disjoint seed batch
    let limit_n = n * cfg.ref_refine;
    let limit_seed = cfg.seed.wrapping_add(1);
    let limit = if limit_is_u {
        simulate_limit_sde_u(&model, cfg.m, limit_n, limit_seed, &exec)
    } else {
        simulate_limit_sde_v(&model, cfg.m, limit_n, limit_seed, &exec)
    };
    let limit = match limit {
        Ok(s) => s,
        Err(e) => return fail("limit samples", &e),
    };
    let report = match compare_distributions(&empirical, &limit, cfg.alpha) {
        Ok(r) => r,
        Err(e) => return fail("comparison", &e),
    };
    let write = || -> std::io::Result<()> {
        write_samples(&cfg.out.join("empirical.csv"), &empirical)?;
        write_samples(&cfg.out.join("limit.csv"), &limit)?;
        let mut csv = CsvFile::create(
            &cfg.out.join("comparison.csv"),
            &["coord", "mean_a", "mean_b", "var_a", "var_b", "ks", "p"],
        )?;
        for c in &report.coords {
            csv.row(&[
                c.coord.map_or("norm".to_string(), |i| (i + 1).to_string()),
                fmt17(c.mean_a),
                fmt17(c.mean_b),
                fmt17(c.var_a),
                fmt17(c.var_b),
                fmt17(c.ks),
                fmt17(c.p_value),
            ])?;
        }
        csv.row_str(&["pass", if report.pass { "true" } else { "false" }])?;
        csv.finish()
    };
    if let Err(e) = write() {
        return fail_io("errordist output", &e);
    }
    println!(
        "comparison {} at alpha = {}",
        if report.pass { "passes" } else { "FAILS" },
        cfg.alpha
    );
    EXIT_OK
}

pub fn cmd_check_commute(cfg: &ExperimentConfig) -> i32 {
    let model = match setup(cfg) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let points = sample_points(&model.x0, 64);
    let report = match check_commutativity(&model, &points, COMMUTE_BASE_TOL) {
        Ok(r) => r,
        Err(e) => return fail("check-commute", &e),
    };
    let write = || -> std::io::Result<()> {
        let mut csv = CsvFile::create(
            &cfg.out.join("commute.csv"),
            &["check", "commutes", "max_bracket"],
        )?;
        csv.row_str(&[
            "brownian",
            if report.brownian_commute { "true" } else { "false" },
            &fmt17(report.max_brownian_bracket),
        ])?;
        csv.row_str(&[
            "drift",
            if report.drift_commutes { "true" } else { "false" },
            &fmt17(report.max_drift_bracket),
        ])?;
        csv.finish()
    };
    if let Err(e) = write() {
        return fail_io("commute.csv", &e);
    }
    println!(
        "brownian commute: {}, drift commutes: {}",
        report.brownian_commute, report.drift_commutes
    );
    EXIT_OK
}

pub fn cmd_bracket_check(cfg: &ExperimentConfig) -> i32 {
    if let Err(e) = write_manifest(cfg, &cfg.out) {
        return fail_io("manifest.csv", &e);
    }
    let horizon = cfg.horizon.unwrap_or(1.0);
    let t_list = cfg.t_list.clone().unwrap_or_else(|| {
        vec![0.0, horizon / 3.0, horizon / 2.0, 2.0 * horizon / 3.0, horizon]
    });
    let write = || -> Result<(), i32> {
        let mut csv = CsvFile::create(
            &cfg.out.join("bracket.csv"),
            &["N", "t", "value", "limit", "gap"],
        )
        .map_err(|e| fail_io("bracket.csv", &e))?;
        for &n in &cfg.n_list {
            for &t in &t_list {
                let value = bracket_mn(t, n, horizon).map_err(|e| fail("bracket_mn", &e))?;
                let limit = t * horizon * horizon / 12.0;
                csv.row(&[
                    n.to_string(),
                    fmt17(t),
                    fmt17(value),
                    fmt17(limit),
                    fmt17(value - limit),
                ])
                .map_err(|e| fail_io("bracket.csv", &e))?;
            }
        }
        csv.finish().map_err(|e| fail_io("bracket.csv", &e))
    };
    match write() {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> i32 {
    use nvsde_core::grid::{BrownianPath, TimeGrid};
    let model = match setup(cfg) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let scheme = match Scheme::parse(&cfg.scheme) {
        Ok(s) => s,
        Err(e) => return fail("scheme", &e),
    };
    let n = cfg.n_list[0];
    let traj = (|| {
        let grid = TimeGrid::new(model.horizon, n)?;
        let path = BrownianPath::sample(cfg.seed, 0, model.brownian_dim, grid);
        scheme.simulate_path(&model, grid, &path, cfg.seed, 0)
    })();
    let traj = match traj {
        Ok(t) => t,
        Err(e) => return fail("simulate", &e),
    };
    let write = || -> std::io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=model.dim).map(|i| format!("x{i}")));
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = CsvFile::create(&cfg.out.join("trajectory.csv"), &header_refs)?;
        for k in 0..=n {
            let mut row = vec![fmt17(traj.grid().time(k))];
            row.extend(traj.state(k).iter().map(|v| fmt17(*v)));
            csv.row(&row)?;
        }
        csv.finish()
    };
    if let Err(e) = write() {
        return fail_io("trajectory.csv", &e);
    }
    EXIT_OK
}
