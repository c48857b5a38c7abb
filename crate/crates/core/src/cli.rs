//! Command-line front end: bound tables, field profiles, verification reports and CC polar data.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{bound_report, BoundReport};
use crate::group::{Point, StepTwoGroup};
use crate::norms::cc::{cc_dt, cc_hgrad, cc_invert, cc_value};
use crate::norms::{NormKind, NormModel};
use crate::verify::{
    check_ibp_identity, counterexample_control_scan, counterexample_scan, hardy_check, product_check,
    sharpness_sequence, Bump, QuadMethod, QuadratureSpec, Report, ScanOptions,
};
use crate::zfield::{g_cc, sup_z_norm_with, z_profile_koranyi, SupOptions, ZFieldSpec};

#[derive(Parser, Debug, Serialize)]
#[command(name = "carnot-hardy", version, about = "Hardy-constant bounds and checks on step-two Carnot groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Tabulate bounds over p and θ.
    Bounds(SpecArgs),
    /// Dump the one-parameter profile of |Z_d|² with its supremum.
    Supz(SpecArgs),
    /// Run a verification check.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        quad: QuadArgs,
        /// Decreasing cut-off levels for the sharpness sequence.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
        eps: Vec<f64>,
        /// Number of seeded random bump functions.
        #[arg(long)]
        bumps: Option<usize>,
        /// pθ for the counterexample scan.
        #[arg(long, default_value_t = 2.0)]
        p_theta: f64,
    },
    /// Polar data of the CC distance at a point of H¹.
    Cc {
        /// `z1,z2,t`
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        point: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Identity,
    Hardy,
    Sharpness,
    Counterexample,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSelector {
    Heisenberg,
    Nonisotropic,
    Product,
    General,
}

#[derive(Args, Debug, Serialize)]
pub struct SpecArgs {
    #[arg(long, value_enum, default_value_t = GroupSelector::Heisenberg)]
    pub group: GroupSelector,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Number of Heisenberg factors.
    #[arg(long = "N", default_value_t = 2)]
    pub factors: usize,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    /// JSON file `{"couplings": [[..]], "selected": [..]}` for a general group.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    #[arg(long, default_value = "koranyi")]
    pub norm: NormKind,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0])]
    pub p: Vec<f64>,
    /// Defaults to the grid {0, 0.5, 1, 2, Q/p} for tables and to 1 otherwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Quasi-random samples for sampled suprema and scans.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct QuadArgs {
    #[arg(long, value_enum)]
    pub quad_method: Option<QuadMethodArg>,
    /// Tensor nodes along the radial, angular and vertical axes.
    #[arg(long, value_delimiter = ',')]
    pub nodes: Vec<usize>,
    /// Monte Carlo samples.
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMethodArg {
    TensorGrid,
    MonteCarlo,
}

#[derive(Deserialize)]
struct GeneralGroupFile {
    couplings: Vec<Vec<f64>>,
    selected: Vec<usize>,
}

/// Rendered output and whether any verification report failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub output: String,
    pub failed: bool,
}

enum Rows {
    Bounds(Vec<BoundReport>),
    Profile { header: [&'static str; 2], rows: Vec<[f64; 2]>, summary: Value },
    Reports(Vec<Report>),
    Cc(Value),
}

impl SpecArgs {
    fn build_group(&self) -> anyhow::Result<StepTwoGroup> {
        Ok(match self.group {
            GroupSelector::Heisenberg => StepTwoGroup::heisenberg(self.n)?,
            GroupSelector::Nonisotropic => {
                if self.lambdas.is_empty() {
                    bail!("--group nonisotropic needs --lambdas");
                }
                StepTwoGroup::single(&self.lambdas)?
            }
            GroupSelector::Product => StepTwoGroup::heisenberg_product(self.n, self.factors)?,
            GroupSelector::General => {
                let path = self.spec_file.as_ref().context("--group general needs --spec-file")?;
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let file: GeneralGroupFile = serde_json::from_str(&text)?;
                StepTwoGroup::general(file.couplings, file.selected)?
            }
        })
    }

    fn norm_model(&self) -> anyhow::Result<NormModel> {
        Ok(NormModel::new(self.norm, self.build_group()?)?)
    }

    fn single_spec(&self) -> anyhow::Result<ZFieldSpec> {
        let p = *self.p.first().context("--p is empty")?;
        let theta = self.theta.first().copied().unwrap_or(1.0);
        Ok(ZFieldSpec::auto(self.norm_model()?, p, theta)?)
    }

    fn sup_options(&self, seed: u64) -> SupOptions {
        let mut opts = SupOptions { seed, ..SupOptions::default() };
        if let Some(s) = self.samples {
            opts.samples = s;
        }
        opts
    }
}

impl QuadArgs {
    fn spec(&self, seed: u64) -> anyhow::Result<QuadratureSpec> {
        let mut quad = QuadratureSpec { seed, ..QuadratureSpec::default() };
        if let Some(m) = self.quad_method {
            quad.method = match m {
                QuadMethodArg::TensorGrid => QuadMethod::TensorGrid,
                QuadMethodArg::MonteCarlo => QuadMethod::MonteCarlo,
            };
        }
        match self.nodes.len() {
            0 => {}
            3 => quad.nodes = [self.nodes[0], self.nodes[1], self.nodes[2]],
            k => bail!("--nodes takes three counts (radial, angular, vertical), got {k}"),
        }
        if let Some(s) = self.mc_samples {
            quad.samples = s;
        }
        Ok(quad)
    }
}

fn cmd_bounds(args: &SpecArgs, seed: u64) -> anyhow::Result<Rows> {
    let norm = args.norm_model()?;
    let q = norm.group().homogeneous_dimension();
    let opts = args.sup_options(seed);
    let mut out = Vec::new();
    for &p in &args.p {
        let thetas = if args.theta.is_empty() { vec![0.0, 0.5, 1.0, 2.0, q / p] } else { args.theta.clone() };
        for theta in thetas {
            if !theta.is_finite() {
                bail!("invalid θ {theta}");
            }
            let spec = ZFieldSpec::auto(norm.clone(), p, theta)?;
            out.push(bound_report(&spec, &opts).with_context(|| format!("p = {p}, θ = {theta}"))?);
        }
    }
    Ok(Rows::Bounds(out))
}

fn cmd_supz(args: &SpecArgs, seed: u64) -> anyhow::Result<Rows> {
    let spec = args.single_spec()?;
    let sup = sup_z_norm_with(&spec, &args.sup_options(seed))?;
    let (q, p, theta) = (spec.q(), spec.p, spec.theta);
    let nodes = 401;
    let (header, rows) = match spec.norm.kind() {
        NormKind::Cc => {
            let rows = (0..nodes)
                .map(|i| {
                    let nu = -TAU + 2.0 * TAU * i as f64 / (nodes - 1) as f64;
                    Ok([nu, g_cc(q, p, theta, nu)?])
                })
                .collect::<crate::Result<Vec<_>>>()?;
            (["nu", "g"], rows)
        }
        NormKind::Koranyi | NormKind::KoranyiB if spec.group().h() == 1 => {
            // λ = tan α on an open grid of α ∈ (−π/2, π/2)
            let rows = (1..nodes - 1)
                .map(|i| {
                    let lam = (-FRAC_PI_2 + std::f64::consts::PI * i as f64 / (nodes - 1) as f64).tan();
                    Ok([lam, z_profile_koranyi(q, p, theta, lam)?])
                })
                .collect::<crate::Result<Vec<_>>>()?;
            (["lambda", "z_squared"], rows)
        }
        _ => (["parameter", "value"], Vec::new()),
    };
    Ok(Rows::Profile { header, rows, summary: serde_json::to_value(&sup)? })
}

fn random_bumps(g: &StepTwoGroup, count: usize, seed: u64) -> Vec<Bump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Bump::random(g, &mut rng)).collect()
}

fn cmd_verify(
    check: Check,
    args: &SpecArgs,
    quad: &QuadArgs,
    eps: &[f64],
    bumps: Option<usize>,
    p_theta: f64,
    seed: u64,
) -> anyhow::Result<Rows> {
    let quad_spec = quad.spec(seed)?;
    let scan = ScanOptions { samples: args.samples.unwrap_or(100_000), seed, ..ScanOptions::default() };
    let reports = match check {
        Check::Identity | Check::Hardy => {
            let spec = args.single_spec()?;
            let count = bumps.unwrap_or(if check == Check::Identity { 5 } else { 20 });
            let mut out = Vec::new();
            for u in random_bumps(spec.group(), count, seed) {
                let q = quad_spec.clone().with_breaks(match quad_spec.method {
                    QuadMethod::TensorGrid => u.breaks(),
                    QuadMethod::MonteCarlo => vec![u.breaks()[0], u.support_radius()],
                });
                out.push(if check == Check::Identity {
                    check_ibp_identity(&spec, &u, &q)?
                } else {
                    hardy_check(&spec, &u, &q)?
                });
            }
            out
        }
        Check::Sharpness => vec![sharpness_sequence(&args.single_spec()?, eps, &quad_spec)?.report],
        Check::Counterexample => vec![counterexample_scan(p_theta, &scan)?, counterexample_control_scan(p_theta, &scan)?],
        Check::Product => {
            let p = *args.p.first().context("--p is empty")?;
            let theta = args.theta.first().copied().unwrap_or(1.0);
            let mc = QuadratureSpec { method: QuadMethod::MonteCarlo, ..quad_spec };
            vec![product_check(args.n, args.factors, p, theta, &scan, Some(&mc))?]
        }
    };
    Ok(Rows::Reports(reports))
}

fn cmd_cc(point: &[f64]) -> anyhow::Result<Rows> {
    let [z1, z2, t] = point else { bail!("--point takes z1,z2,t") };
    let x = Point::single(&[*z1, *z2], *t);
    if x.is_origin() {
        bail!("the CC polar data is undefined at the origin");
    }
    let polar = cc_invert(&x)?;
    let grad = cc_hgrad(&x).ok();
    Ok(Rows::Cc(json!({
        "point": point,
        "delta_cc": cc_value(&x)?,
        "nu": polar.nu,
        "r": polar.r,
        "a": polar.a,
        "b": polar.b,
        "hgrad_norm": grad.map(|g| g.norm()),
        "dt": cc_dt(&x).ok(),
    })))
}

fn render_json(cli: &Cli, results: Value) -> anyhow::Result<String> {
    let doc = json!({
        "meta": { "version": env!("CARGO_PKG_VERSION"), "seed": cli.seed, "config": cli },
        "results": results,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn csv_string(header: Vec<String>, rows: Vec<Vec<String>>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn render_csv(rows: &Rows) -> anyhow::Result<String> {
    match rows {
        Rows::Bounds(list) => {
            let header = ["group", "norm", "p", "theta", "q", "branch", "sup_z", "sup_method", "bound", "generic_bound", "conditions"];
            let body = list
                .iter()
                .map(|r| {
                    Ok(vec![
                        r.group.clone(),
                        r.norm.to_string(),
                        r.p.to_string(),
                        r.theta.to_string(),
                        r.q.to_string(),
                        serde_json::to_value(r.branch)?.as_str().unwrap_or_default().to_owned(),
                        r.sup_z.sup_value.to_string(),
                        serde_json::to_value(r.sup_z.method)?.as_str().unwrap_or_default().to_owned(),
                        r.bound.to_string(),
                        r.generic_bound.to_string(),
                        serde_json::to_string(&r.condition_checks)?,
                    ])
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            csv_string(header.iter().map(|s| s.to_string()).collect(), body)
        }
        Rows::Profile { header, rows, .. } => csv_string(
            header.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|r| vec![r[0].to_string(), r[1].to_string()]).collect(),
        ),
        Rows::Reports(list) => {
            let keys: BTreeSet<&String> = list.iter().flat_map(|r| r.values.keys()).collect();
            let mut header = vec!["check".to_string(), "passed".into(), "tolerance".into(), "bound".into()];
            header.extend(keys.iter().map(|k| k.to_string()));
            header.push("diagnostics".into());
            let body = list
                .iter()
                .map(|r| {
                    let mut row = vec![r.check.clone(), r.passed.to_string(), r.tolerance.to_string(), opt_num(r.bound)];
                    row.extend(keys.iter().map(|k| opt_num(r.values.get(*k).copied())));
                    row.push(serde_json::to_string(&r.diagnostics)?);
                    Ok(row)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            csv_string(header, body)
        }
        Rows::Cc(v) => {
            let keys = ["delta_cc", "nu", "r", "a", "b", "hgrad_norm", "dt"];
            let row = keys.iter().map(|k| match &v[*k] {
                Value::Null => String::new(),
                other => other.to_string(),
            });
            csv_string(keys.iter().map(|s| s.to_string()).collect(), vec![row.collect()])
        }
    }
}

/// Runs one command and renders its output without touching the filesystem for output.
pub fn execute(cli: &Cli) -> anyhow::Result<Execution> {
    let rows = match &cli.command {
        Command::Bounds(args) => cmd_bounds(args, cli.seed)?,
        Command::Supz(args) => cmd_supz(args, cli.seed)?,
        Command::Verify { check, spec, quad, eps, bumps, p_theta } => {
            cmd_verify(*check, spec, quad, eps, *bumps, *p_theta, cli.seed)?
        }
        Command::Cc { point } => cmd_cc(point)?,
    };
    let failed = matches!(&rows, Rows::Reports(list) if list.iter().any(|r| !r.passed));
    let output = match cli.format {
        Format::Csv => render_csv(&rows)?,
        Format::Json => {
            let results = match &rows {
                Rows::Bounds(list) => serde_json::to_value(list)?,
                Rows::Profile { header, rows, summary } => json!([{
                    "sup": summary,
                    "columns": header,
                    "profile": rows,
                }]),
                Rows::Reports(list) => serde_json::to_value(list)?,
                Rows::Cc(v) => json!([v]),
            };
            render_json(cli, results)?
        }
    };
    Ok(Execution { output, failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Execution {
        let mut argv = vec!["carnot-hardy"];
        argv.extend_from_slice(args);
        execute(&Cli::try_parse_from(argv).unwrap()).unwrap()
    }

    fn json(args: &[&str]) -> Value {
        serde_json::from_str(&run(args).output).unwrap()
    }

    #[test]
    fn bound_table_examples() {
        let v = json(&["bounds", "--n", "1", "--norm", "koranyi", "--p", "2", "--theta", "1"]);
        assert_eq!(v["results"][0]["bound"], 0.25);
        let v = json(&["bounds", "--norm", "cc", "--theta", "1"]);
        assert!((v["results"][0]["bound"].as_f64().unwrap() - 0.25).abs() < 1e-12);
        let v = json(&["bounds", "--group", "nonisotropic", "--lambdas", "1,2", "--norm", "koranyi_b", "--theta", "1"]);
        assert!((v["results"][0]["bound"].as_f64().unwrap() - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn default_theta_grid() {
        let v = json(&["bounds"]);
        let thetas: Vec<f64> = v["results"].as_array().unwrap().iter().map(|r| r["theta"].as_f64().unwrap()).collect();
        assert_eq!(thetas, vec![0.0, 0.5, 1.0, 2.0, 2.0]);
        assert_eq!(v["meta"]["seed"], 0);
    }

    #[test]
    fn supz_examples() {
        let v = json(&["supz", "--norm", "cc", "--theta", "1"]);
        assert!(v["results"][0]["sup"]["arg"]["nu"].as_f64().unwrap().abs() < 1e-3);
        assert!((v["results"][0]["sup"]["sup_squared"].as_f64().unwrap() - 4.0).abs() < 1e-7);
        let v = json(&["supz", "--theta", "6"]);
        assert!((v["results"][0]["sup"]["arg"]["s"].as_f64().unwrap() - 5.0 / 9.0).abs() < 1e-6);
        let csv = run(&["supz", "--theta", "0", "--format", "csv"]).output;
        let values: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(csv.lines().next(), Some("lambda,z_squared"));
        // with β = 0 the profile decreases in |λ| from (Q/(Q−2))² = 4
        let peak = values.iter().map(|v| v.1).fold(0.0, f64::max);
        assert!(peak <= 4.0 && peak > 3.99);
        for w in values.windows(2).filter(|w| w[0].0 >= 0.0) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn cc_examples() {
        let v = json(&["cc", "--point", "1,0,0"]);
        assert!((v["results"][0]["delta_cc"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(v["results"][0]["nu"], 0.0);
        let v = json(&["cc", "--point", "0,0,1"]);
        assert!((v["results"][0]["delta_cc"].as_f64().unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let v = json(&["cc", "--point", "1,0,1.5707963267948966"]);
        assert!((v["results"][0]["delta_cc"].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-9);
        assert!((v["results"][0]["nu"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
        let cli = Cli::try_parse_from(["carnot-hardy", "cc", "--point", "0,0,0"]).unwrap();
        assert!(execute(&cli).is_err());
    }

    #[test]
    fn verify_identity_passes_and_is_deterministic() {
        let args = ["verify", "identity", "--group", "heisenberg", "--n", "1", "--norm", "koranyi", "--p", "2", "--theta", "1", "--bumps", "2"];
        let first = run(&args);
        assert!(!first.failed);
        assert_eq!(first.output, run(&args).output);
        let csv = run(&[&args[..], &["--format", "csv"]].concat()).output;
        assert!(csv.starts_with("check,passed,tolerance,bound,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn failing_report_sets_exit_flag() {
        // too few quadrature nodes to meet the tolerance
        let e = run(&["verify", "identity", "--theta", "0", "--bumps", "1", "--nodes", "4,4,4"]);
        assert!(e.failed);
    }

    #[test]
    fn general_group_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("group.json");
        fs::write(&path, r#"{"couplings": [[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]], "selected": [0, 1]}"#).unwrap();
        let path = path.to_str().unwrap();
        let v = json(&["bounds", "--group", "general", "--spec-file", path, "--theta", "1"]);
        let row = &v["results"][0];
        assert_eq!(row["q"], 10.0);
        assert!(row["bound"].as_f64().unwrap() >= 0.0);
        fs::write(dir.path().join("bad.json"), r#"{"couplings": [[1.0, 1.0], [2.0, 2.0]], "selected": [0, 1]}"#).unwrap();
        let bad = dir.path().join("bad.json");
        let cli = Cli::try_parse_from(["carnot-hardy", "bounds", "--group", "general", "--spec-file", bad.to_str().unwrap()]).unwrap();
        assert!(execute(&cli).is_err());
    }

    #[test]
    fn invalid_selectors_are_rejected() {
        let cli = Cli::try_parse_from(["carnot-hardy", "bounds", "--group", "nonisotropic"]).unwrap();
        assert!(execute(&cli).is_err());
        assert!(Cli::try_parse_from(["carnot-hardy", "bounds", "--norm", "euclid"]).is_err());
    }
}
