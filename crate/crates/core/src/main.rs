//! Command-line front end: construct / evaluate / certify / search /
//! simulate / blocks, with line-oriented JSON design records.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fmridesign::blocks::{block_trace_inverse, min_block_trace, TraceFormula};
use fmridesign::certify::{certify_contrast, certify_estimation, n0_cubic, CoveredFamily};
use fmridesign::criteria::{
    eigenvalues, type1_inverse, type1_neg_log, Criterion,
};
use fmridesign::design::{
    contrast_info, scaled_info_signed, ternary_from_binary, LiftVariant,
};
use fmridesign::record::{Alphabet, CertificateSummary, DesignRecord};
use fmridesign::search::{exhaustive_best, Space, DEFAULT_EVAL_CAP};
use fmridesign::sequence::{
    default_taps, insert_zeros, m_sequence, paley_hadamard_sequence, BinaryDesign,
};
use fmridesign::simulate::{
    monte_carlo_cov, GroundTruth, NoiseSpec, SimDesign,
};
use fmridesign::Error;

const CAP_ENV: &str = "FMRIDESIGN_EVAL_CAP";

#[derive(Parser)]
#[command(
    name = "fmridesign",
    about = "Construct, evaluate, certify and brute-force-verify circulant \
             weighing designs for fMRI experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a design sequence and emit its JSON record.
    Construct(ConstructArgs),
    /// Criterion values, spectrum and exact scaled information matrix.
    Evaluate(EvaluateArgs),
    /// Which optimality result applies to a stored design.
    Certify(CertifyArgs),
    /// Exhaustive search over a small design space.
    Search(SearchArgs),
    /// Monte-Carlo check of the estimator covariance against theory.
    Simulate(SimulateArgs),
    /// Closed-form block traces and the minimum over partitions.
    Blocks(BlocksArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Paley,
    Mseq,
    Insert1,
    Insert2,
    ContrastLift,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaseMethod {
    Paley,
    Mseq,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Lift {
    JPlusD,
    TwoJMinusD,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(value_enum)]
    method: Method,
    /// Sequence length of the base construction.
    #[arg(long)]
    n: Option<usize>,
    /// LFSR register length (mseq); inferred from --n when omitted.
    #[arg(long)]
    degree: Option<u32>,
    /// LFSR feedback tap mask (mseq); a known primitive default per degree.
    #[arg(long)]
    taps: Option<u64>,
    /// LFSR initial state (mseq).
    #[arg(long, default_value_t = 1)]
    state: u64,
    /// Base construction for insert1/insert2/contrast-lift.
    #[arg(long, value_enum, default_value_t = BaseMethod::Paley)]
    from: BaseMethod,
    /// Lifting used by contrast-lift.
    #[arg(long, value_enum, default_value_t = Lift::JPlusD)]
    variant: Lift,
    /// Rotate the output to its lexicographically smallest form.
    #[arg(long)]
    canonical: bool,
    /// Write the record here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Design record file (first record is used).
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    k: usize,
    /// Criterion names: phi0, phi1, phi2, phiinf, type1-inverse, type1-neglog.
    #[arg(long = "criterion")]
    criteria: Vec<String>,
    /// Additional Phi_p exponents.
    #[arg(long = "p")]
    ps: Vec<f64>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    k: usize,
    /// Largest Phi_p exponent the certificate should speak to.
    #[arg(long, default_value_t = 1.0)]
    p_cap: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Binary,
    Signed,
    Ternary,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum)]
    space: SpaceArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Criterion name (same names as evaluate).
    #[arg(long, default_value = "phi1")]
    criterion: String,
    /// Evaluation budget; also settable via FMRIDESIGN_EVAL_CAP.
    #[arg(long)]
    cap: Option<u64>,
    /// Enumerate only canonical orbit representatives.
    #[arg(long)]
    canonical: bool,
    /// Worker cap (enumeration currently runs on one thread).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    Iid,
    Compound,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 10_000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Iid)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Worker cap (replicates currently run on one thread).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct BlocksArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
}

fn parse_criterion(name: &str) -> Result<Criterion, Error> {
    match name {
        "phi0" => Ok(Criterion::PhiP(0.0)),
        "phi1" => Ok(Criterion::PhiP(1.0)),
        "phi2" => Ok(Criterion::PhiP(2.0)),
        "phiinf" => Ok(Criterion::PhiP(f64::INFINITY)),
        "type1-inverse" => Ok(Criterion::Type1(type1_inverse)),
        "type1-neglog" => Ok(Criterion::Type1(type1_neg_log)),
        other => Err(Error::InvalidRecord(format!(
            "unknown criterion '{other}' (expected phi0, phi1, phi2, phiinf, \
             type1-inverse or type1-neglog)"
        ))),
    }
}

/// Singular values serialize as the string "inf" for stable diffs.
fn value_json(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

fn build_base(args: &ConstructArgs) -> Result<BinaryDesign, Error> {
    match args.from {
        BaseMethod::Paley => {
            let n = args.n.ok_or_else(|| {
                Error::InvalidRecord("--n is required for the paley construction".into())
            })?;
            paley_hadamard_sequence(n)
        }
        BaseMethod::Mseq => {
            let degree = match (args.degree, args.n) {
                (Some(r), _) => r,
                (None, Some(n)) => {
                    let r = (n + 1).trailing_zeros();
                    if n + 1 != 1usize << r {
                        return Err(Error::InvalidRecord(format!(
                            "N = {n} is not 2^r - 1; give --degree explicitly"
                        )));
                    }
                    r
                }
                (None, None) => {
                    return Err(Error::InvalidRecord(
                        "mseq needs --degree or --n".into(),
                    ))
                }
            };
            let taps = match args.taps {
                Some(t) => t,
                None => default_taps(degree).ok_or_else(|| {
                    Error::InvalidRecord(format!(
                        "no default feedback taps for degree {degree}; give --taps"
                    ))
                })?,
            };
            m_sequence(degree, taps, args.state)
        }
    }
}

fn cmd_construct(args: ConstructArgs) -> Result<(), Error> {
    let record = match args.method {
        Method::Paley | Method::Mseq => {
            let inner = ConstructArgs {
                from: if args.method == Method::Paley {
                    BaseMethod::Paley
                } else {
                    BaseMethod::Mseq
                },
                ..args_clone_for_base(&args)
            };
            let mut d = build_base(&inner)?;
            if args.canonical {
                d = d.canonical_rotation();
            }
            DesignRecord::from_binary(&d)
        }
        Method::Insert1 | Method::Insert2 => {
            let count = if args.method == Method::Insert1 { 1 } else { 2 };
            let base = build_base(&args)?;
            let mut d = insert_zeros(&base, count)?;
            if args.canonical {
                d = d.canonical_rotation();
            }
            DesignRecord::from_binary(&d)
        }
        Method::ContrastLift => {
            let base = build_base(&args)?;
            let variant = match args.variant {
                Lift::JPlusD => LiftVariant::JPlusD,
                Lift::TwoJMinusD => LiftVariant::TwoJMinusD,
            };
            let u = ternary_from_binary(&base, variant);
            DesignRecord::from_ternary(&u, base.provenance().clone())
        }
    };
    let line = record.to_json_line()?;
    match &args.out {
        Some(path) => std::fs::write(path, format!("{line}\n"))?,
        None => println!("{line}"),
    }
    Ok(())
}

// clap's Args aren't Clone here; copy the base-relevant fields by hand
fn args_clone_for_base(args: &ConstructArgs) -> ConstructArgs {
    ConstructArgs {
        method: args.method,
        n: args.n,
        degree: args.degree,
        taps: args.taps,
        state: args.state,
        from: args.from,
        variant: args.variant,
        canonical: false,
        out: None,
    }
}

fn load_record(path: &PathBuf) -> Result<DesignRecord, Error> {
    let records = fmridesign::record::read_records(path)?;
    records
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidRecord("design file holds no records".into()))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let record = load_record(&args.design)?;
    let mut names: Vec<String> = if args.criteria.is_empty() && args.ps.is_empty() {
        vec!["phi0".into(), "phi1".into()]
    } else {
        args.criteria.clone()
    };
    names.sort();
    names.dedup();

    let (m, scaled) = match record.alphabet {
        Alphabet::Binary => {
            let d = record.to_binary()?;
            let s = scaled_info_signed(&d, args.k)?;
            let entries: Vec<Vec<i64>> = (0..s.k)
                .map(|i| (0..s.k).map(|j| s.get_scaled(i, j)).collect())
                .collect();
            (
                s.to_f64(),
                Some(json!({ "divisor": s.divisor, "entries": entries })),
            )
        }
        Alphabet::Ternary => {
            let u = record.to_ternary()?;
            (contrast_info(&u, args.k)?, None)
        }
    };

    let mut criteria = Vec::new();
    for name in &names {
        let c = parse_criterion(name)?;
        criteria.push(json!({ "name": name, "value": value_json(c.evaluate(&m)?) }));
    }
    for &p in &args.ps {
        let c = Criterion::PhiP(p);
        criteria.push(json!({ "name": format!("phi_p(p={p})"), "value": value_json(c.evaluate(&m)?) }));
    }
    let spectrum = eigenvalues(&m)?;
    let report = json!({
        "schema": 1,
        "n": record.n,
        "k": args.k,
        "alphabet": record.alphabet,
        "criteria": criteria,
        "spectrum": spectrum.0,
        "scaled_info": scaled,
        "note": "phi1 reports tr{inverse}/K (the 1/K convention)",
    });
    println!("{report}");
    Ok(())
}

fn family_summary(cert: &fmridesign::certify::Certificate) -> String {
    match &cert.family {
        CoveredFamily::PhiPRange { lo, hi } => {
            let n0 = cert
                .bound
                .map(|b| format!("; N0={:.2}", b.n0))
                .unwrap_or_default();
            format!("Phi_p-optimal, p in [{lo}, {hi}]{n0}")
        }
        CoveredFamily::Universal => "universally optimal".into(),
        CoveredFamily::Type1All => "optimal for every type 1 criterion".into(),
        CoveredFamily::None => "no optimality family certified".into(),
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<(), Error> {
    let record = load_record(&args.design)?;
    let cert = match record.alphabet {
        Alphabet::Binary => certify_estimation(&record.to_binary()?, args.k, args.p_cap)?,
        Alphabet::Ternary => certify_contrast(&record.to_ternary()?, args.k, args.p_cap)?,
    };
    let mut report = serde_json::to_value(&cert)?;
    report["schema"] = json!(1);
    report["summary"] = json!(family_summary(&cert));
    report["record_certificate"] =
        serde_json::to_value(CertificateSummary::from_certificate(&cert))?;
    println!("{report}");
    Ok(())
}

fn cmd_search(args: SearchArgs) -> Result<(), Error> {
    if args.threads < 1 {
        return Err(Error::InvalidRecord("--threads must be at least 1".into()));
    }
    let space = match args.space {
        SpaceArg::Binary => Space::Binary,
        SpaceArg::Signed => Space::Signed,
        SpaceArg::Ternary => Space::TernaryTwoStim,
    };
    let cap = args.cap.or_else(|| {
        std::env::var(CAP_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let criterion = parse_criterion(&args.criterion)?;
    let report = exhaustive_best(space, args.n, args.k, &criterion, args.canonical, cap)?;
    let out = json!({
        "schema": 1,
        "space": format!("{:?}", report.space),
        "n": report.n,
        "k": report.k,
        "criterion": args.criterion,
        "best_value": value_json(report.best_value),
        "argmins": report.argmins,
        "evaluated": report.evaluated,
        "wall_time_ms": report.wall_time.as_millis() as u64,
        "cap": cap.unwrap_or(DEFAULT_EVAL_CAP),
    });
    println!("{out}");
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    if args.threads < 1 {
        return Err(Error::InvalidRecord("--threads must be at least 1".into()));
    }
    let record = load_record(&args.design)?;
    let k = args.k;
    let (design, truth, theory) = match record.alphabet {
        Alphabet::Binary => {
            let d = record.to_binary()?;
            // binary-design information is a quarter of the signed form
            let theory = scaled_info_signed(&d, k)?.to_f64().map(|v| v / 4.0);
            (
                SimDesign::Single(d),
                GroundTruth::Hrf {
                    gamma: 0.0,
                    h: vec![1.0; k],
                },
                theory,
            )
        }
        Alphabet::Ternary => {
            let u = record.to_ternary()?;
            let theory = contrast_info(&u, k)?;
            (
                SimDesign::TwoStim(u),
                GroundTruth::TwoStim {
                    gamma: 0.0,
                    h1: vec![1.0; k],
                    h2: vec![0.5; k],
                },
                theory,
            )
        }
    };
    let noise = match args.noise {
        NoiseArg::Iid => NoiseSpec::Iid { sigma2: args.sigma2 },
        NoiseArg::Compound => NoiseSpec::default_compound(record.n),
    };
    let summary = monte_carlo_cov(&design, &truth, &noise, args.replicates, args.seed)?;
    let theory_cov = theory
        .try_inverse()
        .map(|inv| inv * args.sigma2)
        .ok_or(Error::SingularFit { rank: 0, expected: k })?;
    let mut max_rel = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let t = theory_cov[(i, j)];
            let e = summary.covariance[(i, j)];
            if t.abs() > 1e-12 {
                max_rel = max_rel.max((e - t).abs() / t.abs());
            }
        }
    }
    let to_rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    };
    let out = json!({
        "schema": 1,
        "n": record.n,
        "k": k,
        "replicates": summary.replicates,
        "seed": args.seed,
        "empirical_cov": to_rows(&summary.covariance),
        "theory_cov": to_rows(&theory_cov),
        "max_relative_error": max_rel,
        "mean_estimate": summary.mean.iter().copied().collect::<Vec<f64>>(),
    });
    println!("{out}");
    Ok(())
}

fn cmd_blocks(args: BlocksArgs) -> Result<(), Error> {
    let ranking = min_block_trace(args.n, args.k)?;
    let rows: Vec<serde_json::Value> = ranking
        .ranking
        .iter()
        .map(|(p, v)| {
            let both = block_trace_inverse(args.n, p, TraceFormula::Second)
                .map(value_json)
                .unwrap_or(json!("inf"));
            json!({
                "sizes": p.sizes,
                "trace_inverse": value_json(*v),
                "trace_inverse_second_form": both,
            })
        })
        .collect();
    let n0 = if args.k >= 4 {
        Some(n0_cubic(args.k)?)
    } else {
        None
    };
    let out = json!({
        "schema": 1,
        "n": args.n,
        "k": args.k,
        "minimizer": ranking.best.sizes,
        "minimum": value_json(ranking.best_value),
        "bound_met": ranking.bound_met,
        "n0": n0,
        "ranking": rows,
    });
    println!("{out}");
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CapExceeded { .. } => 3,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Construct(args) => cmd_construct(args),
        Cmd::Evaluate(args) => cmd_evaluate(args),
        Cmd::Certify(args) => cmd_certify(args),
        Cmd::Search(args) => cmd_search(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Blocks(args) => cmd_blocks(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
