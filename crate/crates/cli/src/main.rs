use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use permloglin::classic::{classic_distribution, sample, ClassicSpec};
use permloglin::counts::{parse_counts, write_counts_string};
use permloglin::decompose::{decomposability_report, inverse_distribution, DEFAULT_TOL};
use permloglin::fit::{
    alternating_fit, empirical, fit_counts, gof_report, ipfp_fit, search_relabelling, EmpiricalData, FitOptions,
    FitReport, Side,
};
use permloglin::perm::{enumerate_permutations, DistributionTable};
use permloglin::subspaces::{dimension_report, mu_vectors, Family, GeneratorFamily};

#[derive(Parser)]
#[command(name = "permloglin", version, about = "Log-linear models of random permutations")]
struct Cli {
    /// Emit JSON instead of a text table.
    #[arg(long, global = true)]
    json: bool,

    /// Write the report to this file (atomically) instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-parameter counts from the closed forms and the rank oracle.
    Dims {
        /// Family name, or "all".
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long)]
        n: usize,
    },
    /// Decomposability verdicts for a counts file or a model spec.
    Check {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Fit one family to a counts file.
    Fit {
        /// Expected number of items; checked against the counts header.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        family: Family,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        as_inverse: bool,
        #[command(flatten)]
        fit: FitArgs,
        /// auto (explicit estimate for L and L', IPFP otherwise), ipfp, or
        /// alternating (BI only).
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Likelihood and chi-square table over all families.
    Gof {
        /// Expected number of items; checked against the counts header.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        as_inverse: bool,
        #[command(flatten)]
        fit: FitArgs,
        /// Report each family at its best relabelling (both sides).
        #[arg(long)]
        search: bool,
    },
    /// Draw a sample from a model spec and write it as a counts file.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive search for the best-fitting relabelling.
    SearchLabels {
        /// Expected number of items; checked against the counts header.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        family: Family,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        as_inverse: bool,
        #[arg(long, default_value = "both")]
        side: Side,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Basis vectors of one (k, l) cross-section and their orthogonality audit.
    Bases {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
}

#[derive(Args)]
struct Input {
    /// Counts file (header n=<int>, then "<images>,<count>" lines).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    data: Option<PathBuf>,
    /// Model spec JSON: {kind, n, params}.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Read permutations as inverses (rankings vs orderings).
    #[arg(long)]
    as_inverse: bool,
    /// Expected number of items; checked against the input.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Marginal total-variation tolerance for IPFP.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_cycles: usize,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            max_cycles: self.max_cycles,
            marginal_tol: self.tol,
            ..FitOptions::default()
        }
    }
}

/// Errors the caller can fix; everything else exits with 2.
#[derive(Debug)]
struct Validation(String);

impl std::fmt::Display for Validation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

fn lib<T>(r: permloglin::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| {
        if e.is_validation() {
            anyhow::Error::new(Validation(e.to_string()))
        } else {
            anyhow::Error::new(e)
        }
    })
}

fn check_n(expected: Option<usize>, found: usize) -> anyhow::Result<()> {
    match expected {
        Some(n) if n != found => bail!(Validation(format!("--n {n} does not match the input (n = {found})"))),
        _ => Ok(()),
    }
}

fn load_counts(path: &Path, as_inverse: bool, n: Option<usize>) -> anyhow::Result<EmpiricalData> {
    let data = match parse_counts(path) {
        Err(permloglin::Error::Io(e)) => {
            return Err(anyhow::Error::new(Validation(format!("{}: {e}", path.display()))))
        }
        other => lib(other)?,
    };
    check_n(n, data.n())?;
    Ok(if as_inverse { data.inverse() } else { data })
}

fn load_spec(path: &Path) -> anyhow::Result<ClassicSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Validation(format!("{}: {e}", path.display())).into())
}

fn load_table(input: &Input) -> anyhow::Result<DistributionTable> {
    let table = match (&input.data, &input.spec) {
        (Some(d), _) => lib(empirical(&load_counts(d, false, input.n)?))?,
        (None, Some(s)) => {
            let spec = load_spec(s)?;
            check_n(input.n, spec.n())?;
            lib(classic_distribution(&spec))?
        }
        (None, None) => bail!(Validation("either --data or --spec is required".into())),
    };
    Ok(if input.as_inverse { inverse_distribution(&table) } else { table })
}

/// Writes through a temporary file in the target directory, then renames.
fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.2}"))
}

fn fit_line(r: &FitReport) -> String {
    format!(
        "{:<18} {:>14.3} {:>12.3} {:>5} {:>8} {:>7} {:>9}",
        r.family.name(),
        r.log_likelihood,
        r.gof_chi_square,
        r.df,
        fmt_opt(r.u_statistic),
        r.cycles_used,
        r.converged
    )
}

const FIT_HEADER: &str = "family                  log-lik          GOF    df        U  cycles converged";

fn fit_text(r: &FitReport) -> String {
    let mut s = format!("{FIT_HEADER}\n{}\n", fit_line(r));
    s += &format!("max marginal gap: {:.3e}\n", r.max_marginal_gap);
    if let Some(rl) = &r.relabelling {
        s += &format!("relabelling: sigma = ({}), rho = ({})\n", rl.sigma, rl.rho);
    }
    for w in &r.warnings {
        s += &format!("warning: {w}\n");
    }
    s
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let json_out = cli.json;
    match cli.command {
        Command::Dims { family, n } => {
            let kinds: Vec<Family> = if family.eq_ignore_ascii_case("all") {
                Family::ALL.to_vec()
            } else {
                vec![lib(family.parse())?]
            };
            let reports = kinds
                .iter()
                .map(|&k| lib(dimension_report(&GeneratorFamily::new(k, n))))
                .collect::<anyhow::Result<Vec<_>>>()?;
            if json_out {
                return if reports.len() == 1 { to_json(&reports[0]) } else { to_json(&reports) };
            }
            let mut s = format!("{:<18} {:>8} {:>8} {:>10}\n", "family", "formula", "rank", "free");
            for r in &reports {
                let formula = r.formula_dim.map_or("-".into(), |d| d.to_string());
                s += &format!("{:<18} {:>8} {:>8} {:>10}\n", r.family.name(), formula, r.rank_dim, r.free_parameters);
            }
            Ok(s)
        }
        Command::Check { input, tol } => {
            let p = load_table(&input)?;
            let report = lib(decomposability_report(&p, tol))?;
            if json_out {
                return to_json(&report);
            }
            let mut s = format!("{:<10} {:>8} {:>14}\n", "family", "verdict", "max violation");
            for (f, v) in &report.families {
                s += &format!("{:<10} {:>8} {:>14.3e}\n", f.name(), v.verdict, v.max_violation);
            }
            s += &format!("tolerance {tol:e}\n");
            Ok(s)
        }
        Command::Fit { n, family, data, as_inverse, fit, method } => {
            let data = load_counts(&data, as_inverse, n)?;
            let fam = GeneratorFamily::new(family, data.n());
            let opts = fit.options();
            let report = match method.as_str() {
                "auto" => lib(fit_counts(&fam, &data, &opts))?,
                "ipfp" | "alternating" => {
                    let r = lib(empirical(&data))?;
                    let raw = if method == "ipfp" {
                        lib(ipfp_fit(&fam, &r, &opts))?
                    } else {
                        if family != Family::Bi {
                            bail!(Validation("alternating fits are defined for BI only".into()));
                        }
                        lib(alternating_fit(&r, &opts))?
                    };
                    let mut rep = lib(gof_report(&raw.fitted, &data, &fam))?;
                    rep.cycles_used = raw.cycles_used;
                    rep.converged = raw.converged;
                    rep.max_marginal_gap = raw.max_marginal_gap;
                    rep.warnings.extend(raw.warnings);
                    rep
                }
                other => bail!(Validation(format!("unknown method '{other}'"))),
            };
            if json_out {
                to_json(&report)
            } else {
                Ok(fit_text(&report))
            }
        }
        Command::Gof { n, data, as_inverse, fit, search } => {
            let data = load_counts(&data, as_inverse, n)?;
            let n = data.n();
            let opts = fit.options();
            let mut rows = Vec::new();
            for kind in [
                Family::Saturated,
                Family::L,
                Family::LPrime,
                Family::LS,
                Family::LSPrime,
                Family::Bi,
                Family::BiS,
                Family::Uniform,
            ] {
                let fam = GeneratorFamily::new(kind, n);
                let rep = if search {
                    lib(search_relabelling(&data, &fam, Side::Both, &opts))?.best
                } else {
                    lib(fit_counts(&fam, &data, &opts))?
                };
                rows.push(rep);
            }
            if json_out {
                return to_json(&json!({ "n": n, "m": data.total(), "rows": rows }));
            }
            let mut s = format!("n = {n}, m = {}\n{FIT_HEADER}\n", data.total());
            for r in &rows {
                s += &fit_line(r);
                s.push('\n');
            }
            Ok(s)
        }
        Command::Sample { spec, m, seed } => {
            let p = lib(classic_distribution(&load_spec(&spec)?))?;
            let data = lib(sample(&p, m, seed))?;
            if json_out {
                let counts: Vec<_> = data.observed().map(|(pi, c)| json!({ "perm": pi, "count": c })).collect();
                return to_json(&json!({ "n": data.n(), "m": data.total(), "counts": counts }));
            }
            Ok(write_counts_string(&data))
        }
        Command::SearchLabels { n, family, data, as_inverse, side, fit } => {
            let data = load_counts(&data, as_inverse, n)?;
            let res = lib(search_relabelling(&data, &GeneratorFamily::new(family, data.n()), side, &fit.options()))?;
            if json_out {
                return to_json(&res.best);
            }
            Ok(format!("{}candidates evaluated: {}\n", fit_text(&res.best), res.candidates_evaluated))
        }
        Command::Bases { n, k, l } => {
            let vectors = lib(mu_vectors(k, l, n))?;
            let perms = lib(enumerate_permutations(n))?;
            let pairwise = vectors
                .iter()
                .enumerate()
                .all(|(i, a)| vectors[i + 1..].iter().all(|b| a.dot(&b.coords) == 0));
            let thin = |size: usize, inverse: bool| {
                (0u32..(1 << n)).filter(move |m| m.count_ones() as usize == size).map(move |mask| {
                    perms
                        .iter()
                        .map(|p| {
                            let q = if inverse { p.inverse() } else { p.clone() };
                            (q.prefix_mask(size) == mask) as i64
                        })
                        .collect::<Vec<i64>>()
                })
            };
            let against_thin = vectors
                .iter()
                .all(|v| thin(k, false).chain(thin(l, true)).all(|ind| v.dot(&ind) == 0));
            let entries: Vec<_> = vectors
                .iter()
                .map(|v| {
                    let support: Vec<_> = perms
                        .iter()
                        .zip(&v.coords)
                        .filter(|(_, &c)| c != 0)
                        .map(|(p, &c)| json!({ "perm": p, "coef": c }))
                        .collect();
                    json!({ "label": v.label, "name": v.label.to_string(), "support": support })
                })
                .collect();
            let report = json!({
                "n": n,
                "k": k,
                "l": l,
                "dimension": vectors.len(),
                "vectors": entries,
                "audit": { "pairwise_orthogonal": pairwise, "orthogonal_to_thin_sections": against_thin },
            });
            if json_out {
                return to_json(&report);
            }
            let mut s = format!("cross-section (k={k}, l={l}) on n={n}: dimension {}\n", vectors.len());
            for v in &vectors {
                s += &format!("  {} ({} non-zero coordinates)\n", v.label, v.coords.iter().filter(|&&c| c != 0).count());
            }
            s += &format!("pairwise orthogonal: {pairwise}\northogonal to thin sections: {against_thin}\n");
            Ok(s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let output = cli.output.clone();
    match run(cli).and_then(|text| emit(output.as_deref(), &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Validation>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
