use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::exit;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use jmf::decompose::{band_h_oracle, canonical_h, completed_finite, completed_polar, split};
use jmf::error::Error;
use jmf::formspec::{parse_form, ThetaQuotientForm};
use jmf::numerics::{EllipticPoint, ModularPoint, Precision};
use jmf::verify::{all_checks, filtered_checks};

#[derive(Parser)]
#[command(name = "jmf", about = "Evaluate and decompose meromorphic Jacobi forms given as theta quotients")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the form on a grid of (z, tau) points
    Eval(Common),
    /// Finite/polar split and its completion at each (z, tau)
    Decompose(Common),
    /// Run the named transformation and identity checks
    Verify(VerifyArgs),
    /// Compare the contour route for the theta coefficients with the
    /// band-series route
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Form description file (JSON record list)
    #[arg(long)]
    form: Option<PathBuf>,
    /// Comma-separated tau values, e.g. 1.2i,0.3+1.4i
    #[arg(long, value_delimiter = ',')]
    tau: Vec<String>,
    /// Comma-separated z values
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    /// Comma-separated integer indices for the coefficient commands
    #[arg(long, value_delimiter = ',')]
    ell: Vec<i64>,
    /// Series truncation override (also the q-order for the band oracle)
    #[arg(long)]
    terms: Option<usize>,
    /// Quadrature sample count override
    #[arg(long)]
    samples: Option<usize>,
    /// Target tolerance override
    #[arg(long)]
    tol: Option<f64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated name substrings selecting checks; "all" runs everything
    #[arg(long, default_value = "all")]
    checks: String,
}

fn usage(msg: &str) -> ! {
    eprintln!("usage error: {msg}");
    exit(2)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::IndexNotIntegral | Error::IndexNotPositive => 2,
        Error::PoleCollision { .. } => 3,
        Error::PathThroughPole => 5,
        Error::BandContainsPole { .. } => 6,
        _ => 4,
    }
}

fn parse_complex(s: &str) -> Complex64 {
    s.trim()
        .parse::<Complex64>()
        .unwrap_or_else(|_| usage(&format!("cannot parse complex number {s:?}")))
}

impl Common {
    fn precision(&self) -> Precision {
        let mut p = Precision::default();
        if let Some(t) = self.terms {
            p.series_terms = t;
        }
        if let Some(s) = self.samples {
            p.contour_samples = s;
        }
        if let Some(t) = self.tol {
            p.target_tol = t;
        }
        p
    }

    fn taus(&self) -> Vec<ModularPoint> {
        if self.tau.is_empty() {
            usage("--tau list must be nonempty");
        }
        self.tau
            .iter()
            .map(|s| {
                let t = parse_complex(s);
                if t.im <= 0.0 {
                    usage(&format!("tau {s:?} must have positive imaginary part"));
                }
                ModularPoint::new(t)
            })
            .collect()
    }

    fn zs(&self) -> Vec<Complex64> {
        if self.z.is_empty() {
            usage("--z list must be nonempty");
        }
        self.z.iter().map(|s| parse_complex(s)).collect()
    }

    fn ells(&self) -> Vec<i64> {
        if self.ell.is_empty() {
            usage("--ell list must be nonempty");
        }
        self.ell.clone()
    }

    fn form(&self) -> Result<ThetaQuotientForm, Error> {
        let path = self
            .form
            .as_ref()
            .unwrap_or_else(|| usage("--form is required for this command"));
        let text = std::fs::read_to_string(path)
            .unwrap_or_else(|e| usage(&format!("cannot read {}: {e}", path.display())));
        parse_form(&text)
    }

    fn emit<T: Serialize>(&self, report: &T) {
        let text = serde_json::to_string_pretty(report).expect("report serialization");
        match &self.json {
            Some(path) => std::fs::write(path, text.as_bytes())
                .unwrap_or_else(|e| usage(&format!("cannot write {}: {e}", path.display()))),
            None => println!("{text}"),
        }
    }
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

#[derive(Serialize)]
struct EvalRecord {
    tau: [f64; 2],
    value_im: f64,
    value_re: f64,
    z: [f64; 2],
}

fn cmd_eval(cfg: &Common) -> Result<(), Error> {
    let form = cfg.form()?;
    let p = cfg.precision();
    let points: Vec<(Complex64, ModularPoint)> = cfg
        .taus()
        .into_iter()
        .flat_map(|t| cfg.zs().into_iter().map(move |z| (z, t)))
        .collect();
    let records = points
        .par_iter()
        .map(|&(z, tau)| {
            let v = form.eval(EllipticPoint::new(z), tau, p)?;
            Ok(EvalRecord { tau: pair(tau.tau()), value_im: v.im, value_re: v.re, z: pair(z) })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    cfg.emit(&records);
    Ok(())
}

#[derive(Serialize)]
struct DecomposeRecord {
    completed_residual: f64,
    phi: [f64; 2],
    #[serde(rename = "phi_F")]
    phi_f: [f64; 2],
    #[serde(rename = "phi_F_hat")]
    phi_f_hat: [f64; 2],
    #[serde(rename = "phi_P")]
    phi_p: [f64; 2],
    #[serde(rename = "phi_P_hat")]
    phi_p_hat: [f64; 2],
    split_residual: f64,
    tau: [f64; 2],
    z: [f64; 2],
}

fn cmd_decompose(cfg: &Common) -> Result<(), Error> {
    let form = cfg.form()?;
    let p = cfg.precision();
    let points: Vec<(Complex64, ModularPoint)> = cfg
        .taus()
        .into_iter()
        .flat_map(|t| cfg.zs().into_iter().map(move |z| (z, t)))
        .collect();
    let records = points
        .par_iter()
        .map(|&(zc, tau)| {
            let z = EllipticPoint::new(zc);
            let rep = split(&form, z, tau, p)?;
            let fin_hat = completed_finite(&form, z, tau, p)?;
            let pol_hat = completed_polar(&form, z, tau, p)?;
            Ok(DecomposeRecord {
                completed_residual: (fin_hat + pol_hat - rep.total).norm(),
                phi: pair(rep.total),
                phi_f: pair(rep.finite),
                phi_f_hat: pair(fin_hat),
                phi_p: pair(rep.polar),
                phi_p_hat: pair(pol_hat),
                split_residual: rep.residual,
                tau: pair(tau.tau()),
                z: pair(zc),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    cfg.emit(&records);
    Ok(())
}

#[derive(Serialize)]
struct CheckRecord {
    pass: bool,
    residual: f64,
    tolerance: f64,
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, Error> {
    let p = args.common.precision();
    let selector = args.checks.trim();
    let results = if selector == "all" {
        all_checks(p)
    } else {
        let filters: Vec<String> = selector
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if filters.is_empty() {
            usage("--checks selected no checks");
        }
        let out = filtered_checks(&filters, p);
        if out.is_empty() {
            usage("--checks matched no known check names");
        }
        out
    };
    let all_pass = results.iter().all(|c| c.pass);
    let report: BTreeMap<String, CheckRecord> = results
        .into_iter()
        .map(|c| {
            (c.name, CheckRecord { pass: c.pass, residual: c.residual, tolerance: c.tolerance })
        })
        .collect();
    args.common.emit(&report);
    Ok(if all_pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct OracleRecord {
    abs_diff: f64,
    ell: i64,
    h_band: [f64; 2],
    h_contour: [f64; 2],
    tau: [f64; 2],
}

fn cmd_oracle(cfg: &Common) -> Result<(), Error> {
    let form = cfg.form()?;
    let p = cfg.precision();
    let q_orders = cfg.terms.unwrap_or(26) as i64;
    let items: Vec<(i64, ModularPoint)> = cfg
        .taus()
        .into_iter()
        .flat_map(|t| cfg.ells().into_iter().map(move |l| (l, t)))
        .collect();
    let records = items
        .par_iter()
        .map(|&(ell, tau)| {
            let hc = canonical_h(&form, ell, tau, p)?;
            let hb = band_h_oracle(&form, ell, tau, q_orders)?;
            Ok(OracleRecord {
                abs_diff: (hc - hb).norm(),
                ell,
                h_band: pair(hb),
                h_contour: pair(hc),
                tau: pair(tau.tau()),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    cfg.emit(&records);
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("JMF_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => usage("JMF_THREADS must be a positive integer"),
        }
    }
    let outcome = match &cli.command {
        Cmd::Eval(cfg) => cmd_eval(cfg).map(|_| 0),
        Cmd::Decompose(cfg) => cmd_decompose(cfg).map(|_| 0),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Oracle(cfg) => cmd_oracle(cfg).map(|_| 0),
    };
    match outcome {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            exit(exit_code(&e));
        }
    }
}
