//! `qtrank`: decompose small quaternion tensors, certify ranks, and run
//! verification suites over JSON files.
//!
//! Shapes are written `n1xn2xn3` with mode 2 counting frontal slices: a
//! tensor of shape (n1, n2, n3) consists of n2 frontal slices of size
//! n1 x n3. This differs from the mode-3-frontal convention some authors
//! use; to convert from a mode-3-frontal layout with q frontal slices of
//! size m x p, pass the shape as `m x q x p` and list each slice's rows
//! under the middle index.
//!
//! Exit codes: 0 success, 1 verification/check failure, 2 input error,
//! 3 algorithm failure. Diagnostics go to stderr, data to stdout. All
//! floating-point values in JSON output are printed with 17 significant
//! digits, so identical inputs and flags produce byte-identical output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use qtrank_core::decompose::{dispatch, Path as BranchPath};
use qtrank_core::oracle::{random_tensor, run_suite, verify, Dist};
use qtrank_core::tensor::{rank_certificate_square, RankCertificate};
use qtrank_core::{Decomposition, Error, HMatrix, Quat, Tensor3};

#[derive(Parser)]
#[command(
    name = "qtrank",
    about = "Certified low-rank decompositions of small quaternion tensors",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decompose a tensor file into simple tensors within the shape's rank bound
    Decompose {
        /// Tensor JSON file
        input: PathBuf,
        /// Verification tolerance (default 1e-8, or QTRANK_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Write the decomposition JSON to this path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact-rank certificate for an n x p x n tensor
    Cert {
        /// Tensor JSON file
        input: PathBuf,
        /// Emit JSON instead of a human-readable line
        #[arg(long)]
        json: bool,
    },
    /// Complex adjoint of a quaternion matrix file
    Adjoint {
        /// Matrix JSON file (rows of [w, x, y, z] quadruples)
        input: PathBuf,
        /// Write the adjoint JSON to this path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonalizability report for a square quaternion matrix file
    Diag {
        /// Matrix JSON file (rows of [w, x, y, z] quadruples)
        input: PathBuf,
        /// Emit JSON instead of a human-readable line
        #[arg(long)]
        json: bool,
    },
    /// Check a decomposition file against a tensor file
    Verify {
        /// Tensor JSON file
        tensor: PathBuf,
        /// Decomposition JSON file
        decomposition: PathBuf,
        /// Verification tolerance (default 1e-8, or QTRANK_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Emit JSON instead of a human-readable line
        #[arg(long)]
        json: bool,
    },
    /// Generate a seeded random tensor
    Random {
        /// Shape as n1xn2xn3, e.g. 2x3x2
        #[arg(long)]
        shape: Shape,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Entry distribution: uniform | unit | complex | real
        #[arg(long, default_value = "uniform")]
        dist: String,
        /// Write the tensor JSON to this path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a seeded batch of random tensors and report aggregates
    Suite {
        /// Shape as n1xn2xn3, e.g. 2x2x2
        #[arg(long)]
        shape: Shape,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Verification tolerance (default 1e-8, or QTRANK_TOL)
        #[arg(long)]
        tol: Option<f64>,
        /// Write the report JSON to this path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy)]
struct Shape(usize, usize, usize);

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split('x').collect();
        if parts.len() != 3 {
            return Err(format!("shape must be n1xn2xn3, got {s:?}"));
        }
        let dims: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| format!("bad shape component {p:?}")))
            .collect::<Result<_, _>>()?;
        Ok(Shape(dims[0], dims[1], dims[2]))
    }
}

/// JSON formatter printing every float with 17 significant digits, so the
/// output is byte-stable and round-trips exactly.
struct StableFloats;

impl serde_json::ser::Formatter for StableFloats {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f32,
    ) -> std::io::Result<()> {
        write!(writer, "{value:.8e}")
    }
}

fn to_stable_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, StableFloats);
    value
        .serialize(&mut ser)
        .expect("JSON serialization cannot fail for in-memory data");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Exit code for a library error: 2 for input problems, 3 for algorithm
/// failures.
fn code_for(e: &Error) -> u8 {
    match e {
        Error::DimensionMismatch(_) | Error::UnsupportedShape(..) | Error::NonSquare { .. } => 2,
        _ => 3,
    }
}

fn resolve_tol(flag: Option<f64>) -> Result<f64, String> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var("QTRANK_TOL") {
            Ok(v) => v
                .parse::<f64>()
                .map_err(|_| format!("QTRANK_TOL is not a number: {v:?}"))?,
            Err(_) => 1e-8,
        },
    };
    if !(tol > 0.0) {
        return Err(format!("tolerance must be strictly positive, got {tol}"));
    }
    Ok(tol)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

fn emit(data: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, format!("{data}\n"))
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{data}");
            Ok(())
        }
    }
}

fn fail(msg: &str, code: u8) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

#[derive(Serialize)]
struct DecomposeReport {
    shape: [usize; 3],
    bound: usize,
    terms: usize,
    residual: f64,
    branch: BranchPath,
    decomposition: Decomposition<f64>,
}

fn cmd_decompose(input: &Path, tol: Option<f64>, out: Option<&Path>) -> ExitCode {
    let tol = match resolve_tol(tol) {
        Ok(t) => t,
        Err(msg) => return fail(&msg, 2),
    };
    let t: Tensor3<f64> = match read_json(input) {
        Ok(t) => t,
        Err(msg) => return fail(&msg, 2),
    };
    let outcome = match dispatch(&t) {
        Ok(o) => o,
        Err(e) => return fail(&format!("decomposition failed: {e}"), code_for(&e)),
    };
    let (residual, ok) = match verify(&t, &outcome.decomposition, tol) {
        Ok(r) => r,
        Err(e) => return fail(&format!("verification failed: {e}"), code_for(&e)),
    };
    let report = DecomposeReport {
        shape: [t.dims.0, t.dims.1, t.dims.2],
        bound: outcome.bound,
        terms: outcome.decomposition.terms.len(),
        residual,
        branch: outcome.path,
        decomposition: outcome.decomposition,
    };
    eprintln!(
        "shape {}x{}x{}, bound {}, terms {}, residual {:.3e}, branch {:?}",
        report.shape[0],
        report.shape[1],
        report.shape[2],
        report.bound,
        report.terms,
        report.residual,
        report.branch
    );
    if let Err(msg) = emit(&to_stable_json(&report), out) {
        return fail(&msg, 2);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: residual {residual:.3e} exceeds tolerance {tol:.3e}");
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct CertReport {
    certificate: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<Decomposition<f64>>,
}

fn cmd_cert(input: &Path, json: bool) -> ExitCode {
    let t: Tensor3<f64> = match read_json(input) {
        Ok(t) => t,
        Err(msg) => return fail(&msg, 2),
    };
    if t.dims.0 != t.dims.2 {
        return fail(
            &format!(
                "certificate needs an n x p x n tensor, got {}x{}x{}",
                t.dims.0, t.dims.1, t.dims.2
            ),
            2,
        );
    }
    let report = match rank_certificate_square(&t) {
        RankCertificate::ExactlyN(d) => CertReport {
            certificate: "ExactlyN",
            decomposition: Some(d),
        },
        RankCertificate::MoreThanN => CertReport {
            certificate: "MoreThanN",
            decomposition: None,
        },
        RankCertificate::Inconclusive => CertReport {
            certificate: "Inconclusive",
            decomposition: None,
        },
    };
    if json {
        println!("{}", to_stable_json(&report));
    } else {
        match &report.decomposition {
            Some(d) => println!(
                "certificate: {} ({}-term decomposition attached)",
                report.certificate,
                d.terms.len()
            ),
            None => println!("certificate: {}", report.certificate),
        }
    }
    ExitCode::SUCCESS
}

fn read_matrix(path: &Path) -> Result<HMatrix<f64>, String> {
    let rows: Vec<Vec<Quat>> = read_json(path)?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(format!("{}: matrix rows must be nonempty and equal length", path.display()));
    }
    Ok(HMatrix::from_rows(rows))
}

fn cmd_adjoint(input: &Path, out: Option<&Path>) -> ExitCode {
    let m = match read_matrix(input) {
        Ok(m) => m,
        Err(msg) => return fail(&msg, 2),
    };
    let chi = match m.chi_adjoint() {
        Ok(chi) => chi,
        Err(e) => return fail(&format!("adjoint failed: {e}"), code_for(&e)),
    };
    let grid: Vec<Vec<[f64; 2]>> = (0..chi.rows)
        .map(|i| (0..chi.cols).map(|j| [chi[(i, j)].re, chi[(i, j)].im]).collect())
        .collect();
    match emit(&to_stable_json(&grid), out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => fail(&msg, 2),
    }
}

#[derive(Serialize)]
struct DiagReport {
    diagonalizable: bool,
    /// distinct eigenvalues of the complex adjoint with nonnegative
    /// imaginary part, as [re, im] pairs
    eigenvalues: Vec<[f64; 2]>,
}

fn cmd_diag(input: &Path, json: bool) -> ExitCode {
    let m = match read_matrix(input) {
        Ok(m) => m,
        Err(msg) => return fail(&msg, 2),
    };
    let (diagonalizable, report) = match m.is_diagonalizable() {
        Ok(r) => r,
        Err(e) => return fail(&format!("diagonalizability test failed: {e}"), code_for(&e)),
    };
    let eigenvalues = report
        .clusters
        .iter()
        .filter(|c| c.lambda.im >= 0.0)
        .map(|c| [c.lambda.re, c.lambda.im])
        .collect();
    let out = DiagReport {
        diagonalizable,
        eigenvalues,
    };
    if json {
        println!("{}", to_stable_json(&out));
    } else {
        println!("diagonalizable: {diagonalizable}");
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct VerifyReport {
    residual: f64,
    ok: bool,
}

fn cmd_verify(tensor: &Path, decomposition: &Path, tol: Option<f64>, json: bool) -> ExitCode {
    let tol = match resolve_tol(tol) {
        Ok(t) => t,
        Err(msg) => return fail(&msg, 2),
    };
    let t: Tensor3<f64> = match read_json(tensor) {
        Ok(t) => t,
        Err(msg) => return fail(&msg, 2),
    };
    let d: Decomposition<f64> = match read_json(decomposition) {
        Ok(d) => d,
        Err(msg) => return fail(&msg, 2),
    };
    let (residual, ok) = match verify(&t, &d, tol) {
        Ok(r) => r,
        Err(e) => return fail(&format!("verification failed: {e}"), code_for(&e)),
    };
    if json {
        println!("{}", to_stable_json(&VerifyReport { residual, ok }));
    } else {
        println!("residual {residual:.3e} ({})", if ok { "ok" } else { "too large" });
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_random(shape: Shape, seed: u64, dist: &str, out: Option<&Path>) -> ExitCode {
    let dist = match Dist::from_str(dist) {
        Ok(d) => d,
        Err(e) => return fail(&e.to_string(), 2),
    };
    let t: Tensor3<f64> = random_tensor((shape.0, shape.1, shape.2), seed, dist);
    match emit(&to_stable_json(&t), out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => fail(&msg, 2),
    }
}

fn cmd_suite(shape: Shape, cases: usize, seed: u64, tol: Option<f64>, out: Option<&Path>) -> ExitCode {
    let tol = match resolve_tol(tol) {
        Ok(t) => t,
        Err(msg) => return fail(&msg, 2),
    };
    let report = match run_suite::<f64>((shape.0, shape.1, shape.2), cases, seed, tol) {
        Ok(r) => r,
        Err(e) => return fail(&format!("suite failed: {e}"), code_for(&e)),
    };
    let passed = report.failures.is_empty();
    eprintln!(
        "{} cases on {}x{}x{}: max terms {}, max residual {:.3e}, {} failures",
        report.cases_run,
        report.shape[0],
        report.shape[1],
        report.shape[2],
        report.max_terms,
        report.max_residual,
        report.failures.len()
    );
    if let Err(msg) = emit(&to_stable_json(&report), out) {
        return fail(&msg, 2);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Decompose { input, tol, out } => cmd_decompose(&input, tol, out.as_deref()),
        Cmd::Cert { input, json } => cmd_cert(&input, json),
        Cmd::Adjoint { input, out } => cmd_adjoint(&input, out.as_deref()),
        Cmd::Diag { input, json } => cmd_diag(&input, json),
        Cmd::Verify {
            tensor,
            decomposition,
            tol,
            json,
        } => cmd_verify(&tensor, &decomposition, tol, json),
        Cmd::Random {
            shape,
            seed,
            dist,
            out,
        } => cmd_random(shape, seed, &dist, out.as_deref()),
        Cmd::Suite {
            shape,
            cases,
            seed,
            tol,
            out,
        } => cmd_suite(shape, cases, seed, tol, out.as_deref()),
    }
}
