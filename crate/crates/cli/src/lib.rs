//! Scenario runner behind the `respo` binary.
//!
//! Every subcommand writes `report.txt` into the output directory, plus its CSV
//! artifact where it has one. Exit codes: 0 success, 1 configuration or I/O
//! problem, 2 precondition failure, 3 numerical failure.

pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use respo_core::periodic::{solve_periodic, verify_certificate};
use respo_core::resonance::{default_radii, degree_of_g, degree_sweep, index_formula_check};
use respo_core::{
    AveragedMap, BoundaryCondition, Coefficient, DVector, Error, NemytskiiOperator, SpectralOperator,
};

use config::{ConfigError, ScenarioConfig};
use report::{num, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    ResonanceCheck,
    LlCheck,
    AveragedMap,
    Degree,
    VerifyIndex,
    SolvePeriodic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::ResonanceCheck => "resonance-check",
            Command::LlCheck => "ll-check",
            Command::AveragedMap => "averaged-map",
            Command::Degree => "degree",
            Command::VerifyIndex => "verify-index",
            Command::SolvePeriodic => "solve-periodic",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Io(String),
    Core(Error),
    /// A check on the problem data failed (exit 2).
    Precondition(String),
    /// A numerical result did not pass its own verification (exit 3).
    Revoked(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Core(e) if e.is_precondition() => 2,
            Failure::Precondition(_) => 2,
            Failure::Core(_) | Failure::Revoked(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Precondition(m) => write!(f, "precondition failed: {m}"),
            Failure::Revoked(m) => write!(f, "certificate revoked: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Report text and the files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<PathBuf>,
}

/// Runs `command`; `report.txt` is written on failure as well, and the failure
/// carries the exit code.
pub fn run(command: Command, cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome, (Failure, String)> {
    let mut report = Report::default();
    let mut files = Vec::new();
    let result = fs::create_dir_all(out_dir)
        .map_err(|e| io(out_dir, e))
        .and_then(|_| dispatch(command, cfg, out_dir, &mut report, &mut files));
    if let Err(f) = &result {
        report.fail(command.name(), f.to_string());
    }
    let text = report.render(command.name(), cfg);
    let path = out_dir.join("report.txt");
    let written = fs::write(&path, &text).map_err(|e| io(&path, e));
    match (result, written) {
        (Err(f), _) => Err((f, text)),
        (Ok(()), Err(f)) => Err((f, text)),
        (Ok(()), Ok(())) => {
            files.push(path);
            Ok(Outcome { report: text, files })
        }
    }
}

struct Setup {
    op: SpectralOperator,
    nem: NemytskiiOperator,
}

impl Setup {
    fn new(cfg: &ScenarioConfig, report: &mut Report) -> Result<Self, Failure> {
        let op = SpectralOperator::build(&cfg.operator_spec()?)?;
        let mut field = cfg.field()?;
        let rep = field.validate(op.grid());
        report.check(rep.bound_ok, "field_bound", format!("max |f| = {} vs m = {}", num(rep.max_abs), num(field.bound)));
        report.check(
            rep.lipschitz_ok,
            "field_lipschitz",
            format!("max slope = {} vs L = {}", num(rep.max_slope), num(field.lipschitz)),
        );
        report.check(rep.periodic_ok, "field_periodic", format!("max |f(t+T) - f(t)| = {}", num(rep.period_defect)));
        match rep.limits_ok {
            Some(ok) => {
                let defects: Vec<String> = rep.limit_defects.iter().map(|d| num(*d)).collect();
                report.check(ok, "field_limits", format!("defects at Y = 1e1..1e4: {}", defects.join(" ")));
                if !ok {
                    report.info("field_limits", "declared f_plus/f_minus do not match f; limits dropped");
                    field.f_plus = None;
                    field.f_minus = None;
                }
            }
            None => report.info("field_limits", "f_plus/f_minus not declared"),
        }
        let nem = NemytskiiOperator::new(field, op.grid().clone());
        Ok(Self { op, nem })
    }

    fn lambda(&self, cfg: &ScenarioConfig, report: &mut Report) -> Result<f64, Failure> {
        let lambda = match cfg.resonance.lambda {
            Some(l) => l,
            None => {
                let distinct = self.op.distinct_eigenvalues().len();
                if cfg.resonance.k > distinct {
                    return Err(Failure::Config(ConfigError(format!(
                        "resonance.k = {} exceeds the number of distinct eigenvalues ({distinct})",
                        cfg.resonance.k
                    ))));
                }
                self.op.eigenvalue(cfg.resonance.k)?
            }
        };
        let kernel = self.op.kernel_data(lambda, None)?;
        report.info("lambda", format!("{} (dim N = {})", num(kernel.lambda), kernel.dim()));
        Ok(kernel.lambda)
    }
}

fn dispatch(
    command: Command,
    cfg: &ScenarioConfig,
    out: &Path,
    report: &mut Report,
    files: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    match command {
        Command::Spectrum => spectrum(cfg, out, report, files),
        Command::ResonanceCheck => resonance_check(cfg, report),
        Command::LlCheck => ll_check(cfg, report),
        Command::AveragedMap => averaged_map(cfg, out, report, files),
        Command::Degree => degree(cfg, report),
        Command::VerifyIndex => verify_index(cfg, report),
        Command::SolvePeriodic => solve(cfg, out, report, files),
    }
}

fn write_file(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    fs::write(&path, text).map_err(|e| io(&path, e))?;
    files.push(path);
    Ok(())
}

fn spectrum(cfg: &ScenarioConfig, out: &Path, report: &mut Report, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let spec = cfg.operator_spec()?;
    let op = SpectralOperator::build(&spec)?;
    let mut csv = String::from("k,eigenvalue,multiplicity\n");
    for (k, l, m) in op.eigen_table() {
        csv.push_str(&format!("{k},{},{m}\n", num(l)));
    }
    write_file(out.join("spectrum.csv"), &csv, files)?;

    let scale = op.matrix().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let sym = op.symmetry_defect();
    report.check(sym <= 1e-12 * scale, "self_adjoint", format!("weighted symmetry defect {}", num(sym)));
    let res = op.eigen_residual();
    report.check(res <= 1e-9, "eigen_residual", num(res));
    let orth = op.orthonormality_defect();
    report.check(orth <= 1e-10, "orthonormality", num(orth));

    let unit = matches!(spec.coefficient, Coefficient::Constant(c) if c == 1.0);
    if unit && spec.shape.len() == 1 {
        let n = spec.shape[0];
        let worst = op
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let exact = match spec.bc {
                    BoundaryCondition::Dirichlet => {
                        let h = spec.lengths[0] / (n + 1) as f64;
                        2.0 / (h * h) * (1.0 - ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
                    }
                    BoundaryCondition::Neumann => {
                        let h = spec.lengths[0] / n as f64;
                        4.0 / (h * h) * (k as f64 * std::f64::consts::PI / (2 * n) as f64).sin().powi(2)
                    }
                };
                (l - exact).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        report.check(worst <= 1e-10, "closed_form", format!("max relative error {}", num(worst)));
    }
    if spec.bc == BoundaryCondition::Neumann {
        let ones = DVector::from_element(op.len(), 1.0);
        let image = (op.matrix() * &ones).amax();
        let exact = op.eigenvalues()[0] == 0.0 && image == 0.0;
        report.check(exact, "neumann_null_vector", format!("lambda_1 = {}, max |A 1| = {}", num(op.eigenvalues()[0]), num(image)));
    }
    report.info("eigenvalues", format!("{} ({} distinct)", op.len(), op.distinct_eigenvalues().len()));
    Ok(())
}

fn resonance_check(cfg: &ScenarioConfig, report: &mut Report) -> Result<(), Failure> {
    let s = Setup::new(cfg, report)?;
    let lambda = s.lambda(cfg, report)?;
    let period = cfg.resonance.period;
    let rep = s.op.verify_resonance_conditions(lambda, period)?;
    report.check(
        rep.a1_holds,
        "A1",
        format!(
            "dim Ker(lambda I - A) = {}, dim Ker(I - e^(lambda T) S(T)) = {}",
            rep.dim_generator_kernel, rep.dim_translation_kernel
        ),
    );
    report.check(rep.a3_holds, "A3", format!("symmetry defect {}", num(rep.symmetry_defect)));
    report.info("gap", format!("min |1 - e^((lambda - lambda_j) T)| = {}", num(rep.gap)));
    let m = s.op.multiplicity_report(lambda, period)?;
    report.info(
        "multiplicities",
        format!("k = {}, mu = {}, dim N = {}, d_k = {}", m.k, m.mu_lambda, m.dim_n, m.d_k),
    );
    report.check(m.mu_lambda == m.d_k, "mu_equals_dk", format!("mu = {}, d_k = {}", m.mu_lambda, m.d_k));
    let det = s.op.restricted_det(lambda, period)?;
    let expected = if m.mu_lambda % 2 == 0 { 1 } else { -1 };
    report.check(
        det.sign == expected,
        "mu_parity",
        format!("sign det((I - e^(lambda T) S(T))|_M) = {}, (-1)^mu = {expected}", det.sign),
    );
    if !rep.a1_holds {
        return Err(Failure::Precondition("kernel condition A1 fails".into()));
    }
    Ok(())
}

fn ll_check(cfg: &ScenarioConfig, report: &mut Report) -> Result<(), Failure> {
    let s = Setup::new(cfg, report)?;
    let lambda = s.lambda(cfg, report)?;
    let kernel = s.op.kernel_data(lambda, None)?;
    let v = s.nem.ll_verdict(&kernel, cfg.solver.n_sphere, cfg.solver.n_t)?;
    let witness: Vec<String> = v.witness.iter().map(|w| num(*w)).collect();
    report.info("ll_values", format!("min {} max {} over {} directions", num(v.min_value), num(v.max_value), v.directions));
    report.info("ll_witness", format!("[{}] -> {}", witness.join(", "), num(v.witness_value)));
    let qualifier = if v.sampled { " (sampled)" } else { "" };
    report.pass("ll_verdict", format!("{}{qualifier}", v.kind));
    Ok(())
}

fn averaged_map(cfg: &ScenarioConfig, out: &Path, report: &mut Report, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let s = Setup::new(cfg, report)?;
    let lambda = s.lambda(cfg, report)?;
    let kernel = s.op.kernel_data(lambda, None)?;
    let map = AveragedMap::new(&s.nem, kernel, cfg.solver.n_t)?;
    let r = cfg.output.gmap_radius;
    let n = cfg.output.gmap_samples.max(2);
    let at = |i: usize| -r + 2.0 * r * i as f64 / (n - 1) as f64;
    let mut csv = String::new();
    match map.dim() {
        1 => {
            csv.push_str("c,g\n");
            for i in 0..n {
                csv.push_str(&format!("{},{}\n", num(at(i)), num(map.eval(&[at(i)])[0])));
            }
        }
        2 => {
            csv.push_str("c1,c2,g1,g2\n");
            for i in 0..n {
                for j in 0..n {
                    let g = map.eval(&[at(i), at(j)]);
                    csv.push_str(&format!("{},{},{},{}\n", num(at(i)), num(at(j)), num(g[0]), num(g[1])));
                }
            }
        }
        d => return Err(Error::UnsupportedKernelDim(d).into()),
    }
    write_file(out.join("gmap.csv"), &csv, files)?;
    if let (Ok(a), Ok(b)) = (map.g0_scalar(-r), map.g0_scalar(r)) {
        report.info("g0", format!("g0({}) = {}, g0({}) = {}", num(-r), num(a), num(r), num(b)));
        report.check(a * b < 0.0, "g0_sign_change", "g0(a) * g0(b) < 0");
    }
    Ok(())
}

fn degree(cfg: &ScenarioConfig, report: &mut Report) -> Result<(), Failure> {
    let s = Setup::new(cfg, report)?;
    let lambda = s.lambda(cfg, report)?;
    let kernel = s.op.kernel_data(lambda, None)?;
    let map = AveragedMap::new(&s.nem, kernel, cfg.solver.n_t)?;
    for p in degree_sweep(&map, &default_radii())? {
        let what = match &p.outcome {
            Ok(d) => format!("degree {} (margin {})", d.value, num(d.boundary_margin)),
            Err(e) => e.to_string(),
        };
        report.info("radius", format!("R = {}: {what}", num(p.radius)));
    }
    let d = degree_of_g(&map, &default_radii())?;
    report.pass(
        "degree",
        format!(
            "deg_B(g, B(0, {})) = {} via {} with {} samples, margin {}",
            num(d.radius),
            d.value,
            d.method,
            d.samples,
            num(d.boundary_margin)
        ),
    );
    Ok(())
}

fn verify_index(cfg: &ScenarioConfig, report: &mut Report) -> Result<(), Failure> {
    let s = Setup::new(cfg, report)?;
    let lambda = s.lambda(cfg, report)?;
    let chk = index_formula_check(&s.op, &s.nem, lambda, &cfg.index_config())?;
    report.info(
        "counts",
        format!("deg g = {}, mu = {}, dim N = {}, d_k = {}", chk.deg_g, chk.mu_lambda, chk.dim_n, chk.d_k),
    );
    report.info("galerkin_modes", format!("{:?} on B(0, {})", chk.galerkin_modes, num(chk.radius)));
    for (e, d) in &chk.sweep {
        report.info("sweep", format!("epsilon = {}: deg(I - Psi_T) = {d}", num(*e)));
    }
    report.check(chk.stable(), "epsilon_stability", "degree constant over the epsilon sweep");
    let ok = report.check(
        chk.agrees(),
        "index_formula",
        format!(
            "deg(I - Psi_T) = {}, (-1)^(mu + dim N) deg g = {}",
            chk.lhs, chk.rhs
        ),
    );
    let verdict = if chk.agrees_dk() { "matches" } else { "does not match" };
    report.info(
        "parity_comparison",
        format!(
            "(-1)^d_k deg g = {} {verdict} the direct computation; (-1)^(mu + dim N) deg g = {} {}",
            chk.rhs_dk,
            chk.rhs,
            if chk.agrees() { "matches" } else { "does not match" }
        ),
    );
    if !ok {
        return Err(Failure::Revoked(format!("index formula mismatch: {} vs {}", chk.lhs, chk.rhs)));
    }
    Ok(())
}

fn solve(cfg: &ScenarioConfig, out: &Path, report: &mut Report, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let s = Setup::new(cfg, report)?;
    let lambda = s.lambda(cfg, report)?;
    let scfg = cfg.solver_config();
    let cert = match solve_periodic(&s.op, &s.nem, lambda, &scfg) {
        Err(Error::KernelDrift { drift }) => {
            report.pass(
                "nonexistence_witness",
                format!("kernel drift |P(Psi_T(x) - x)| = {} for every probed x", num(drift)),
            );
            return Err(Error::KernelDrift { drift }.into());
        }
        other => other?,
    };
    let mut csv = Vec::new();
    cert.orbit.write_csv(&mut csv).map_err(|e| io(&out.join("orbit.csv"), e))?;
    write_file(out.join("orbit.csv"), &String::from_utf8_lossy(&csv), files)?;

    let seed: Vec<String> = cert.kernel_seed.iter().map(|v| num(*v)).collect();
    let coords: Vec<String> = cert.kernel_coordinates.iter().map(|v| num(*v)).collect();
    report.info("kernel_seed", format!("[{}]", seed.join(", ")));
    report.info("kernel_coordinates", format!("[{}]", coords.join(", ")));
    report.info("degree", cert.degree.to_string());
    report.info("ll_verdict", cert.ll.map_or("n/a".to_string(), |k| k.to_string()));
    report.info(
        "iterations",
        format!(
            "{} Newton steps over {} continuation steps, {} complement modes",
            cert.newton_iterations, cert.continuation_steps, cert.complement_modes
        ),
    );
    report.check(cert.residual <= cert.tol, "residual", format!("|Psi_T(x) - x| = {}", num(cert.residual)));
    report.check(
        cert.periodicity <= 10.0 * cert.residual.max(cert.tol),
        "periodicity",
        format!("|u(2T) - u(T)| = {}", num(cert.periodicity)),
    );
    let v = verify_certificate(&s.op, &s.nem, &cert, scfg.integrator, scfg.n_t)?;
    report.info("verification", format!("doubled resolution, threshold {}", num(v.threshold)));
    report.check(v.return_defect <= v.threshold, "verify_return", format!("|u(T) - u(0)| = {}", num(v.return_defect)));
    report.check(v.periodicity <= v.threshold, "verify_periodicity", format!("max |u(t+T) - u(t)| = {}", num(v.periodicity)));
    report.check(v.ll_matches, "verify_ll", "LL verdict reproduced");
    report.check(v.degree.is_some_and(|d| d != 0), "verify_degree", format!("deg g = {:?}", v.degree));
    if !v.passed() {
        return Err(Failure::Revoked(v.failures.join("; ")));
    }
    report.pass("certificate", "periodic solution certified");
    Ok(())
}
