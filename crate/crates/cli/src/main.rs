use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use liftkit::automorphism::{pushforward, Generator, StablyTameWitness};
use liftkit::fixtures;
use liftkit::formats::json::{divergence_to_value, profile_to_value, verification_to_value};
use liftkit::formats::{
    lift_from_json, lift_to_json, parse_automorphism, parse_stabilizer, parse_system, render_system,
    wdg_report_to_value, SystemFile,
};
use liftkit::linalg::Matrix;
use liftkit::linearizer::{check_lift_symbolic, divergence_profile, scalar_closure, Budget, ClosureOutcome, Lift};
use liftkit::numerics::verify_lift_numeric;
use liftkit::poly::{Monomial, VectorField};
use liftkit::transport::{stably_tame_transport, tame_transport};
use liftkit::wdg::{check_wdg, wdg_stabilize};

const OK: u8 = 0;
const FALSE: u8 = 1;
const USAGE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "liftkit", version, about = "Exact linear lifts of polynomial vector fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the weighted dependency graph condition (exit 1 if violated).
    CheckWdg {
        system: PathBuf,
        /// Write the graph in Graphviz format.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Compute a linear lift by Lie closure (exit 3 if the budget runs out).
    Lift {
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        max_generators: usize,
        #[arg(long, default_value_t = 24)]
        max_degree: usize,
        #[arg(long, default_value_t = 64)]
        max_iterations: usize,
    },
    /// Check a lift against a system exactly (exit 1 if invalid).
    CheckLift { system: PathBuf, lift: PathBuf },
    /// Push a system forward through a tame automorphism.
    Pushforward { system: PathBuf, map: PathBuf },
    /// Transport a lift through a tame (or, with a stabilizer, stably tame) map.
    Transport {
        system: PathBuf,
        lift: PathBuf,
        map: PathBuf,
        /// Stabilizing observables (and optionally the inverse of the induced map).
        #[arg(long)]
        stabilizer: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stabilizing observable for a linear system pushed through an elementary map.
    Stabilize { system: PathBuf, map: PathBuf },
    /// Integrate a system and its lift side by side (exit 1 above tolerance).
    Verify {
        system: PathBuf,
        lift: PathBuf,
        /// CSV file with one initial condition per row, or inline rows like `1,0;0.5,0.5`.
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Directory for per-initial-condition trajectory CSV files.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Span dimensions and watched degrees of iterated Lie derivatives.
    ClosureProfile {
        system: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        watch: String,
        /// 1-based component whose degree is watched.
        #[arg(long, default_value_t = 2)]
        component: usize,
    },
    /// Print a bundled example file.
    Demo {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<liftkit::Error> for Failure {
    fn from(e: liftkit::Error) -> Self {
        use liftkit::Error::*;
        let code = match e {
            Parse { .. } | Format(_) | Argument(_) | Dimension { .. } | IndexOutOfRange { .. } => USAGE,
            _ => FALSE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::CheckWdg { system, dot, json } => check_wdg_cmd(&system, dot.as_deref(), json),
        Command::Lift {
            system,
            out,
            max_generators,
            max_degree,
            max_iterations,
        } => {
            let budget = Budget::new(max_generators, max_degree, max_iterations)?;
            lift_cmd(&system, out.as_deref(), budget)
        }
        Command::CheckLift { system, lift } => check_lift_cmd(&system, &lift),
        Command::Pushforward { system, map } => pushforward_cmd(&system, &map),
        Command::Transport {
            system,
            lift,
            map,
            stabilizer,
            out,
        } => transport_cmd(&system, &lift, &map, stabilizer.as_deref(), out.as_deref()),
        Command::Stabilize { system, map } => stabilize_cmd(&system, &map),
        Command::Verify {
            system,
            lift,
            x0,
            t_end,
            steps,
            tol,
            trace,
        } => verify_cmd(&system, &lift, &x0, t_end, steps, tol, trace.as_deref()),
        Command::ClosureProfile {
            system,
            k,
            watch,
            component,
        } => profile_cmd(&system, k, &watch, component),
        Command::Demo { name, out } => demo_cmd(&name, out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Stdout writes ignore failures such as a closed pipe.
fn say(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

/// Writes to `out` when given, stdout otherwise.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write(path, text),
        None => {
            say(text);
            Ok(())
        }
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn in_file<T>(path: &Path, r: liftkit::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_system(path: &Path) -> Result<SystemFile, Failure> {
    in_file(path, parse_system(&read(path)?))
}

fn load_lift(path: &Path, sys: &SystemFile) -> Result<Lift, Failure> {
    let (vars, lift) = in_file(path, lift_from_json(&read(path)?))?;
    if lift.n() != sys.vars.len() {
        return Err(Failure::usage(format!(
            "{}: lift has {} base states, system has {}",
            path.display(),
            lift.n(),
            sys.vars.len()
        )));
    }
    if vars != sys.vars {
        eprintln!(
            "note: lift variables {vars:?} are matched positionally to {:?}",
            sys.vars
        );
    }
    Ok(lift)
}

fn check_wdg_cmd(system: &Path, dot: Option<&Path>, as_json: bool) -> Outcome {
    let sys = load_system(system)?;
    let report = check_wdg(&sys.field)?;
    if let Some(path) = dot {
        write(path, &report.graph.to_dot(&sys.vars, Some(&report.cycles)))?;
    }
    if as_json {
        say(&pretty(&wdg_report_to_value(&report, &sys.vars)));
    } else {
        for c in &report.cycles {
            let nodes: Vec<&str> = c.nodes.iter().map(|&i| sys.vars[i].as_str()).collect();
            say(&format!(
                "cycle {} product {} ({})\n",
                nodes.join(" -> "),
                c.product.render(&sys.vars),
                if c.is_constant() { "constant" } else { "non-constant" }
            ));
        }
        say(if report.satisfied {
            "satisfied\n"
        } else {
            "not satisfied\n"
        });
    }
    Ok(if report.satisfied { OK } else { FALSE })
}

fn lift_cmd(system: &Path, out: Option<&Path>, budget: Budget) -> Outcome {
    let sys = load_system(system)?;
    match scalar_closure(&sys.field, budget) {
        ClosureOutcome::Stabilized(lift) => {
            emit(out, &lift_to_json(&lift, &sys.vars))?;
            Ok(OK)
        }
        ClosureOutcome::Diverging(d) => {
            eprintln!("inconclusive (budget exhausted): {}; dims {:?}", d.reason, d.dims);
            say(&pretty(&divergence_to_value(&d, &sys.vars)));
            Ok(INCONCLUSIVE)
        }
    }
}

fn check_lift_cmd(system: &Path, lift: &Path) -> Outcome {
    let sys = load_system(system)?;
    let lift = load_lift(lift, &sys)?;
    let ok = check_lift_symbolic(&sys.field, &lift)?;
    say(if ok { "valid\n" } else { "invalid\n" });
    Ok(if ok { OK } else { FALSE })
}

fn pushforward_cmd(system: &Path, map: &Path) -> Outcome {
    let sys = load_system(system)?;
    let phi = in_file(map, parse_automorphism(&read(map)?))?.map;
    let h = pushforward(&sys.field, &phi)?;
    say(&render_system(&sys.vars, &h));
    Ok(OK)
}

fn transport_cmd(
    system: &Path,
    lift_path: &Path,
    map: &Path,
    stabilizer: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let sys = load_system(system)?;
    let lift = load_lift(lift_path, &sys)?;
    if !check_lift_symbolic(&sys.field, &lift)? {
        eprintln!("{}: not a lift of {}", lift_path.display(), system.display());
        return Ok(FALSE);
    }
    let phi = in_file(map, parse_automorphism(&read(map)?))?.map;
    let transported = match stabilizer {
        None => tame_transport(&lift, &phi)?,
        Some(path) => {
            let file = in_file(path, parse_stabilizer(&read(path)?))?;
            let mut witness = StablyTameWitness::new(phi, file.stabilizer)?;
            if let Some(inv) = file.inverse {
                witness = witness.with_psi_inverse(inv)?;
            }
            stably_tame_transport(&lift, &witness)?
        }
    };
    emit(out, &lift_to_json(&transported, &sys.vars))?;
    Ok(OK)
}

/// `A` with `f = A x`, if `f` is linear and homogeneous.
fn linear_part(f: &VectorField) -> Option<Matrix> {
    let n = f.dim();
    let mut a = Matrix::zeros(n, n);
    for (i, c) in f.components().iter().enumerate() {
        for (m, coeff) in c.terms() {
            let j = (0..n).find(|&j| *m == Monomial::var(n, j))?;
            a.set(i, j, coeff.clone());
        }
    }
    Some(a)
}

fn stabilize_cmd(system: &Path, map: &Path) -> Outcome {
    let sys = load_system(system)?;
    let a = linear_part(&sys.field)
        .ok_or_else(|| Failure::usage(format!("{}: system must be linear (x' = A x)", system.display())))?;
    let phi = in_file(map, parse_automorphism(&read(map)?))?.map;
    let elem = match phi.generators() {
        [Generator::Elementary(e)] => e.clone(),
        _ => {
            return Err(Failure::usage(format!(
                "{}: expected a single `elem` statement",
                map.display()
            )))
        }
    };
    let s = wdg_stabilize(&a, &elem)?;
    let n = sys.vars.len();
    let mut names: Vec<String> = sys.vars[..n - 1].to_vec();
    names.push(fresh_name("w", &sys.vars));
    names.push(sys.vars[n - 1].clone());
    let doc = json!({
        "format": 1,
        "observable": s.observable.render(&sys.vars),
        "vars": names,
        "lifted": render_system(&names, &s.lifted),
        "wdg": wdg_report_to_value(&s.report, &names),
    });
    say(&pretty(&doc));
    Ok(if s.report.satisfied { OK } else { FALSE })
}

fn fresh_name(base: &str, taken: &[String]) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// Rows of comma-separated numbers from a file, or inline rows split by `;`.
fn parse_initial_conditions(spec: &str, n: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        read(path)?
    } else {
        spec.replace(';', "\n")
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) if row.len() == n => rows.push(row),
            Ok(row) => {
                return Err(Failure::usage(format!(
                    "initial condition {}: expected {n} values, found {}",
                    i + 1,
                    row.len()
                )))
            }
            // a header row is allowed first
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(e) => return Err(Failure::usage(format!("initial condition {}: {e}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Failure::usage("no initial conditions given"));
    }
    Ok(rows)
}

fn verify_cmd(
    system: &Path,
    lift_path: &Path,
    x0: &str,
    t_end: f64,
    steps: usize,
    tol: f64,
    trace: Option<&Path>,
) -> Outcome {
    if !(t_end.is_finite() && t_end > 0.0) || !(tol.is_finite() && tol >= 0.0) {
        return Err(Failure::usage("--t-end must be positive and --tol non-negative"));
    }
    let sys = load_system(system)?;
    let lift = load_lift(lift_path, &sys)?;
    let x0s = parse_initial_conditions(x0, sys.vars.len())?;
    let (report, pairs) = verify_lift_numeric(&sys.field, &lift, &x0s, t_end, steps, tol)?;
    if let Some(dir) = trace {
        fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
        let mut lifted_names = sys.vars.clone();
        lifted_names.extend((1..=lift.k()).map(|j| format!("p{j}")));
        for (i, pair) in pairs.iter().enumerate() {
            write(
                &dir.join(format!("direct_{}.csv", i + 1)),
                &pair.direct.to_csv(&sys.vars)?,
            )?;
            write(
                &dir.join(format!("lifted_{}.csv", i + 1)),
                &pair.lifted.to_csv(&lifted_names)?,
            )?;
        }
    }
    say(&pretty(&verification_to_value(&report)));
    Ok(if report.passed { OK } else { FALSE })
}

fn profile_cmd(system: &Path, k: usize, watch: &str, component: usize) -> Outcome {
    let sys = load_system(system)?;
    let var = sys
        .vars
        .iter()
        .position(|v| v == watch)
        .ok_or_else(|| Failure::usage(format!("unknown variable {watch}")))?;
    if component == 0 || component > sys.vars.len() {
        return Err(Failure::usage(format!(
            "--component must be between 1 and {}",
            sys.vars.len()
        )));
    }
    let entries = divergence_profile(&sys.field, k, var, component - 1)?;
    say(&pretty(&profile_to_value(&entries, watch, component - 1)));
    Ok(OK)
}

fn demo_cmd(name: &str, out: Option<&Path>) -> Outcome {
    let (_, text) = fixtures::lookup(name).ok_or_else(|| {
        let known: Vec<&str> = fixtures::ALL.iter().map(|(n, _, _)| *n).collect();
        Failure::usage(format!("unknown demo {name}; available: {}", known.join(", ")))
    })?;
    emit(out, text)?;
    Ok(OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use liftkit::poly::{int, Polynomial};

    #[test]
    fn linear_part_detects_affine_terms() {
        let x = |i| Polynomial::var(2, i);
        let lin = VectorField::from_components(2, vec![x(1), x(0).scale(&int(-3))]).unwrap();
        assert_eq!(linear_part(&lin), Some(Matrix::from_i64(&[&[0, 1], &[-3, 0]])));
        let affine = VectorField::from_components(2, vec![&x(1) + &Polynomial::one(2), x(0)]).unwrap();
        assert_eq!(linear_part(&affine), None);
        let quad = VectorField::from_components(2, vec![x(1).pow(2), x(0)]).unwrap();
        assert_eq!(linear_part(&quad), None);
    }

    #[test]
    fn initial_condition_rows() {
        assert_eq!(
            parse_initial_conditions("1,0;0.5,0.5", 2).unwrap(),
            vec![vec![1.0, 0.0], vec![0.5, 0.5]]
        );
        assert!(parse_initial_conditions("1,0,2", 2).is_err());
        assert!(parse_initial_conditions("", 2).is_err());
        assert_eq!(parse_initial_conditions("x1,x2;3,4", 2).unwrap(), vec![vec![3.0, 4.0]]);
    }
}
