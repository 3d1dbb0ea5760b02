//! Fixed-step RK4 integration and numeric cross-checks of lifts.

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::linearizer::{check_lift_symbolic, Lift};
use crate::poly::{rational_to_f64, VectorField};

type FloatTerm = (f64, Vec<(usize, i32)>);

/// Right-hand side with coefficients converted to `f64` once.
#[derive(Clone, Debug)]
pub struct CompiledField {
    dim: usize,
    components: Vec<Vec<FloatTerm>>,
}

impl CompiledField {
    pub fn from_field(f: &VectorField) -> Self {
        let components = f
            .components()
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(m, coeff)| {
                        let factors = m
                            .exponents()
                            .iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(i, &e)| (i, e as i32))
                            .collect();
                        (rational_to_f64(coeff), factors)
                    })
                    .collect()
            })
            .collect();
        CompiledField {
            dim: f.dim(),
            components,
        }
    }

    pub fn from_matrix(a: &Matrix) -> Result<Self> {
        check_dim("linear field", a.rows(), a.cols())?;
        let components = (0..a.rows())
            .map(|i| {
                a.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
                    .map(|(j, c)| (rational_to_f64(c), vec![(j, 1)]))
                    .collect()
            })
            .collect();
        Ok(CompiledField {
            dim: a.rows(),
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.components) {
            *o = terms
                .iter()
                .map(|(c, factors)| factors.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e)))
                .sum();
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// CSV with header `t,<names...>`.
    pub fn to_csv<S: AsRef<str>>(&self, names: &[S]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("t").chain(names.iter().map(AsRef::as_ref));
        w.write_record(header).map_err(csv_error)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let row = std::iter::once(t).chain(x).map(|v| v.to_string());
            w.write_record(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses the CSV layout written by [`Trajectory::to_csv`]; returns the
    /// state column names alongside.
    pub fn from_csv(text: &str) -> Result<(Vec<String>, Trajectory)> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_error)?.clone();
        if header.get(0) != Some("t") {
            return Err(Error::Format("trajectory header must start with t".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut traj = Trajectory {
            times: Vec::new(),
            states: Vec::new(),
        };
        for record in r.records() {
            let record = record.map_err(csv_error)?;
            let values = record
                .iter()
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Format(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            traj.times.push(values[0]);
            traj.states.push(values[1..].to_vec());
        }
        Ok((names, traj))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Classical RK4 with `steps` equal steps on `[0, t_end]`.
pub fn integrate(rhs: &CompiledField, x0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory> {
    check_dim("initial state", rhs.dim(), x0.len())?;
    if steps == 0 {
        return Err(Error::Argument("steps must be at least 1".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Argument("t_end must be positive and finite".into()));
    }
    let n = rhs.dim();
    let h = t_end / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    states.push(x.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 1..=steps {
        rhs.eval(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs.eval(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs.eval(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs.eval(&tmp, &mut k4);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow {
                system: "integration".into(),
                step,
                t,
            });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

pub fn integrate_field(f: &VectorField, x0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory> {
    integrate(&CompiledField::from_field(f), x0, t_end, steps)
}

pub fn integrate_linear(a: &Matrix, z0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory> {
    integrate(&CompiledField::from_matrix(a)?, z0, t_end, steps)
}

#[derive(Clone, PartialEq, Debug)]
pub struct InitialConditionReport {
    pub x0: Vec<f64>,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct VerificationReport {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub per_initial: Vec<InitialConditionReport>,
    pub t_end: f64,
    pub steps: usize,
    pub tol: f64,
    pub seed: Option<u64>,
    pub passed: bool,
}

/// Paired trajectories of `ẋ = f(x)` and of the lift from `z₀ = (x₀, p(x₀))`.
#[derive(Clone, PartialEq, Debug)]
pub struct TrajectoryPair {
    pub direct: Trajectory,
    pub lifted: Trajectory,
}

pub fn lifted_initial_state(lift: &Lift, x0: &[f64]) -> Vec<f64> {
    let mut z0 = x0.to_vec();
    z0.extend(lift.observables().eval_f64(x0));
    z0
}

/// Integrates both systems on the same grid and compares `Π_n z(t)` with
/// `x(t)`. The relative error divides by the largest state norm seen along
/// the direct trajectory (at least 1e-300). Requires the lift to pass the
/// symbolic check first.
pub fn verify_lift_numeric(
    f: &VectorField,
    lift: &Lift,
    x0s: &[Vec<f64>],
    t_end: f64,
    steps: usize,
    tol: f64,
) -> Result<(VerificationReport, Vec<TrajectoryPair>)> {
    if !check_lift_symbolic(f, lift)? {
        return Err(Error::InvalidLift);
    }
    let n = f.dim();
    let direct_rhs = CompiledField::from_field(f);
    let lifted_rhs = CompiledField::from_matrix(lift.matrix())?;
    let mut per_initial = Vec::with_capacity(x0s.len());
    let mut pairs = Vec::with_capacity(x0s.len());
    for x0 in x0s {
        check_dim("initial condition", n, x0.len())?;
        let direct = integrate(&direct_rhs, x0, t_end, steps).map_err(|e| in_system(e, "direct system", x0))?;
        let lifted = integrate(&lifted_rhs, &lifted_initial_state(lift, x0), t_end, steps)
            .map_err(|e| in_system(e, "lifted system", x0))?;
        let mut abs = 0.0f64;
        let mut scale = 0.0f64;
        for (x, z) in direct.states.iter().zip(&lifted.states) {
            for (xi, zi) in x.iter().zip(&z[..n]) {
                abs = abs.max((xi - zi).abs());
                scale = scale.max(xi.abs());
            }
        }
        let rel = abs / scale.max(1e-300);
        per_initial.push(InitialConditionReport {
            x0: x0.clone(),
            max_abs_error: abs,
            max_rel_error: rel,
        });
        pairs.push(TrajectoryPair { direct, lifted });
    }
    let max_abs_error = per_initial.iter().map(|r| r.max_abs_error).fold(0.0, f64::max);
    let max_rel_error = per_initial.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let report = VerificationReport {
        max_abs_error,
        max_rel_error,
        per_initial,
        t_end,
        steps,
        tol,
        seed: None,
        passed: max_rel_error <= tol,
    };
    Ok((report, pairs))
}

fn in_system(e: Error, system: &str, x0: &[f64]) -> Error {
    match e {
        Error::Overflow { step, t, .. } => Error::Overflow {
            system: format!("{system} from x0 = {x0:?}"),
            step,
            t,
        },
        other => other,
    }
}
