use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::HVector;

pub const CSV_HEADER: [&str; 6] = ["t", "g", "g_theory", "vdot_norm", "vdot_bound", "step_size"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualTolReached,
    MaxTimeReached,
    StepUnderflow,
    SolverError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ResidualTolReached => "residual_tol_reached",
            Termination::MaxTimeReached => "max_time_reached",
            Termination::StepUnderflow => "step_underflow",
            Termination::SolverError => "solver_error",
        }
    }
}

/// Relative agreement required between stored and recomputed theory columns
/// when a trace is read back.
const THEORY_COLUMN_TOL: f64 = 1e-12;

/// One accepted step of the flow. `g_theory = g0 e^{-t}` and
/// `vdot_bound = (g0 / a) e^{-t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub g: f64,
    pub g_theory: f64,
    pub vdot_norm: f64,
    pub vdot_bound: f64,
    pub step_size: f64,
}

/// Time series of a single flow run at fixed `a`.
///
/// `states[i]` is `v(records[i].t)` when the trace came from the integrator;
/// traces read back from CSV carry no states.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub a: f64,
    pub g0: f64,
    pub ode_rel_tol: f64,
    pub records: Vec<TraceRecord>,
    pub states: Vec<HVector>,
    pub terminated_by: Termination,
}

impl FlowTrace {
    pub(crate) fn start(a: f64, g0: f64, ode_rel_tol: f64) -> Self {
        Self { a, g0, ode_rel_tol, records: Vec::new(), states: Vec::new(), terminated_by: Termination::MaxTimeReached }
    }

    pub fn g_theory(&self, t: f64) -> f64 {
        self.g0 * (-t).exp()
    }

    pub fn vdot_bound(&self, t: f64) -> f64 {
        self.g0 / self.a * (-t).exp()
    }

    pub(crate) fn push(&mut self, t: f64, g: f64, vdot_norm: f64, step_size: f64, state: HVector) {
        self.push_record(t, g, vdot_norm, step_size);
        self.states.push(state);
    }

    fn push_record(&mut self, t: f64, g: f64, vdot_norm: f64, step_size: f64) {
        self.records.push(TraceRecord {
            t,
            g,
            g_theory: self.g_theory(t),
            vdot_norm,
            vdot_bound: self.vdot_bound(t),
            step_size,
        });
    }

    /// Builds a stateless trace from raw `(t, g, vdot_norm, step_size)`
    /// samples, recomputing the theoretical columns.
    pub fn from_samples(
        a: f64,
        g0: f64,
        ode_rel_tol: f64,
        samples: impl IntoIterator<Item = (f64, f64, f64, f64)>,
        terminated_by: Termination,
    ) -> Self {
        let mut trace = Self::start(a, g0, ode_rel_tol);
        for (t, g, vdot, step) in samples {
            trace.push_record(t, g, vdot, step);
        }
        trace.terminated_by = terminated_by;
        trace
    }

    pub fn t_end(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    /// Number of accepted steps (records after the initial one).
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// First time at which `g` falls to `fraction * g0`, by log-linear
    /// interpolation between records.
    pub fn crossing_time(&self, fraction: f64) -> Option<f64> {
        let target = fraction * self.g0;
        self.records.windows(2).find_map(|w| {
            let (r0, r1) = (w[0], w[1]);
            (r0.g > target && r1.g <= target && r1.g > 0.0).then(|| {
                let s = (r0.g / target).ln() / (r0.g / r1.g).ln();
                r0.t + s * (r1.t - r0.t)
            })
        })
    }

    /// Writes the trace with header `t,g,g_theory,vdot_norm,vdot_bound,step_size`,
    /// every value with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::TraceFormat(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.records {
            let row = [r.t, r.g, r.g_theory, r.vdot_norm, r.vdot_bound, r.step_size];
            w.write_record(row.iter().map(|x| format!("{x:.16e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::TraceFormat(e.to_string()))
    }

    /// Reads a trace written by [`FlowTrace::write_csv`].
    ///
    /// `g0` is taken from the first row and `a` from `g0 / vdot_bound` there;
    /// the theory columns are recomputed and must agree with the stored ones
    /// to a relative `1e-12`. The termination is inferred as
    /// residual-tolerance.
    pub fn read_csv<R: Read>(input: R, ode_rel_tol: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let fmt = |e: csv::Error| Error::TraceFormat(e.to_string());
        let header = rd.headers().map_err(fmt)?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::TraceFormat(format!("unexpected header {:?}", header)));
        }
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(fmt)?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::TraceFormat(format!("row {}: {e}", i + 1)))?;
            rows.push(vals);
        }
        let first = rows.first().ok_or_else(|| Error::TraceFormat("empty trace".into()))?;
        if first[0] != 0.0 {
            return Err(Error::TraceFormat("first record must be at t = 0".into()));
        }
        let g0 = first[1];
        let a = if first[4] > 0.0 { g0 / first[4] } else { f64::NAN };
        if !(a > 0.0) {
            return Err(Error::TraceFormat("cannot recover a from the first row".into()));
        }
        let samples = rows.iter().map(|r| (r[0], r[1], r[3], r[5]));
        let trace = Self::from_samples(a, g0, ode_rel_tol, samples, Termination::ResidualTolReached);
        for (i, (row, rec)) in rows.iter().zip(&trace.records).enumerate() {
            if i > 0 && !(row[0] > rows[i - 1][0]) {
                return Err(Error::TraceFormat(format!("row {}: time does not increase", i + 1)));
            }
            for (name, stored, expected) in [("g_theory", row[2], rec.g_theory), ("vdot_bound", row[4], rec.vdot_bound)]
            {
                if (stored - expected).abs() > THEORY_COLUMN_TOL * expected.abs() {
                    return Err(Error::TraceFormat(format!(
                        "row {}: stored {name} {stored:e} disagrees with recomputed {expected:e}",
                        i + 1
                    )));
                }
            }
        }
        Ok(trace)
    }
}
