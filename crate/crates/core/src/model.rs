//! Analytic time and memory models, and their calibration from measurements.
//!
//! Times are in seconds with `P′ = min(P, m)` cores doing useful work:
//!
//! * bubble: `c_comp·n²/(m·P′) + overhead`
//! * merge and quick: `c_comp·(2n/P′)·log2(n/m) + overhead`
//!
//! where `overhead = m·c_init + m·(c_msg + (n/m)·c_byte)` and the
//! communication part vanishes for a single process. Every model is linear in
//! the four parameters, so calibration is a non-negative least-squares fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::AlgorithmId;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    /// Seconds per unit of comparison work.
    pub c_comp: f64,
    /// Seconds of start-up cost per process.
    pub c_init: f64,
    /// Seconds per exchanged message.
    pub c_msg: f64,
    /// Seconds per transferred element.
    pub c_byte: f64,
}

impl ModelParams {
    pub fn to_array(self) -> [f64; 4] {
        [self.c_comp, self.c_init, self.c_msg, self.c_byte]
    }

    pub fn from_array([c_comp, c_init, c_msg, c_byte]: [f64; 4]) -> Self {
        ModelParams {
            c_comp,
            c_init,
            c_msg,
            c_byte,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Param::ALL.iter().zip(self.to_array()) {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{} must be finite and non-negative, got {v}", name.name())));
            }
        }
        Ok(())
    }
}

/// Fixed terms of the memory model, in elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryConstants {
    /// Constant slack on top of every algorithm's footprint.
    pub c0: u64,
    /// Elements per quick-sort recursion level.
    pub c1: u64,
}

impl Default for MemoryConstants {
    fn default() -> Self {
        MemoryConstants { c0: 64, c1: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub t_model: f64,
    pub mem_model: u64,
}

/// The coefficient of each parameter in a time prediction.
pub fn features(algorithm: AlgorithmId, n: usize, m: usize, p: usize) -> [f64; 4] {
    assert!(m >= 1 && p >= 1, "models need m >= 1 and P >= 1");
    let nf = n as f64;
    let mf = m as f64;
    let eff = p.min(m) as f64;
    let work = match algorithm {
        AlgorithmId::Bubble => nf * nf / (mf * eff),
        AlgorithmId::Merge | AlgorithmId::Quick => {
            let per = nf / mf;
            let log = if per < 1.0 { 0.0 } else { per.log2() };
            2.0 * nf / eff * log
        }
    };
    let (msg, byte) = if m > 1 { (mf, nf) } else { (0.0, 0.0) };
    [work, mf, msg, byte]
}

fn dot(f: [f64; 4], params: &ModelParams) -> f64 {
    f.iter().zip(params.to_array()).map(|(a, b)| a * b).sum()
}

pub fn bubble_time(n: usize, m: usize, p: usize, params: &ModelParams) -> f64 {
    dot(features(AlgorithmId::Bubble, n, m, p), params)
}

/// Shared by merge and quick sort.
pub fn nlogn_time(n: usize, m: usize, p: usize, params: &ModelParams) -> f64 {
    dot(features(AlgorithmId::Merge, n, m, p), params)
}

pub fn time_model(algorithm: AlgorithmId, n: usize, m: usize, p: usize, params: &ModelParams) -> f64 {
    match algorithm {
        AlgorithmId::Bubble => bubble_time(n, m, p, params),
        AlgorithmId::Merge | AlgorithmId::Quick => nlogn_time(n, m, p, params),
    }
}

pub fn memory_model(algorithm: AlgorithmId, n: usize, k: &MemoryConstants) -> u64 {
    let n = n as u64;
    match algorithm {
        AlgorithmId::Bubble => n + k.c0,
        AlgorithmId::Merge => 2 * n + k.c0,
        AlgorithmId::Quick => n + k.c1 * ceil_log2(n) + k.c0,
    }
}

pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

pub fn model_point(
    algorithm: AlgorithmId,
    n: usize,
    m: usize,
    p: usize,
    params: &ModelParams,
    k: &MemoryConstants,
) -> ModelPoint {
    ModelPoint {
        n,
        m,
        p,
        t_model: time_model(algorithm, n, m, p, params),
        mem_model: memory_model(algorithm, n, k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Comp,
    Init,
    Msg,
    Byte,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::Comp, Param::Init, Param::Msg, Param::Byte];

    pub fn name(self) -> &'static str {
        match self {
            Param::Comp => "c_comp",
            Param::Init => "c_init",
            Param::Msg => "c_msg",
            Param::Byte => "c_byte",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub params: ModelParams,
    /// `(model − measured) / measured` for each measurement, in input order.
    pub relative_residuals: Vec<f64>,
}

impl Calibration {
    pub fn rms_relative_residual(&self) -> f64 {
        let r = &self.relative_residuals;
        if r.is_empty() {
            return 0.0;
        }
        (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
    }
}

/// Least-squares fit of [`ModelParams`], optionally with some parameters
/// pinned to given values.
#[derive(Debug, Clone)]
pub struct Calibrator {
    algorithm: AlgorithmId,
    fixed: [Option<f64>; 4],
}

impl Calibrator {
    pub fn new(algorithm: AlgorithmId) -> Self {
        Calibrator {
            algorithm,
            fixed: [None; 4],
        }
    }

    pub fn fix(mut self, param: Param, value: f64) -> Self {
        self.fixed[param as usize] = Some(value);
        self
    }

    fn free(&self) -> Vec<usize> {
        (0..4).filter(|&i| self.fixed[i].is_none()).collect()
    }

    /// Fits the free parameters, constrained to be non-negative.
    pub fn fit(&self, data: &[Measurement]) -> Result<Calibration> {
        for &v in self.fixed.iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("fixed parameter value {v} is not a non-negative number")));
            }
        }
        for d in data {
            if d.m == 0 || d.p == 0 || !d.seconds.is_finite() || d.seconds < 0.0 {
                return Err(Error::config(format!("invalid measurement {d:?}")));
            }
        }
        let free = self.free();
        let missing = self.missing(data, &free);
        if !missing.is_empty() {
            return Err(Error::SingularFit { missing });
        }

        let rows: Vec<[f64; 4]> = data
            .iter()
            .map(|d| features(self.algorithm, d.n, d.m, d.p))
            .collect();
        let target: Vec<f64> = rows
            .iter()
            .zip(data)
            .map(|(f, d)| {
                let pinned: f64 = (0..4).filter_map(|i| self.fixed[i].map(|v| v * f[i])).sum();
                d.seconds - pinned
            })
            .collect();

        // scale columns to unit norm so n² and m live on comparable ranges
        let scale: Vec<f64> = free
            .iter()
            .map(|&j| rows.iter().map(|f| f[j] * f[j]).sum::<f64>().sqrt())
            .collect();
        let singular = || Error::SingularFit {
            missing: vec!["measurements whose (n, m, P) configurations vary independently".into()],
        };
        if scale.contains(&0.0) {
            return Err(singular());
        }
        // relative least squares: each row weighted by 1 / measured time
        let weight: Vec<f64> = data
            .iter()
            .map(|d| if d.seconds > 0.0 { 1.0 / d.seconds } else { 1.0 })
            .collect();
        let a = DMatrix::from_fn(data.len(), free.len(), |i, k| weight[i] * rows[i][free[k]] / scale[k]);
        let b = DVector::from_iterator(data.len(), target.iter().zip(&weight).map(|(t, w)| t * w));
        if !free.is_empty() && a.clone().svd(false, false).rank(1e-12 * a.norm()) < free.len() {
            return Err(singular());
        }

        let solution = nnls_by_subsets(&a, &b);
        let mut values = self.fixed.map(|v| v.unwrap_or(0.0));
        for (k, &j) in free.iter().enumerate() {
            values[j] = solution[k] / scale[k];
        }
        let params = ModelParams::from_array(values);
        let relative_residuals = rows
            .iter()
            .zip(data)
            .map(|(f, d)| {
                let r = dot(*f, &params) - d.seconds;
                if d.seconds > 0.0 {
                    r / d.seconds
                } else {
                    r
                }
            })
            .collect();
        Ok(Calibration {
            params,
            relative_residuals,
        })
    }

    /// Configurations the data lacks for the free parameters to be identifiable.
    fn missing(&self, data: &[Measurement], free: &[usize]) -> Vec<String> {
        let mut missing = Vec::new();
        if !data.iter().any(|d| d.m == 1 && d.p == 1) {
            missing.push("a sequential run (m=1, P=1)".to_string());
        }
        let need = if free.len() == 4 { 4 } else { free.len() };
        if data.len() < need {
            missing.push(format!("at least {need} measurements (got {})", data.len()));
        }
        let parallel: Vec<&Measurement> = data.iter().filter(|d| d.m > 1).collect();
        let wants_comm = free.contains(&(Param::Msg as usize)) || free.contains(&(Param::Byte as usize));
        if wants_comm && parallel.is_empty() {
            missing.push("a run with m > 1".to_string());
        }
        if free.contains(&(Param::Msg as usize)) && free.contains(&(Param::Byte as usize)) && !parallel.is_empty() {
            let (m0, n0) = (parallel[0].m as f64, parallel[0].n as f64);
            if parallel.iter().all(|d| (d.m as f64) * n0 == (d.n as f64) * m0) {
                missing.push("parallel runs whose n/m ratios differ".to_string());
            }
        }
        if free.contains(&(Param::Init as usize)) && free.contains(&(Param::Comp as usize)) {
            let seq: Vec<&Measurement> = data.iter().filter(|d| d.m == 1).collect();
            let distinct_n = seq.iter().any(|d| d.n != seq[0].n);
            if !distinct_n && parallel.is_empty() {
                missing.push("sequential runs at two sizes, or a run with m > 1".to_string());
            }
        }
        missing
    }
}

pub fn calibrate(algorithm: AlgorithmId, data: &[Measurement]) -> Result<Calibration> {
    Calibrator::new(algorithm).fit(data)
}

/// Non-negative least squares for a handful of columns: the best feasible
/// unconstrained solution over every subset of active columns.
fn nnls_by_subsets(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let k = a.ncols();
    let mut best = vec![0.0; k];
    let mut best_ssr = b.norm_squared();
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, c| a[(i, cols[c])]);
        let Ok(x) = sub.clone().svd(true, true).solve(b, 1e-14) else {
            continue;
        };
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let ssr = (&sub * &x - b).norm_squared();
        if ssr < best_ssr * (1.0 - 1e-12) || (ssr <= best_ssr && cols.len() > best.iter().filter(|v| **v > 0.0).count()) {
            best_ssr = ssr;
            best = vec![0.0; k];
            for (c, &j) in cols.iter().enumerate() {
                best[j] = x[c];
            }
        }
    }
    best
}
