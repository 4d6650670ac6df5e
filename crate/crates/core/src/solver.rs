//! Restart driver: IRRHLB (refined harmonic), IRHLB (harmonic) and the IRLB
//! baseline (Ritz with exact shifts).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bidiag::{BidiagFactorization, Reorth};
use crate::error::{Error, Result};
use crate::extract::{
    harmonic_extract_parts, refined_extract_parts, ritz_extract_parts, Bidiagonal, HarmonicSet, RefinedSet,
};
use crate::matrix_io::SparseMatrix;
use crate::restart::{
    adaptive_filter_with, exact_shifts, harmonic_shifts, refined_harmonic_shifts_parts, relgap, sweep_parts,
    truncate_and_restart, Replacement, ShiftSet, BAD_SHIFT_RELGAP,
};
use crate::vecops::{combine, norm, scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Refined harmonic extraction with refined harmonic shifts.
    #[default]
    Irrhlb,
    /// Harmonic extraction with harmonic shifts.
    Irhlb,
    /// Ritz extraction with exact shifts.
    Irlb,
}

/// Which end of the spectrum is wanted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Target {
    #[default]
    #[serde(rename = "SS")]
    Smallest,
    #[serde(rename = "LS")]
    Largest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub k: usize,
    pub adjust: usize,
    pub m: usize,
    pub maxit: usize,
    pub tol: f64,
    pub sigma: Target,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub reorth: Reorth,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 6,
            adjust: 3,
            m: 20,
            maxit: 300,
            tol: 1e-6,
            sigma: Target::Smallest,
            seed: 42,
            algorithm: Algorithm::Irrhlb,
            reorth: Reorth::Both,
        }
    }
}

impl SolverConfig {
    pub fn k_eff(&self) -> usize {
        self.k + self.adjust
    }

    /// Check the parameters against a matrix of size `nrows × ncols`.
    pub fn validate(&self, nrows: usize, ncols: usize) -> Result<()> {
        let limit = nrows.min(ncols);
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k_eff() >= self.m {
            return Err(Error::InvalidConfig(format!(
                "k + adjust = {} must be smaller than m = {}",
                self.k_eff(),
                self.m
            )));
        }
        if self.m > limit {
            return Err(Error::InvalidConfig(format!("m = {} exceeds min(M, N) = {limit}", self.m)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive and finite, got {}", self.tol)));
        }
        if self.sigma == Target::Largest && self.algorithm != Algorithm::Irlb {
            return Err(Error::InvalidConfig(
                "sigma = LS requires algorithm = irlb; harmonic extraction targets the smallest singular values"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub value: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub residual: f64,
}

/// Events worth flagging in a restart record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFlag {
    /// A Lanczos coefficient fell below the breakdown threshold.
    Breakdown,
    /// Refined extraction failed; harmonic vectors were used.
    RefinedFallback,
    /// The refined shift pencil was not definite; harmonic shifts were used.
    ShiftFallback,
    /// `ρ_k = 0`, so the adaptive rule was skipped.
    ZeroRho,
    /// A shift came within the bad-shift gap of some `ρᵢ`, `i < k`.
    NearMiss,
}

impl TraceFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceFlag::Breakdown => "breakdown",
            TraceFlag::RefinedFallback => "refined_fallback",
            TraceFlag::ShiftFallback => "shift_fallback",
            TraceFlag::ZeroRho => "zero_rho",
            TraceFlag::NearMiss => "near_miss",
        }
    }
}

/// One extraction cycle. Cycle 0 is the initial factorization; cycle `j` follows
/// the `j`-th restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub restart: usize,
    /// Values of the `k` wanted approximations.
    pub rhos: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Shifts applied after this cycle; empty on the final one.
    pub shifts: Vec<f64>,
    pub shift_kinds: Vec<crate::restart::ShiftKind>,
    pub a_norm_est: f64,
    pub stopcrit: f64,
    pub flags: Vec<TraceFlag>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub triplets: Vec<Triplet>,
    pub converged: bool,
    pub restarts_used: usize,
    pub matvec_count: usize,
    pub matvec_transpose_count: usize,
    pub a_norm_est: f64,
    pub trace: ConvergenceTrace,
}

/// `max_{i<k} residualᵢ / ‖A‖est < tol`.
pub fn convergence_check(residuals: &[f64], a_norm_est: f64, tol: f64, k: usize) -> Result<bool> {
    Ok(stop_value(residuals, a_norm_est, k)? < tol)
}

fn stop_value(residuals: &[f64], a_norm_est: f64, k: usize) -> Result<f64> {
    if !(a_norm_est > 0.0) {
        return Err(Error::InvalidConfig(format!("norm estimate must be positive, got {a_norm_est}")));
    }
    if residuals.len() < k {
        return Err(Error::DimensionMismatch { expected: k, got: residuals.len() });
    }
    Ok(residuals[..k].iter().fold(0.0f64, |acc, r| acc.max(*r)) / a_norm_est)
}

/// Short-space approximations of one cycle, ordered from most to least wanted.
struct Extraction {
    values: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    norm_candidate: f64,
    harmonic: Option<HarmonicSet>,
    refined: Option<RefinedSet>,
    ritz: Option<crate::extract::RitzSet>,
}

fn extract(
    config: &SolverConfig,
    b: &Bidiagonal,
    beta: f64,
    flags: &mut Vec<TraceFlag>,
) -> Result<Extraction> {
    let m = b.dim();
    let k_eff = config.k_eff();
    match config.algorithm {
        Algorithm::Irlb => {
            let r = ritz_extract_parts(b, beta)?;
            let order: Vec<usize> = match config.sigma {
                Target::Smallest => (0..k_eff).collect(),
                Target::Largest => (m - k_eff..m).rev().collect(),
            };
            Ok(Extraction {
                values: order.iter().map(|&i| r.values[i]).collect(),
                left: order.iter().map(|&i| r.left.column(i)).collect(),
                right: order.iter().map(|&i| r.right.column(i)).collect(),
                residuals: order.iter().map(|&i| r.residuals[i]).collect(),
                norm_candidate: r.values[m - 1],
                harmonic: None,
                refined: None,
                ritz: Some(r),
            })
        }
        Algorithm::Irhlb | Algorithm::Irrhlb => {
            let h = harmonic_extract_parts(b, beta)?;
            let values = h.rhos[..k_eff].to_vec();
            let mut ext = Extraction {
                values: values.clone(),
                left: (0..k_eff).map(|i| h.s.column(i)).collect(),
                right: (0..k_eff).map(|i| h.w.column(i)).collect(),
                residuals: h.residuals[..k_eff].to_vec(),
                norm_candidate: h.thetas[m - 1],
                harmonic: None,
                refined: None,
                ritz: None,
            };
            if config.algorithm == Algorithm::Irrhlb {
                match refined_extract_parts(b, beta, &values) {
                    Ok(r) => {
                        ext.left = (0..k_eff).map(|i| r.x.column(i)).collect();
                        ext.right = (0..k_eff).map(|i| r.y.column(i)).collect();
                        ext.residuals = r.residuals.clone();
                        ext.refined = Some(r);
                    }
                    Err(_) => flags.push(TraceFlag::RefinedFallback),
                }
            }
            ext.harmonic = Some(h);
            Ok(ext)
        }
    }
}

fn choose_shifts(
    config: &SolverConfig,
    b: &Bidiagonal,
    beta: f64,
    ext: &Extraction,
    flags: &mut Vec<TraceFlag>,
) -> Result<ShiftSet> {
    let k_eff = config.k_eff();
    let raw = match config.algorithm {
        Algorithm::Irlb => exact_shifts(ext.ritz.as_ref().expect("ritz set"), k_eff, config.sigma),
        Algorithm::Irhlb => harmonic_shifts(ext.harmonic.as_ref().expect("harmonic set"), k_eff),
        Algorithm::Irrhlb => {
            let h = ext.harmonic.as_ref().expect("harmonic set");
            match &ext.refined {
                Some(r) => match refined_harmonic_shifts_parts(b, beta, r) {
                    Ok(s) => s,
                    Err(_) => {
                        flags.push(TraceFlag::ShiftFallback);
                        harmonic_shifts(h, k_eff)
                    }
                },
                None => {
                    flags.push(TraceFlag::ShiftFallback);
                    harmonic_shifts(h, k_eff)
                }
            }
        }
    };

    let k = config.k;
    let (rho_k, eps_k) = (ext.values[k - 1], ext.residuals[k - 1]);
    if rho_k == 0.0 {
        flags.push(TraceFlag::ZeroRho);
    }
    let near_miss = (0..k - 1).any(|i| {
        ext.values[i] != 0.0
            && raw.values.iter().any(|&mu| relgap(ext.values[i], ext.residuals[i], mu) <= BAD_SHIFT_RELGAP)
    });
    if near_miss {
        flags.push(TraceFlag::NearMiss);
    }
    let replacement = match config.sigma {
        Target::Smallest => Replacement::Largest,
        Target::Largest => Replacement::Zero,
    };
    Ok(adaptive_filter_with(&raw, rho_k, eps_k, replacement))
}

fn assemble(fact: &BidiagFactorization, ext: &Extraction, k: usize, transposed: bool) -> Vec<Triplet> {
    let p = fact.p();
    let q = fact.q();
    let (mlen, nlen) = (p[0].len(), q[0].len());
    let mut out: Vec<Triplet> = (0..k)
        .map(|i| {
            let mut u = combine(p, &ext.left[i], mlen);
            let mut v = combine(q, &ext.right[i], nlen);
            let (nu, nv) = (norm(&u), norm(&v));
            if nu > 0.0 {
                scale(1.0 / nu, &mut u);
            }
            if nv > 0.0 {
                scale(1.0 / nv, &mut v);
            }
            if transposed {
                std::mem::swap(&mut u, &mut v);
            }
            Triplet { value: ext.values[i], left: u, right: v, residual: ext.residuals[i] }
        })
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    out
}

/// Unit standard-normal starting vector from `seed`.
pub fn starting_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    v
}

/// Compute `k` extreme singular triplets of `a`.
///
/// Returns the best approximations seen (smallest stopping value) with
/// `converged = false` when `maxit` restarts are exhausted.
pub fn solve(a: &SparseMatrix, config: &SolverConfig) -> Result<SolverResult> {
    let transposed = a.nrows() < a.ncols();
    let owned;
    let a = if transposed {
        owned = a.transpose();
        &owned
    } else {
        a
    };
    config.validate(a.nrows(), a.ncols())?;

    let k = config.k;
    let k_eff = config.k_eff();
    let q1 = starting_vector(a.ncols(), config.seed);
    let mut fact = BidiagFactorization::start(a, &q1, config.reorth, config.seed.wrapping_add(1))?;
    let mut trace = ConvergenceTrace::default();
    let mut a_norm = 0.0f64;
    let mut best: Option<(f64, Vec<Triplet>)> = None;

    for restart in 0..=config.maxit {
        fact.extend(a, config.m)?;
        let b = Bidiagonal { d: fact.alphas().to_vec(), e: fact.superdiagonal().to_vec() };
        let beta = fact.beta_last();
        let mut flags = Vec::new();
        if fact.take_breakdowns() > 0 {
            flags.push(TraceFlag::Breakdown);
        }

        let ext = extract(config, &b, beta, &mut flags)?;
        a_norm = a_norm.max(ext.norm_candidate);
        fact.raise_norm_estimate(a_norm);
        let stopcrit = stop_value(&ext.residuals, a_norm, k)?;
        let converged = stopcrit < config.tol;

        if best.as_ref().is_none_or(|(s, _)| stopcrit < *s) || converged {
            best = Some((stopcrit, assemble(&fact, &ext, k, transposed)));
        }

        let shifts = if converged || restart == config.maxit {
            ShiftSet::default()
        } else {
            choose_shifts(config, &b, beta, &ext, &mut flags)?
        };
        trace.records.push(TraceRecord {
            restart,
            rhos: ext.values[..k].to_vec(),
            residuals: ext.residuals[..k].to_vec(),
            shifts: shifts.values.clone(),
            shift_kinds: shifts.kinds.clone(),
            a_norm_est: a_norm,
            stopcrit,
            flags,
        });

        if converged || restart == config.maxit {
            let (matvec_count, matvec_transpose_count) = fact.matvec_counts();
            let mut triplets = best.map(|(_, t)| t).unwrap_or_default();
            if config.sigma == Target::Largest {
                triplets.reverse();
            }
            return Ok(SolverResult {
                triplets,
                converged,
                restarts_used: restart,
                matvec_count,
                matvec_transpose_count,
                a_norm_est: a_norm,
                trace,
            });
        }

        let sweep = sweep_parts(&b, &shifts)?;
        fact = truncate_and_restart(&fact, &sweep, k_eff)?;
    }
    unreachable!("the loop returns on its last iteration")
}
