//! Best affine approximation on finite samples (the oracle every certificate
//! in the crate is validated against).
//!
//! Scalar data and `l_inf`-valued data are solved exactly by linear
//! programming.  Three collinear samples are solved exactly in closed form
//! for *any* codomain norm (the optimum is half the midpoint deviation).
//! Remaining vector cases fall back to exact coordinate-wise fits and report
//! both the achieved error of the returned map and a certified lower bound
//! for the true optimum, together with the norm-equivalence slack factor.

use crate::simplex::minimax_affine;
use crate::space::{Exponent, NormedSpace};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on sample count accepted by the fitting routines.
pub const SAMPLE_CAP: usize = 20_000;

/// `x -> linear * x + offset` with `linear` stored row-major
/// (`out_dim x in_dim`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.linear
            .iter()
            .zip(&self.offset)
            .map(|(row, &o)| o + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn in_dim(&self) -> usize {
        self.linear.first().map_or(0, Vec::len)
    }

    pub fn out_dim(&self) -> usize {
        self.offset.len()
    }
}

/// Outcome of a minimax fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub map: AffineMap,
    /// Error of `map` on the samples in the codomain norm, recomputed after
    /// the solve (never trusted from the optimizer).
    pub error: f64,
    /// Certified lower bound for the optimal minimax error on these samples.
    /// Equals `error` when the solve is exact.
    pub lower_bound: f64,
    /// Number of samples attaining `error` within `1e-9`.
    pub active_count: usize,
    /// Whether the fit is provably optimal for the requested codomain norm.
    pub exact: bool,
    /// Upper/lower norm-equivalence factor between the reported fit and the
    /// true optimum (`1` for exact solves).
    pub slack: f64,
}

/// Best affine approximation of `samples = [(x_i, f(x_i))]` in the minimax
/// sense with respect to `codomain`'s norm.
///
/// The returned `error` is always the exact sampled error of the returned
/// map, hence a certified lower bound for the continuum minimax error over
/// any superset of the samples.
pub fn minimax_affine_fit(
    samples: &[(Vec<f64>, Vec<f64>)],
    codomain: &NormedSpace,
) -> Result<FitResult> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.len() > SAMPLE_CAP {
        return Err(Error::BudgetCap(samples.len(), SAMPLE_CAP));
    }
    let out_dim = codomain.dim;
    for (_, y) in samples {
        if y.len() != out_dim {
            return Err(Error::DimMismatch { expected: out_dim, got: y.len() });
        }
    }
    let exact_class = out_dim == 1 || codomain.p == Exponent::Infinity;
    if !exact_class {
        if let Some(fit) = three_collinear_fit(samples, codomain)? {
            return Ok(fit);
        }
    }
    // Exact coordinate-wise solves (optimal for scalar and l_inf codomains).
    let xs: Vec<Vec<f64>> = samples.iter().map(|(x, _)| x.clone()).collect();
    let mut linear = Vec::with_capacity(out_dim);
    let mut offset = Vec::with_capacity(out_dim);
    let mut coord_err = 0.0f64;
    for j in 0..out_dim {
        let ys: Vec<f64> = samples.iter().map(|(_, y)| y[j]).collect();
        let sol = minimax_affine(&xs, &ys)?;
        coord_err = coord_err.max(sol.error);
        linear.push(sol.a);
        offset.push(sol.b);
    }
    let map = AffineMap { linear, offset };
    let (error, active_count) = recompute_error(&map, samples, codomain)?;
    let (lower_bound, slack) = if exact_class {
        (error, 1.0)
    } else {
        // True optimum sits between the best single coordinate and the
        // achieved error; the gap is controlled by dim^{1/p}.
        let s = match codomain.p {
            Exponent::Finite(p) => (out_dim as f64).powf(1.0 / p),
            Exponent::Infinity => 1.0,
        };
        (coord_err, s)
    };
    Ok(FitResult { map, error, lower_bound, active_count, exact: exact_class, slack })
}

/// Exact sampled error of `map` plus the count of samples within `1e-9` of
/// attaining it.
pub fn recompute_error(
    map: &AffineMap,
    samples: &[(Vec<f64>, Vec<f64>)],
    codomain: &NormedSpace,
) -> Result<(f64, usize)> {
    let mut errs = Vec::with_capacity(samples.len());
    for (x, y) in samples {
        let a = map.eval(x);
        let r: Vec<f64> = a.iter().zip(y).map(|(u, v)| u - v).collect();
        errs.push(codomain.norm(&r)?);
    }
    let error = errs.iter().fold(0.0f64, |m, &e| m.max(e));
    let active = errs.iter().filter(|&&e| e >= error - 1e-9).count();
    Ok((error, active))
}

/// Exact minimax fit for exactly three distinct collinear sample points in
/// any codomain norm: the optimum is half the norm of the deviation of the
/// middle value from the chord, attained by shifting the chord by half the
/// deviation vector.
fn three_collinear_fit(
    samples: &[(Vec<f64>, Vec<f64>)],
    codomain: &NormedSpace,
) -> Result<Option<FitResult>> {
    if samples.len() != 3 {
        return Ok(None);
    }
    let d = samples[0].0.len();
    let diff = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(a, b)| a - b).collect() };
    let u = diff(&samples[1].0, &samples[0].0);
    let v = diff(&samples[2].0, &samples[0].0);
    let nu = u.iter().map(|t| t * t).sum::<f64>().sqrt();
    let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if nu < 1e-14 || nv < 1e-14 {
        return Ok(None);
    }
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let cross2 = (nu * nv).powi(2) - dot * dot;
    if cross2.abs() > 1e-12 * (nu * nv).powi(2) {
        return Ok(None); // not collinear
    }
    // Parameterize the line by t(x) = <v, x - x0> / |v|^2, order the points.
    let mut pts: Vec<(f64, &Vec<f64>, &Vec<f64>)> = samples
        .iter()
        .map(|(x, y)| {
            let t: f64 = v.iter().zip(diff(x, &samples[0].0).iter()).map(|(a, b)| a * b).sum::<f64>() / (nv * nv);
            (t, x, y)
        })
        .collect();
    pts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let (ta, _, fa) = (pts[0].0, pts[0].1, pts[0].2);
    let (tb, _, fb) = (pts[1].0, pts[1].1, pts[1].2);
    let (tc, _, fc) = (pts[2].0, pts[2].1, pts[2].2);
    if tc - ta < 1e-14 || tb - ta < 1e-15 || tc - tb < 1e-15 {
        return Ok(None); // coincident points
    }
    let wa = (tc - tb) / (tc - ta);
    let wc = (tb - ta) / (tc - ta);
    let out_dim = fa.len();
    let deviation: Vec<f64> = (0..out_dim).map(|j| fb[j] - wa * fa[j] - wc * fc[j]).collect();
    let dev_norm = codomain.norm(&deviation)?;
    // A(x) = chord(t(x)) + deviation/2 in ambient coordinates.
    let slope: Vec<f64> = (0..out_dim).map(|j| (fc[j] - fa[j]) / (tc - ta)).collect();
    let x0 = &samples[0].0;
    let mut linear = vec![vec![0.0; d]; out_dim];
    let mut offset = vec![0.0; out_dim];
    for j in 0..out_dim {
        for i in 0..d {
            linear[j][i] = slope[j] * v[i] / (nv * nv);
        }
        let t_x0: f64 = 0.0;
        offset[j] = fa[j] + slope[j] * (t_x0 - ta) + 0.5 * deviation[j]
            - linear[j].iter().zip(x0.iter()).map(|(a, b)| a * b).sum::<f64>();
    }
    let map = AffineMap { linear, offset };
    let (error, active_count) = recompute_error(&map, samples, codomain)?;
    Ok(Some(FitResult {
        map,
        error,
        lower_bound: 0.5 * dev_norm,
        active_count,
        exact: true,
        slack: 1.0,
    }))
}
