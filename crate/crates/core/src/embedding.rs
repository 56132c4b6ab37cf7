//! Gaussian random-matrix embeddings `R^k -> (R^n, |.|_{w,p})` and
//! empirical distortion.
//!
//! The distortion is measured over finitely many test directions, so the
//! reported maximum is a lower bound on the true supremum over the sphere.
//! A short geodesic ascent/descent from the extreme sampled directions
//! tightens it.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norms::{pow_abs, LorentzParams};
use crate::stream::RandomStream;

/// An `n x k` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMatrix {
    n: usize,
    k: usize,
    entries: Vec<f64>,
    seed_info: Option<RandomStream>,
}

impl GaussianMatrix {
    /// I.i.d. standard normal entries drawn column by column from `stream`,
    /// so the first `j` columns do not depend on `k`.
    pub fn sample(n: usize, k: usize, stream: RandomStream) -> Result<Self> {
        check_shape(n, k)?;
        let mut rng = stream.rng();
        let mut entries = vec![0.0; n * k];
        for j in 0..k {
            for i in 0..n {
                entries[i * k + j] = rng.sample(StandardNormal);
            }
        }
        Ok(GaussianMatrix { n, k, entries, seed_info: Some(stream) })
    }

    /// Deterministic override, for fixtures.
    pub fn from_entries(n: usize, k: usize, entries: Vec<f64>) -> Result<Self> {
        check_shape(n, k)?;
        if entries.len() != n * k {
            return Err(Error::DimensionMismatch { expected: n * k, got: entries.len() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(GaussianMatrix { n, k, entries, seed_info: None })
    }

    /// The injection onto the first `k` coordinates.
    pub fn canonical_injection(n: usize, k: usize) -> Result<Self> {
        check_shape(n, k)?;
        let mut entries = vec![0.0; n * k];
        for j in 0..k {
            entries[j * k + j] = 1.0;
        }
        Ok(GaussianMatrix { n, k, entries, seed_info: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn seed_info(&self) -> Option<RandomStream> {
        self.seed_info
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.entries[i * self.k + j]).collect()
    }

    /// The submatrix of the first `k` columns; nested matrices share entries.
    pub fn first_columns(&self, k: usize) -> Result<Self> {
        check_shape(self.n, k)?;
        if k > self.k {
            return Err(invalid(format!("requested {k} columns of a matrix with {}", self.k)));
        }
        let mut entries = Vec::with_capacity(self.n * k);
        for row in self.entries.chunks_exact(self.k) {
            entries.extend_from_slice(&row[..k]);
        }
        Ok(GaussianMatrix { n: self.n, k, entries, seed_info: self.seed_info })
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.entries.chunks_exact(self.k)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn matvec_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (yi, row) in y.iter().zip(self.entries.chunks_exact(self.k)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }

    /// `Y = Theta G^T` for `rows` directions stored row-major in `theta`.
    fn apply_batch(&self, theta: &[f64], rows: usize, out: &mut [f64]) {
        debug_assert_eq!(theta.len(), rows * self.k);
        debug_assert_eq!(out.len(), rows * self.n);
        // SAFETY: the slices have exactly the extents described by the
        // dimensions and strides passed below.
        unsafe {
            matrixmultiply::dgemm(
                rows,
                self.k,
                self.n,
                1.0,
                theta.as_ptr(),
                self.k as isize,
                1,
                self.entries.as_ptr(),
                1,
                self.k as isize,
                0.0,
                out.as_mut_ptr(),
                self.n as isize,
                1,
            );
        }
    }
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > n {
        return Err(invalid(format!(
            "k = {k} exceeds n = {n}: the embedding goes from R^k into R^n"
        )));
    }
    Ok(())
}

pub fn sample_gaussian_matrix(n: usize, k: usize, stream: RandomStream) -> Result<GaussianMatrix> {
    GaussianMatrix::sample(n, k, stream)
}

/// `G x`.
pub fn embed(g: &GaussianMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != g.k {
        return Err(Error::DimensionMismatch { expected: g.k, got: x.len() });
    }
    let mut out = vec![0.0; g.n];
    g.matvec(x, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    RandomSphere,
    Grid2d,
}

impl std::str::FromStr for TestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_sphere" => Ok(TestMode::RandomSphere),
            "grid2d" => Ok(TestMode::Grid2d),
            _ => Err(invalid(format!("unknown test mode {s:?}; expected random_sphere or grid2d"))),
        }
    }
}

/// Unit vectors in `R^k`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDirections {
    mode: TestMode,
    k: usize,
    data: Vec<f64>,
}

impl TestDirections {
    pub fn mode(&self) -> TestMode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    /// Wraps caller-supplied directions, checking they are unit vectors.
    pub fn from_vectors(k: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if k == 0 || vectors.is_empty() {
            return Err(Error::Empty("directions"));
        }
        let mut data = Vec::with_capacity(k * vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: v.len() });
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(invalid(format!("direction {i} has norm {norm}, expected 1")));
            }
            data.extend_from_slice(v);
        }
        Ok(TestDirections { mode: TestMode::RandomSphere, k, data })
    }
}

/// `count` unit vectors: normalized Gaussians, or a uniform angular grid when `k = 2`.
pub fn test_directions(k: usize, count: usize, mode: TestMode, stream: RandomStream) -> Result<TestDirections> {
    if count == 0 {
        return Err(invalid("need at least one test direction"));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let mut data = Vec::with_capacity(k * count);
    match mode {
        TestMode::Grid2d => {
            if k != 2 {
                return Err(invalid(format!("grid2d directions need k = 2, got k = {k}")));
            }
            for j in 0..count {
                let a = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                data.push(a.cos());
                data.push(a.sin());
            }
        }
        TestMode::RandomSphere => {
            let mut rng = stream.rng();
            let mut v = vec![0.0; k];
            while data.len() < k * count {
                v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    data.extend(v.iter().map(|x| x / norm));
                }
            }
        }
    }
    Ok(TestDirections { mode, k, data })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionRecord {
    pub direction_index: usize,
    pub norm_value: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationQuantiles {
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    #[serde(rename = "M_used")]
    pub m_used: f64,
    /// Largest relative deviation found, sampled or refined.
    pub max_rel_dev: f64,
    pub sampled_max_rel_dev: f64,
    pub refined_max_rel_dev: Option<f64>,
    pub min_norm: f64,
    pub max_norm: f64,
    /// Nearest-rank quantiles of the sampled per-direction deviations.
    pub quantiles: DeviationQuantiles,
    pub direction_count: usize,
    pub test_mode: TestMode,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_direction: Vec<DirectionRecord>,
}

impl DistortionReport {
    /// One row per direction: `direction_index,norm_value,rel_dev`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("direction_index,norm_value,rel_dev\n");
        for r in &self.per_direction {
            s.push_str(&format!("{},{},{}\n", r.direction_index, r.norm_value, r.rel_dev));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionOptions {
    /// Run the geodesic refinement from the extreme sampled directions.
    pub refine: bool,
    /// Starting points per side (largest and smallest norms).
    pub refine_seeds: usize,
    pub refine_iters: usize,
    pub keep_per_direction: bool,
}

impl Default for DistortionOptions {
    fn default() -> Self {
        DistortionOptions { refine: true, refine_seeds: 4, refine_iters: 40, keep_per_direction: true }
    }
}

const BATCH: usize = 256;

/// Norms `|G theta|_{w,p}` for every direction, in order.
pub fn direction_norms(g: &GaussianMatrix, params: &LorentzParams, dirs: &TestDirections) -> Result<Vec<f64>> {
    if dirs.k() != g.k {
        return Err(Error::DimensionMismatch { expected: g.k, got: dirs.k() });
    }
    if params.n() != g.n {
        return Err(Error::DimensionMismatch { expected: g.n, got: params.n() });
    }
    let n = g.n;
    let chunks: Vec<Vec<f64>> = dirs
        .data
        .par_chunks(BATCH * g.k)
        .map(|theta| {
            let rows = theta.len() / g.k;
            let mut y = vec![0.0; rows * n];
            g.apply_batch(theta, rows, &mut y);
            let mut scratch = Vec::with_capacity(n);
            y.chunks_exact(n).map(|row| params.norm_unchecked(row, &mut scratch)).collect()
        })
        .collect();
    Ok(chunks.concat())
}

pub fn measure_distortion(g: &GaussianMatrix, params: &LorentzParams, m: f64, dirs: &TestDirections) -> Result<DistortionReport> {
    measure_distortion_with(g, params, m, dirs, &DistortionOptions::default())
}

pub fn measure_distortion_with(
    g: &GaussianMatrix,
    params: &LorentzParams,
    m: f64,
    dirs: &TestDirections,
    opts: &DistortionOptions,
) -> Result<DistortionReport> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid(format!("M must be positive and finite, got {m}")));
    }
    let norms = direction_norms(g, params, dirs)?;
    let devs: Vec<f64> = norms.iter().map(|v| (v / m - 1.0).abs()).collect();
    let sampled_max = devs.iter().cloned().fold(0.0, f64::max);
    let mut min_norm = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut max_norm = norms.iter().cloned().fold(0.0, f64::max);

    let refined = if opts.refine && g.k > 1 && opts.refine_seeds > 0 {
        let mut order: Vec<usize> = (0..norms.len()).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        let s = opts.refine_seeds.min(order.len());
        let starts: Vec<(usize, bool)> = order[..s]
            .iter()
            .map(|&i| (i, true))
            .chain(order[order.len() - s..].iter().map(|&i| (i, false)))
            .collect();
        let found: Vec<(bool, f64)> = starts
            .par_iter()
            .map(|&(i, up)| (up, geodesic_search(g, params, dirs.get(i), up, opts.refine_iters)))
            .collect();
        for (up, v) in found {
            if up {
                max_norm = max_norm.max(v);
            } else {
                min_norm = min_norm.min(v);
            }
        }
        Some((max_norm / m - 1.0).abs().max((min_norm / m - 1.0).abs()))
    } else {
        None
    };

    let mut sorted = devs.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |f: f64| sorted[((f * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
    let quantiles = DeviationQuantiles { q50: q(0.5), q90: q(0.9), q99: q(0.99) };
    let per_direction = if opts.keep_per_direction {
        norms
            .iter()
            .zip(&devs)
            .enumerate()
            .map(|(i, (&v, &d))| DirectionRecord { direction_index: i, norm_value: v, rel_dev: d })
            .collect()
    } else {
        Vec::new()
    };
    Ok(DistortionReport {
        m_used: m,
        max_rel_dev: refined.map_or(sampled_max, |r| r.max(sampled_max)),
        sampled_max_rel_dev: sampled_max,
        refined_max_rel_dev: refined,
        min_norm,
        max_norm,
        quantiles,
        direction_count: norms.len(),
        test_mode: dirs.mode(),
        per_direction,
    })
}

/// `grad |y|_{w,p}`, assuming `norm = |y|_{w,p} > 0`.
fn norm_gradient(params: &LorentzParams, y: &[f64], norm: f64, order: &mut Vec<usize>, out: &mut [f64]) {
    let p = params.p();
    let w = params.weights();
    let term = |v: f64| v.signum() * pow_abs(v.abs() / norm, p - 1.0);
    if w.iter().all(|&x| x == 1.0) {
        for (o, &v) in out.iter_mut().zip(y) {
            *o = term(v);
        }
        return;
    }
    order.clear();
    order.extend(0..y.len());
    order.sort_unstable_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()));
    for (rank, &j) in order.iter().enumerate() {
        out[j] = w[rank] * term(y[j]);
    }
}

/// Projected gradient ascent (or descent) of `|G theta|` along great circles.
fn geodesic_search(g: &GaussianMatrix, params: &LorentzParams, start: &[f64], up: bool, iters: usize) -> f64 {
    let (n, k) = (g.n, g.k);
    let mut theta = start.to_vec();
    let mut y = vec![0.0; n];
    let mut scratch = Vec::with_capacity(n);
    let mut order = Vec::new();
    let mut grad_y = vec![0.0; n];
    let mut u = vec![0.0; k];
    let mut cand = vec![0.0; k];
    g.matvec(&theta, &mut y);
    let mut val = params.norm_unchecked(&y, &mut scratch);
    if val == 0.0 {
        return val;
    }
    let sign = if up { 1.0 } else { -1.0 };
    let mut alpha: f64 = 0.3;
    for _ in 0..iters {
        norm_gradient(params, &y, val, &mut order, &mut grad_y);
        g.matvec_t(&grad_y, &mut u);
        let radial: f64 = u.iter().zip(&theta).map(|(a, b)| a * b).sum();
        u.iter_mut().zip(&theta).for_each(|(a, b)| *a = sign * (*a - radial * b));
        let un = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if un < 1e-14 {
            break;
        }
        u.iter_mut().for_each(|a| *a /= un);
        loop {
            let (c, s) = (alpha.cos(), alpha.sin());
            cand.iter_mut().zip(theta.iter().zip(&u)).for_each(|(o, (t, d))| *o = c * t + s * d);
            let cn = cand.iter().map(|a| a * a).sum::<f64>().sqrt();
            cand.iter_mut().for_each(|a| *a /= cn);
            let mut y_new = vec![0.0; n];
            g.matvec(&cand, &mut y_new);
            let v = params.norm_unchecked(&y_new, &mut scratch);
            if (up && v > val) || (!up && v < val && v > 0.0) {
                theta.copy_from_slice(&cand);
                y = y_new;
                val = v;
                alpha = (alpha * 1.5).min(1.0);
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return val;
            }
        }
    }
    val
}

/// `M |x|` where `G x = y`, solved through the Cholesky factor of `G^T G`.
pub fn pushforward_norm(g: &GaussianMatrix, m: f64, y: &[f64]) -> Result<f64> {
    if y.len() != g.n {
        return Err(Error::DimensionMismatch { expected: g.n, got: y.len() });
    }
    let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ynorm == 0.0 {
        return Ok(0.0);
    }
    let gm = DMatrix::from_row_slice(g.n, g.k, &g.entries);
    let gram = gm.transpose() * &gm;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Unsupported("G^T G is not positive definite (rank-deficient G)".into()))?;
    let rhs = gm.transpose() * nalgebra::DVector::from_column_slice(y);
    let x = chol.solve(&rhs);
    let resid = (&gm * &x - nalgebra::DVector::from_column_slice(y)).norm();
    let limit = 1e-6 * ynorm;
    if resid > limit {
        return Err(Error::NotInRange { residual: resid, limit });
    }
    Ok(m * x.norm())
}
