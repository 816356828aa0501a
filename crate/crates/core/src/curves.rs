//! Discretized functional samples and cubic B-spline smoothing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Strictly increasing sample locations shared by every curve of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub const MIN_POINTS: usize = 4;

    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return invalid(format!(
                "grid needs at least {} points, got {}",
                Self::MIN_POINTS,
                points.len()
            ));
        }
        if let Some(i) = points.iter().position(|t| !t.is_finite()) {
            return invalid(format!("grid point {i} is not finite"));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return invalid(format!("grid is not strictly increasing at index {}", i + 1));
        }
        Ok(Self { points })
    }

    /// `m` equispaced points on `[start, end]`, both ends included.
    pub fn uniform(start: f64, end: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return invalid("uniform grid needs m >= 2");
        }
        let step = (end - start) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| start + step * i as f64).collect();
        points[m - 1] = end;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Composite trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let t = &self.points;
        let m = t.len();
        let mut w = vec![0.0; m];
        for i in 0..m - 1 {
            let h = 0.5 * (t[i + 1] - t[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        w
    }
}

/// `n` curves observed on a common grid; row `i` of `values` is curve `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    values: DMatrix<f64>,
    grid: Grid,
    labels: Option<Vec<usize>>,
}

impl FunctionalSample {
    pub fn new(values: DMatrix<f64>, grid: Grid, labels: Option<Vec<usize>>) -> Result<Self> {
        if values.nrows() < 2 {
            return invalid(format!("a sample needs at least 2 curves, got {}", values.nrows()));
        }
        if values.ncols() != grid.len() {
            return invalid(format!(
                "curves have {} values but the grid has {} points",
                values.ncols(),
                grid.len()
            ));
        }
        if let Some(l) = &labels {
            if l.len() != values.nrows() {
                return invalid(format!(
                    "{} labels given for {} curves",
                    l.len(),
                    values.nrows()
                ));
            }
        }
        Ok(Self { values, grid, labels })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_curves(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.values.ncols()
    }

    pub fn curve(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n_curves() {
                return invalid("label count does not match curve count");
            }
        }
        self.labels = labels;
        Ok(self)
    }
}

/// Cubic B-spline basis on an open uniform knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    interior_knots: Vec<f64>,
    knots: Vec<f64>,
    num_basis: usize,
}

impl BSplineBasis {
    pub const DEGREE: usize = 3;

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.interior_knots
    }

    /// Full knot vector, boundary knots repeated `degree + 1` times.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    pub fn lower(&self) -> f64 {
        self.knots[0]
    }

    pub fn upper(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    fn span(&self, x: f64) -> usize {
        let p = self.degree;
        let last = self.num_basis - 1;
        if x >= self.knots[last + 1] {
            return last;
        }
        if x <= self.knots[p] {
            return p;
        }
        // knots[span] <= x < knots[span + 1]
        let (mut lo, mut hi) = (p, last + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Values of every basis function and of its first `order` derivatives at
    /// `x`. Row `r` of the result holds the `r`-th derivatives.
    pub fn evaluate(&self, x: f64, order: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let i = self.span(x);
        let u = &self.knots;
        let local = basis_derivatives(u, p, i, x, order);
        let mut out = vec![vec![0.0; self.num_basis]; order + 1];
        for (k, row) in local.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out[k][i - p + j] = *v;
            }
        }
        out
    }

    /// Gram matrix of second derivatives, `P[i][j] = ∫ B_i''(t) B_j''(t) dt`.
    /// Exact, since the integrand is piecewise quadratic.
    pub fn penalty_matrix(&self) -> DMatrix<f64> {
        let node = 0.5 / 3f64.sqrt();
        let mut p = DMatrix::zeros(self.num_basis, self.num_basis);
        for w in self.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            for x in [mid - node * (b - a), mid + node * (b - a)] {
                let d2 = &self.evaluate(x, 2)[2];
                for i in 0..self.num_basis {
                    if d2[i] == 0.0 {
                        continue;
                    }
                    for j in 0..self.num_basis {
                        p[(i, j)] += 0.5 * (b - a) * d2[i] * d2[j];
                    }
                }
            }
        }
        p
    }

    /// Design matrices (grid points × basis functions) for derivative orders
    /// 0 through `order`.
    pub fn design(&self, points: &[f64], order: usize) -> Vec<DMatrix<f64>> {
        let mut mats = vec![DMatrix::zeros(points.len(), self.num_basis); order + 1];
        for (row, &x) in points.iter().enumerate() {
            for (k, vals) in self.evaluate(x, order).into_iter().enumerate() {
                for (j, v) in vals.into_iter().enumerate() {
                    mats[k][(row, j)] = v;
                }
            }
        }
        mats
    }
}

// Nonzero basis functions on span `i` and their derivatives up to `order`
// (Piegl & Tiller, "The NURBS Book", A2.3).
fn basis_derivatives(u: &[f64], p: usize, i: usize, x: f64, order: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - u[i + 1 - j];
        right[j] = u[i + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let n = order.min(p);
    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

/// Roughness penalty used when none is given, on time rescaled to `[0, 1]`.
pub const DEFAULT_LAMBDA: f64 = 2e-3;

/// Basis dimension used when none is given: `max(4, m / 3)`.
pub fn default_basis_size(m: usize) -> usize {
    (m / 3).max(4)
}

/// Cubic B-spline basis with `num_basis` functions and equispaced interior
/// knots spanning the grid.
pub fn make_basis(grid: &Grid, num_basis: usize) -> Result<BSplineBasis> {
    let p = BSplineBasis::DEGREE;
    if num_basis < p + 1 || num_basis > grid.len() {
        return invalid(format!(
            "basis size must lie in [{}, {}], got {num_basis}",
            p + 1,
            grid.len()
        ));
    }
    let (a, b) = (grid.start(), grid.end());
    let n_interior = num_basis - p - 1;
    let segments = n_interior + 1;
    let interior_knots: Vec<f64> = (1..=n_interior)
        .map(|j| a + (b - a) * j as f64 / segments as f64)
        .collect();
    let mut knots = vec![a; p + 1];
    knots.extend_from_slice(&interior_knots);
    knots.extend(std::iter::repeat(b).take(p + 1));
    Ok(BSplineBasis {
        degree: p,
        interior_knots,
        knots,
        num_basis,
    })
}

/// A smoothed sample together with its first and second derivatives, all
/// evaluated on the original grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTriple {
    pub data: FunctionalSample,
    pub d1: FunctionalSample,
    pub d2: FunctionalSample,
}

/// Least-squares fit of `basis` to every curve, solved through a thin QR
/// factorization of the design matrix.
#[derive(Debug, Clone)]
pub struct Smoother {
    basis: BSplineBasis,
    grid: Grid,
    lambda: f64,
    // Maps grid values to spline coefficients.
    solve: DMatrix<f64>,
    design: Vec<DMatrix<f64>>,
}

impl Smoother {
    /// Plain least squares fit.
    pub fn new(grid: &Grid, basis: &BSplineBasis) -> Result<Self> {
        Self::penalized(grid, basis, 0.0)
    }

    /// Penalized least squares fit minimizing
    /// `mean((y - x)^2) + lambda * ∫ x''(u)^2 du`, with time `u` rescaled to
    /// `[0, 1]` so that `lambda` does not depend on the length of the domain.
    pub fn penalized(grid: &Grid, basis: &BSplineBasis, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return invalid(format!("smoothing parameter must be finite and non-negative, got {lambda}"));
        }
        if basis.lower() != grid.start() || basis.upper() != grid.end() {
            return invalid("basis span does not match the grid span");
        }
        let design = basis.design(grid.points(), 2);
        let b = &design[0];
        let solve = if lambda == 0.0 {
            if basis.num_basis() > grid.len() {
                return invalid("basis has more functions than grid points");
            }
            let qr = b.clone().qr();
            let (q, r) = (qr.q(), qr.r());
            let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
            let max = diag.iter().copied().fold(0.0, f64::max);
            if let Some(j) = diag.iter().position(|&v| v <= 1e-10 * max) {
                return Err(Error::NumericalFailure(format!(
                    "B-spline design matrix is rank deficient: |R[{j},{j}]| = {:.3e} against max {:.3e}; \
                     some basis function has no support among the grid points",
                    diag[j], max
                )));
            }
            r.solve_upper_triangular(&q.transpose())
                .expect("triangular factor checked for rank")
        } else {
            let m = grid.len() as f64;
            let span = grid.end() - grid.start();
            let lhs = b.transpose() * b / m + basis.penalty_matrix() * (lambda * span.powi(3));
            let chol = lhs.cholesky().ok_or_else(|| {
                Error::NumericalFailure("penalized normal equations are not positive definite".into())
            })?;
            chol.solve(&(b.transpose() / m))
        };
        Ok(Self {
            basis: basis.clone(),
            grid: grid.clone(),
            lambda,
            solve,
            design,
        })
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Spline coefficients, one column per curve.
    pub fn coefficients(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        &self.solve * values.transpose()
    }

    pub fn smooth(&self, sample: &FunctionalSample) -> Result<SmoothedTriple> {
        if sample.grid() != &self.grid {
            return invalid("sample grid differs from the smoother grid");
        }
        let coef = self.coefficients(sample.values());
        let eval = |k: usize| -> Result<FunctionalSample> {
            let vals = (&self.design[k] * &coef).transpose();
            FunctionalSample::new(vals, sample.grid().clone(), sample.labels.clone())
        };
        Ok(SmoothedTriple {
            data: eval(0)?,
            d1: eval(1)?,
            d2: eval(2)?,
        })
    }
}

/// Smooths every curve of `sample` with `basis` and evaluates the fit and its
/// first two derivatives on the sample grid.
pub fn smooth(sample: &FunctionalSample, basis: &BSplineBasis) -> Result<SmoothedTriple> {
    Smoother::new(sample.grid(), basis)?.smooth(sample)
}

/// Like [`smooth`] with a roughness penalty of weight `lambda`.
pub fn smooth_penalized(sample: &FunctionalSample, basis: &BSplineBasis, lambda: f64) -> Result<SmoothedTriple> {
    Smoother::penalized(sample.grid(), basis, lambda)?.smooth(sample)
}
