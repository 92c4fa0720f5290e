//! Conditional class-probability estimators.
//!
//! The multinomial logit uses the last class as reference: class `K` has a
//! linear predictor of zero and the model stores `(K-1) x (p+1)` coefficients,
//! intercept first in every row.
//!
//! Unpenalized and ridge fits use damped Newton steps with an Armijo line
//! search. Lasso and elastic-net fits use monotone FISTA. Both optimize on an
//! internally standardized design and report coefficients on the original
//! feature scale.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{class_counts, ClassProbabilities, FeatureMatrix, LabelSpace, LabeledDataset, ROW_SUM_TOLERANCE};

/// Rows of an ingested probability file may be renormalized when off by at most this much.
pub const INGEST_RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    None,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    ElasticNet { lambda: f64, mix: f64 },
}

impl Penalty {
    /// `(lambda, l1 share)`; the penalty is `lambda * (mix*|b|_1 + (1-mix)/2*|b|^2)`.
    fn weights(self) -> (f64, f64) {
        match self {
            Penalty::None => (0.0, 0.0),
            Penalty::Ridge { lambda } => (lambda, 0.0),
            Penalty::Lasso { lambda } => (lambda, 1.0),
            Penalty::ElasticNet { lambda, mix } => (lambda, mix),
        }
    }

    fn is_none(self) -> bool {
        matches!(self, Penalty::None)
    }

    fn validate(self) -> Result<()> {
        let (lambda, mix) = self.weights();
        if !(lambda >= 0.0 && lambda.is_finite()) || !(0.0..=1.0).contains(&mix) {
            return Err(Error::Invalid(format!("invalid penalty {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub max_iter: usize,
    /// Stop once the max-norm of the (minimum-norm sub)gradient of the
    /// per-observation objective drops to this value.
    pub tolerance: f64,
    /// Fail with [`Error::NonConvergence`] instead of returning an unconverged model.
    pub strict: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tolerance: 1e-8,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective value before each iteration and after the last one.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialModel {
    pub k: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    /// Row-major `(k-1) x (n_features+1)`, intercept first.
    pub coefficients: Vec<f64>,
    pub penalty: Penalty,
    pub fit_meta: FitMeta,
}

impl MultinomialModel {
    /// Model with every coefficient zero, i.e. uniform predictions.
    pub fn zeros(k: usize, n_features: usize) -> Self {
        Self {
            k,
            n_features,
            feature_names: (1..=n_features).map(|j| format!("x{j}")).collect(),
            coefficients: vec![0.0; (k - 1) * (n_features + 1)],
            penalty: Penalty::None,
            fit_meta: FitMeta {
                iterations: 0,
                objective: f64::NAN,
                gradient_norm: f64::NAN,
                converged: false,
                trace: Vec::new(),
            },
        }
    }

    pub fn coefficient(&self, class: usize, term: usize) -> f64 {
        self.coefficients[class * (self.n_features + 1) + term]
    }
}

/// Design matrix with a leading intercept column.
struct Design {
    n: usize,
    width: usize,
    z: Vec<f64>,
}

impl Design {
    fn raw(x: &FeatureMatrix) -> Self {
        let width = x.cols() + 1;
        let mut z = Vec::with_capacity(x.rows() * width);
        for i in 0..x.rows() {
            z.push(1.0);
            z.extend_from_slice(x.row(i));
        }
        Self { n: x.rows(), width, z }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.z[i * self.width..(i + 1) * self.width]
    }
}

/// Probabilities for all `k` classes from the `k-1` free linear predictors.
fn softmax_reference(eta: &[f64], out: &mut [f64]) {
    let m = eta.iter().copied().fold(0.0_f64, f64::max);
    let base = (-m).exp();
    let mut total = base;
    for (o, e) in out.iter_mut().zip(eta) {
        *o = (e - m).exp();
        total += *o;
    }
    let last = out.len() - 1;
    out[last] = base;
    for o in out.iter_mut() {
        *o /= total;
    }
}

fn log_sum_exp_reference(eta: &[f64]) -> f64 {
    let m = eta.iter().copied().fold(0.0_f64, f64::max);
    let s: f64 = (-m).exp() + eta.iter().map(|e| (e - m).exp()).sum::<f64>();
    m + s.ln()
}

fn linear_predictors(coef: &[f64], z: &[f64], eta: &mut [f64]) {
    let w = z.len();
    for (j, e) in eta.iter_mut().enumerate() {
        *e = coef[j * w..(j + 1) * w].iter().zip(z).map(|(b, x)| b * x).sum();
    }
}

fn loglik(design: &Design, labels: &[usize], k: usize, coef: &[f64]) -> f64 {
    let mut eta = vec![0.0; k - 1];
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        linear_predictors(coef, design.row(i), &mut eta);
        let own = if y + 1 < k { eta[y] } else { 0.0 };
        total += own - log_sum_exp_reference(&eta);
    }
    total
}

fn loglik_gradient(design: &Design, labels: &[usize], k: usize, coef: &[f64]) -> Vec<f64> {
    let w = design.width;
    let mut eta = vec![0.0; k - 1];
    let mut p = vec![0.0; k];
    let mut grad = vec![0.0; (k - 1) * w];
    for (i, &y) in labels.iter().enumerate() {
        let z = design.row(i);
        linear_predictors(coef, z, &mut eta);
        softmax_reference(&eta, &mut p);
        for j in 0..k - 1 {
            let r = f64::from(u8::from(y == j)) - p[j];
            for (g, x) in grad[j * w..(j + 1) * w].iter_mut().zip(z) {
                *g += r * x;
            }
        }
    }
    grad
}

/// Negative Hessian of the log-likelihood.
fn information(design: &Design, k: usize, coef: &[f64]) -> DMatrix<f64> {
    let w = design.width;
    let d = (k - 1) * w;
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut eta = vec![0.0; k - 1];
    let mut p = vec![0.0; k];
    for i in 0..design.n {
        let z = design.row(i);
        linear_predictors(coef, z, &mut eta);
        softmax_reference(&eta, &mut p);
        for j in 0..k - 1 {
            for l in j..k - 1 {
                let wjl = if j == l { p[j] * (1.0 - p[j]) } else { -p[j] * p[l] };
                for a in 0..w {
                    let za = wjl * z[a];
                    for b in 0..w {
                        h[(j * w + a, l * w + b)] += za * z[b];
                    }
                }
            }
        }
    }
    // fill the lower block triangle
    for j in 0..k - 1 {
        for l in 0..j {
            for a in 0..w {
                for b in 0..w {
                    h[(j * w + a, l * w + b)] = h[(l * w + b, j * w + a)];
                }
            }
        }
    }
    h
}

/// Exact multinomial log-likelihood (summed over rows) at `coefficients`,
/// laid out as in [`MultinomialModel::coefficients`].
pub fn log_likelihood(coefficients: &[f64], x: &FeatureMatrix, labels: &[usize], k: usize) -> f64 {
    loglik(&Design::raw(x), labels, k, coefficients)
}

/// Analytic gradient of [`log_likelihood`].
pub fn log_likelihood_gradient(coefficients: &[f64], x: &FeatureMatrix, labels: &[usize], k: usize) -> Vec<f64> {
    loglik_gradient(&Design::raw(x), labels, k, coefficients)
}

/// Standardized design plus the affine map back to raw coefficients.
struct Standardized {
    design: Design,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Columns with zero variance; their coefficients are pinned to zero.
    constant: Vec<bool>,
}

fn standardize(x: &FeatureMatrix) -> Standardized {
    let n = x.rows() as f64;
    let p = x.cols();
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    let mut constant = vec![false; p];
    for j in 0..p {
        let m = x.column(j).sum::<f64>() / n;
        let var = x.column(j).map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean[j] = m;
        if var.sqrt() <= 1e-12 * m.abs().max(1.0) {
            constant[j] = true;
        } else {
            scale[j] = var.sqrt();
        }
    }
    let width = p + 1;
    let mut z = Vec::with_capacity(x.rows() * width);
    for i in 0..x.rows() {
        z.push(1.0);
        for (j, v) in x.row(i).iter().enumerate() {
            z.push(if constant[j] { 0.0 } else { (v - mean[j]) / scale[j] });
        }
    }
    Standardized {
        design: Design { n: x.rows(), width, z },
        mean,
        scale,
        constant,
    }
}

struct Problem<'a> {
    design: &'a Design,
    labels: &'a [usize],
    k: usize,
    lambda: f64,
    mix: f64,
    /// `true` for coefficients that are penalized (non-intercept, non-constant).
    penalized: Vec<bool>,
    /// `true` for coefficients pinned at zero.
    pinned: Vec<bool>,
}

impl Problem<'_> {
    fn n(&self) -> f64 {
        self.design.n as f64
    }

    fn smooth(&self, theta: &[f64]) -> f64 {
        let ridge: f64 = theta
            .iter()
            .zip(&self.penalized)
            .filter(|(_, &p)| p)
            .map(|(b, _)| b * b)
            .sum();
        -loglik(self.design, self.labels, self.k, theta) / self.n() + 0.5 * self.lambda * (1.0 - self.mix) * ridge
    }

    fn l1(&self, theta: &[f64]) -> f64 {
        let l1: f64 = theta
            .iter()
            .zip(&self.penalized)
            .filter(|(_, &p)| p)
            .map(|(b, _)| b.abs())
            .sum();
        self.lambda * self.mix * l1
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        self.smooth(theta) + self.l1(theta)
    }

    fn smooth_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut g = loglik_gradient(self.design, self.labels, self.k, theta);
        for (idx, gi) in g.iter_mut().enumerate() {
            *gi = -*gi / n;
            if self.penalized[idx] {
                *gi += self.lambda * (1.0 - self.mix) * theta[idx];
            }
            if self.pinned[idx] {
                *gi = 0.0;
            }
        }
        g
    }

    /// Max-norm of the minimum-norm subgradient of the full objective.
    fn optimality(&self, theta: &[f64], smooth_grad: &[f64]) -> f64 {
        let t = self.lambda * self.mix;
        smooth_grad
            .iter()
            .enumerate()
            .map(|(idx, &g)| {
                if !self.penalized[idx] || t == 0.0 {
                    g.abs()
                } else if theta[idx] != 0.0 {
                    (g + t * theta[idx].signum()).abs()
                } else {
                    (g.abs() - t).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    fn prox(&self, v: &mut [f64], step: f64) {
        let t = step * self.lambda * self.mix;
        for (idx, x) in v.iter_mut().enumerate() {
            if self.pinned[idx] {
                *x = 0.0;
            } else if self.penalized[idx] && t > 0.0 {
                *x = x.signum() * (x.abs() - t).max(0.0);
            }
        }
    }
}

struct Solution {
    theta: Vec<f64>,
    meta: FitMeta,
}

fn newton(problem: &Problem<'_>, cfg: &OptConfig) -> Solution {
    let d = problem.penalized.len();
    let mut theta = vec![0.0; d];
    let mut f = problem.objective(&theta);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut gnorm;
    let mut converged = false;
    loop {
        let g = problem.smooth_gradient(&theta);
        gnorm = problem.optimality(&theta, &g);
        if gnorm <= cfg.tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let mut h = information(problem.design, problem.k, &theta) / problem.n();
        for idx in 0..d {
            if problem.penalized[idx] {
                h[(idx, idx)] += problem.lambda * (1.0 - problem.mix);
            }
            if problem.pinned[idx] {
                for j in 0..d {
                    h[(idx, j)] = 0.0;
                    h[(j, idx)] = 0.0;
                }
                h[(idx, idx)] = 1.0;
            }
        }
        let rhs = -DVector::from_column_slice(&g);
        let step = solve_damped(h, &rhs);
        let slope: f64 = g.iter().zip(step.iter()).map(|(a, b)| a * b).sum();

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let fc = problem.objective(&cand);
            if fc.is_finite() && fc <= f + 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                theta = cand;
                f = fc;
                trace.push(f);
            }
            // no further decrease representable in floating point
            None => break,
        }
    }
    Solution {
        theta,
        meta: FitMeta {
            iterations,
            objective: f,
            gradient_norm: gnorm,
            converged,
            trace,
        },
    }
}

fn solve_damped(h: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        return ch.solve(rhs);
    }
    let d = h.nrows();
    let mut mu = 1e-10 * (h.trace() / d as f64).abs().max(1e-300);
    loop {
        let damped = &h + DMatrix::<f64>::identity(d, d) * mu;
        if let Some(ch) = damped.cholesky() {
            return ch.solve(rhs);
        }
        mu *= 10.0;
    }
}

fn proximal(problem: &Problem<'_>, cfg: &OptConfig) -> Solution {
    let d = problem.penalized.len();
    let mut x = vec![0.0; d];
    let mut fx = problem.objective(&x);
    let mut y = x.clone();
    let mut momentum = 1.0_f64;
    let mut lipschitz = 1.0_f64;
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut converged = false;
    let mut gnorm;
    loop {
        gnorm = problem.optimality(&x, &problem.smooth_gradient(&x));
        if gnorm <= cfg.tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let sy = problem.smooth(&y);
        let gy = problem.smooth_gradient(&y);
        let z = loop {
            let mut z: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - g / lipschitz).collect();
            problem.prox(&mut z, 1.0 / lipschitz);
            let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let lin: f64 = gy.iter().zip(&diff).map(|(g, dd)| g * dd).sum();
            let sq: f64 = diff.iter().map(|v| v * v).sum();
            if problem.smooth(&z) <= sy + lin + 0.5 * lipschitz * sq + 1e-15 * sy.abs() || lipschitz > 1e12 {
                break z;
            }
            lipschitz *= 2.0;
        };
        let fz = problem.objective(&z);
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
            y = x
                .iter()
                .zip(&prev)
                .map(|(a, b)| a + (momentum - 1.0) / next_momentum * (a - b))
                .collect();
            momentum = next_momentum;
        } else {
            // restart acceleration from the last accepted iterate
            y = x.clone();
            momentum = 1.0;
        }
        trace.push(fx);
        lipschitz = (lipschitz * 0.9).max(1e-8);
    }
    Solution {
        theta: x,
        meta: FitMeta {
            iterations,
            objective: fx,
            gradient_norm: gnorm,
            converged,
            trace,
        },
    }
}

/// Fits a multinomial logit, maximizing the (penalized) log-likelihood.
pub fn fit_multinomial(ds: &LabeledDataset, k: usize, penalty: Penalty, cfg: &OptConfig) -> Result<MultinomialModel> {
    penalty.validate()?;
    if k < 2 {
        return Err(Error::Invalid(format!("need at least 2 classes, got {k}")));
    }
    if let Some(&y) = ds.labels.iter().find(|&&y| y >= k) {
        return Err(Error::LabelOutOfRange { label: y + 1, k });
    }
    if let Some(c) = class_counts(&ds.labels, k).iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class: c + 1 });
    }
    let x = &ds.features;
    let p = x.cols();
    if penalty.is_none() && x.rows() <= p {
        return Err(Error::Invalid(format!(
            "unpenalized fit needs more rows than features ({} <= {p})",
            x.rows()
        )));
    }
    let std = standardize(x);
    if penalty.is_none() {
        if let Some(j) = std.constant.iter().position(|&c| c) {
            return Err(Error::DegenerateDesign { column: j + 1 });
        }
    }

    let width = p + 1;
    let d = (k - 1) * width;
    let penalized: Vec<bool> = (0..d)
        .map(|idx| {
            let term = idx % width;
            term > 0 && !std.constant[term - 1] && !penalty.is_none()
        })
        .collect();
    let pinned: Vec<bool> = (0..d)
        .map(|idx| idx % width > 0 && std.constant[idx % width - 1])
        .collect();
    let (lambda, mix) = penalty.weights();
    let problem = Problem {
        design: &std.design,
        labels: &ds.labels,
        k,
        lambda,
        mix,
        penalized,
        pinned,
    };

    let solution = if mix > 0.0 && lambda > 0.0 {
        proximal(&problem, cfg)
    } else {
        newton(&problem, cfg)
    };
    if cfg.strict && !solution.meta.converged {
        return Err(Error::NonConvergence {
            iterations: solution.meta.iterations,
            gradient_norm: solution.meta.gradient_norm,
        });
    }

    let mut coefficients = vec![0.0; d];
    for j in 0..k - 1 {
        let row = &solution.theta[j * width..(j + 1) * width];
        let mut intercept = row[0];
        for t in 0..p {
            if std.constant[t] {
                continue;
            }
            let b = row[t + 1] / std.scale[t];
            coefficients[j * width + t + 1] = b;
            intercept -= b * std.mean[t];
        }
        coefficients[j * width] = intercept;
    }
    Ok(MultinomialModel {
        k,
        n_features: p,
        feature_names: x.names().to_vec(),
        coefficients,
        penalty,
        fit_meta: solution.meta,
    })
}

pub fn predict_proba(model: &MultinomialModel, x: &FeatureMatrix) -> Result<ClassProbabilities> {
    if x.cols() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            got: x.cols(),
        });
    }
    let k = model.k;
    let design = Design::raw(x);
    let mut eta = vec![0.0; k - 1];
    let mut values = vec![0.0; x.rows() * k];
    for (i, out) in values.chunks_mut(k).enumerate() {
        linear_predictors(&model.coefficients, design.row(i), &mut eta);
        softmax_reference(&eta, out);
    }
    ClassProbabilities::new(x.rows(), k, values)
}

/// Reads a `p1..pK` CSV of externally estimated probabilities.
pub fn ingest_probabilities(path: &Path, space: &LabelSpace) -> Result<ClassProbabilities> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let k = space.k();
    let headers = reader.headers()?.clone();
    let expected: Vec<String> = (1..=k).map(|c| format!("p{c}")).collect();
    if headers.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(parse_err(format!(
            "expected header {}, found {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::new();
    let mut n = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(format!("row {}: {e}", i + 1)))?;
        if row.len() != k {
            return Err(parse_err(format!(
                "row {}: expected {k} columns, got {}",
                i + 1,
                row.len()
            )));
        }
        if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(parse_err(format!("row {}: probability {p} outside [0,1]", i + 1)));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > INGEST_RENORMALIZE_TOLERANCE {
            return Err(Error::RowSum { row: i + 1, sum });
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            values.extend(row.iter().map(|p| p / sum));
        } else {
            values.extend(row);
        }
        n += 1;
    }
    ClassProbabilities::new(n, k, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn dataset(x: Vec<f64>, cols: usize, labels: Vec<usize>) -> LabeledDataset {
        let rows = labels.len();
        LabeledDataset::new(FeatureMatrix::continuous(rows, cols, x).unwrap(), labels, None).unwrap()
    }

    #[test]
    fn intercept_only_recovers_class_frequencies() {
        let mut labels = vec![0; 37];
        labels.extend(vec![1; 49]);
        labels.extend(vec![2; 13]);
        let n = labels.len();
        let ds = dataset(Vec::new(), 0, labels);
        let model = fit_multinomial(&ds, 3, Penalty::None, &OptConfig::default()).unwrap();
        assert!(model.fit_meta.converged);
        let probs = predict_proba(&model, &ds.features).unwrap();
        let freq = [37.0 / n as f64, 49.0 / n as f64, 13.0 / n as f64];
        for (p, f) in probs.row(0).iter().zip(freq) {
            assert!((p - f).abs() < 1e-6, "{p} vs {f}");
        }
    }

    #[test]
    fn zero_coefficients_predict_uniform() {
        let model = MultinomialModel::zeros(3, 2);
        let x = FeatureMatrix::continuous(2, 2, vec![1.0, -4.0, 100.0, 3.0]).unwrap();
        for row in predict_proba(&model, &x).unwrap().rows() {
            for p in row {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn softmax_saturates() {
        let mut model = MultinomialModel::zeros(3, 1);
        model.coefficients[2] = 50.0; // class 2 intercept
        let x = FeatureMatrix::continuous(1, 1, vec![0.0]).unwrap();
        let p = predict_proba(&model, &x).unwrap();
        assert!(p.get(0, 1) >= 1.0 - 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = MultinomialModel::zeros(3, 2);
        let x = FeatureMatrix::continuous(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(
            predict_proba(&model, &x),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn missing_class_and_constant_column_are_rejected() {
        let ds = dataset(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0, 0, 1, 1]);
        assert!(matches!(
            fit_multinomial(&ds, 3, Penalty::None, &OptConfig::default()),
            Err(Error::EmptyClass { class: 3 })
        ));
        let ds = dataset(vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0], 2, vec![0, 1, 0, 1]);
        assert!(matches!(
            fit_multinomial(&ds, 2, Penalty::None, &OptConfig::default()),
            Err(Error::DegenerateDesign { column: 1 })
        ));
        // a penalty makes the constant column harmless
        let m = fit_multinomial(&ds, 2, Penalty::Ridge { lambda: 0.1 }, &OptConfig::default()).unwrap();
        assert_eq!(m.coefficient(0, 1), 0.0);
    }

    #[test]
    fn non_convergence_is_an_error_when_strict() {
        let ds = dataset(vec![0.0, 1.0, 2.0, 3.0, 1.5, 0.5], 1, vec![0, 1, 1, 0, 0, 1]);
        let cfg = OptConfig {
            max_iter: 1,
            tolerance: 1e-14,
            strict: true,
        };
        assert!(matches!(
            fit_multinomial(&ds, 2, Penalty::None, &cfg),
            Err(Error::NonConvergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn ingest_accepts_renormalizes_and_rejects() {
        let space = LabelSpace::numbered(3).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "p1,p2,p3\n0.2,0.3,0.5\n0.2000004,0.3,0.4999997").unwrap();
        let p = ingest_probabilities(f.path(), &space).unwrap();
        assert_eq!(p.row(0), &[0.2, 0.3, 0.5]);
        assert!((p.row(1).iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "p1,p2,p3\n0.2,0.3,0.5\n0.2,0.3,0.6").unwrap();
        assert!(matches!(
            ingest_probabilities(bad.path(), &space),
            Err(Error::RowSum { row: 2, .. })
        ));

        let mut header = tempfile::NamedTempFile::new().unwrap();
        writeln!(header, "a,b,c\n0.2,0.3,0.5").unwrap();
        assert!(matches!(
            ingest_probabilities(header.path(), &space),
            Err(Error::Parse { .. })
        ));
    }
}
