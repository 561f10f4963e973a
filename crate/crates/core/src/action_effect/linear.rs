use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SampleSet;

/// Largest condition number accepted for matrices that get inverted.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `Y_S = F X + N`, `Z = D A + E X + O` with zero-mean noises of covariance
/// `Σ_NN` and `Σ_OO`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussianModel {
    #[serde(with = "crate::prob::serde_rows")]
    pub f: DMatrix<f64>,
    #[serde(with = "crate::prob::serde_rows")]
    pub sigma_nn: DMatrix<f64>,
    #[serde(with = "crate::prob::serde_rows")]
    pub d: DMatrix<f64>,
    #[serde(with = "crate::prob::serde_rows")]
    pub e: DMatrix<f64>,
    #[serde(with = "crate::prob::serde_rows")]
    pub sigma_oo: DMatrix<f64>,
}

fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("{what} is not square")));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(Error::InvalidTable(format!("{what} is not symmetric")));
    }
    if m.nrows() > 0 {
        let min_eig = m.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::InvalidTable(format!("{what} is not positive semi-definite (eigenvalue {min_eig})")));
        }
    }
    Ok(())
}

impl LinearGaussianModel {
    pub fn new(
        f: DMatrix<f64>,
        sigma_nn: DMatrix<f64>,
        d: DMatrix<f64>,
        e: DMatrix<f64>,
        sigma_oo: DMatrix<f64>,
    ) -> Result<Self> {
        let model = Self { f, sigma_nn, d, e, sigma_oo };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let (dy, dx) = self.f.shape();
        let dz = self.d.nrows();
        if self.e.shape() != (dz, dx) {
            return Err(Error::ShapeMismatch(format!("E is {:?}, expected ({dz}, {dx})", self.e.shape())));
        }
        if self.sigma_nn.shape() != (dy, dy) {
            return Err(Error::ShapeMismatch("Σ_NN does not match the observation dimension".into()));
        }
        if self.sigma_oo.shape() != (dz, dz) {
            return Err(Error::ShapeMismatch("Σ_OO does not match the outcome dimension".into()));
        }
        check_psd(&self.sigma_nn, "Σ_NN")?;
        check_psd(&self.sigma_oo, "Σ_OO")
    }

    pub fn dim_a(&self) -> usize {
        self.d.ncols()
    }

    pub fn dim_x(&self) -> usize {
        self.f.ncols()
    }

    pub fn dim_y(&self) -> usize {
        self.f.nrows()
    }

    pub fn dim_z(&self) -> usize {
        self.d.nrows()
    }
}

/// Second-moment blocks consumed by the transfer estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlocks {
    pub za: DMatrix<f64>,
    pub zy: DMatrix<f64>,
    pub ay: DMatrix<f64>,
    pub yy: DMatrix<f64>,
    pub aa: DMatrix<f64>,
}

/// Exact covariance blocks of a model whose `(A, X)` covariance is
/// `policy_cov` (actions first). The sensor noise is independent of
/// everything else.
pub fn population_covariances(model: &LinearGaussianModel, policy_cov: &DMatrix<f64>) -> Result<CovarianceBlocks> {
    model.validate()?;
    let (da, dx) = (model.dim_a(), model.dim_x());
    if policy_cov.shape() != (da + dx, da + dx) {
        return Err(Error::ShapeMismatch(format!(
            "policy covariance is {:?}, expected ({n}, {n})",
            policy_cov.shape(),
            n = da + dx
        )));
    }
    check_psd(policy_cov, "Cov(A, X)")?;
    let aa = policy_cov.view((0, 0), (da, da)).into_owned();
    let ax = policy_cov.view((0, da), (da, dx)).into_owned();
    let xx = policy_cov.view((da, da), (dx, dx)).into_owned();
    let ft = model.f.transpose();
    Ok(CovarianceBlocks {
        za: &model.d * &aa + &model.e * ax.transpose(),
        zy: (&model.d * &ax + &model.e * &xx) * &ft,
        ay: &ax * &ft,
        yy: &model.f * &xx * &ft + &model.sigma_nn,
        aa,
    })
}

/// Ratio of the largest to the smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn checked_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let condition = condition_number(m);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Singular { what, condition });
    }
    m.clone().try_inverse().ok_or(Error::Singular { what, condition })
}

/// `(D̂, Ê)` from covariance blocks, with `λ I` added to `Σ_AA` and `Σ_YY`.
///
/// With `R = Σ_YY − Σ_NN`, `S₁ = Σ_AA − Σ_AY R⁻¹ Σ_YA` and
/// `S₂ = R − Σ_YA Σ_AA⁻¹ Σ_AY`:
/// `D̂ = Σ_ZA S₁⁻¹ − Σ_ZY R⁻¹ Σ_YA S₁⁻¹` and
/// `Ê = (−Σ_ZA S₁⁻¹ Σ_AY R⁻¹ + Σ_ZY S₂⁻¹) F`.
pub fn effect_from_covariances(
    blocks: &CovarianceBlocks,
    f: &DMatrix<f64>,
    sigma_nn: &DMatrix<f64>,
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (da, dy) = blocks.ay.shape();
    if !f.is_square() || f.nrows() != dy {
        return Err(Error::ShapeMismatch("F must be square with the observation dimension".into()));
    }
    if sigma_nn.shape() != (dy, dy) || blocks.aa.shape() != (da, da) || blocks.yy.shape() != (dy, dy) {
        return Err(Error::ShapeMismatch("covariance blocks have inconsistent dimensions".into()));
    }
    if blocks.za.ncols() != da || blocks.zy.ncols() != dy || blocks.za.nrows() != blocks.zy.nrows() {
        return Err(Error::ShapeMismatch("outcome covariance blocks have inconsistent dimensions".into()));
    }
    checked_inverse(f, "F")?;
    let aa = &blocks.aa + DMatrix::identity(da, da) * lambda;
    let r = &blocks.yy + DMatrix::identity(dy, dy) * lambda - sigma_nn;
    let ya = blocks.ay.transpose();
    let r_inv = checked_inverse(&r, "Σ_YY − Σ_NN")?;
    let aa_inv = checked_inverse(&aa, "Σ_AA")?;
    let s1 = &aa - &blocks.ay * &r_inv * &ya;
    let s2 = &r - &ya * &aa_inv * &blocks.ay;
    let s1_inv = checked_inverse(&s1, "S₁")?;
    let s2_inv = checked_inverse(&s2, "S₂")?;
    let d = &blocks.za * &s1_inv - &blocks.zy * &r_inv * &ya * &s1_inv;
    let e = (-(&blocks.za * &s1_inv * &blocks.ay * &r_inv) + &blocks.zy * &s2_inv) * f;
    Ok((d, e))
}

/// Column names of outcome, action and observation blocks in a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearColumns {
    pub outcome: Vec<String>,
    pub action: Vec<String>,
    pub observation: Vec<String>,
}

impl LinearColumns {
    /// `z0.., a0.., y0..` with the given dimensions.
    pub fn indexed(dz: usize, da: usize, dy: usize) -> Self {
        let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
        Self { outcome: names("z", dz), action: names("a", da), observation: names("y", dy) }
    }
}

/// Fitted `Z ≈ intercept + D̂ A + Ê X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    #[serde(rename = "D", with = "crate::prob::serde_rows")]
    pub d_hat: DMatrix<f64>,
    #[serde(rename = "E", with = "crate::prob::serde_rows")]
    pub e_hat: DMatrix<f64>,
    pub lambda: f64,
    pub n: usize,
    /// `μ_Z − D̂ μ_A − Ê μ_X`.
    #[serde(with = "crate::prob::serde_rows::vector")]
    pub intercept: DVector<f64>,
}

impl EffectEstimate {
    pub fn predict(&self, a: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        &self.intercept + &self.d_hat * a + &self.e_hat * x
    }

    /// Mean squared prediction error (averaged over rows and outcome
    /// coordinates) on rows with the given outcome, action and state columns.
    pub fn mse(&self, sample: &SampleSet, outcome: &[String], action: &[String], state: &[String]) -> Result<f64> {
        let z = sample.matrix(outcome)?;
        let a = sample.matrix(action)?;
        let x = sample.matrix(state)?;
        if sample.is_empty() {
            return Err(Error::ShapeMismatch("empty evaluation sample".into()));
        }
        let pred = (&a * self.d_hat.transpose() + &x * self.e_hat.transpose()).map_with_location(|_, c, v| v + self.intercept[c]);
        Ok((z - pred).map(|v| v * v).mean())
    }
}

struct Moments {
    means: Vec<DVector<f64>>,
    cov: Vec<Vec<DMatrix<f64>>>,
    n: usize,
}

/// Means and pairwise (`n − 1`) covariances of column blocks.
fn moments(sample: &SampleSet, blocks: &[&[String]]) -> Result<Moments> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 rows, got {n}")));
    }
    let mut centered = Vec::new();
    let mut means = Vec::new();
    for names in blocks {
        let m = sample.matrix(names)?;
        let mean = DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.mean()));
        centered.push(m.map_with_location(|_, c, v| v - mean[c]));
        means.push(mean);
    }
    let cov = centered
        .iter()
        .map(|a| centered.iter().map(|b| a.transpose() * b / (n - 1) as f64).collect())
        .collect();
    Ok(Moments { means, cov, n })
}

fn default_lambda(aa: &DMatrix<f64>, yy: &DMatrix<f64>) -> f64 {
    1e-6 * (aa.trace() + yy.trace()) / (aa.nrows() + yy.nrows()) as f64
}

/// Exact linear transfer from spectator rows `(z, a, y_S)`.
///
/// The sample is centered internally; the state mean is recovered as
/// `F⁻¹ μ_Y`. `lambda = None` uses `1e-6` times the mean diagonal of
/// `Σ̂_AA` and `Σ̂_YY`.
pub fn linear_transfer_estimate(
    sample: &SampleSet,
    columns: &LinearColumns,
    f: &DMatrix<f64>,
    sigma_nn: &DMatrix<f64>,
    lambda: Option<f64>,
) -> Result<EffectEstimate> {
    let m = moments(sample, &[&columns.outcome, &columns.action, &columns.observation])?;
    let blocks = CovarianceBlocks {
        za: m.cov[0][1].clone(),
        zy: m.cov[0][2].clone(),
        ay: m.cov[1][2].clone(),
        yy: m.cov[2][2].clone(),
        aa: m.cov[1][1].clone(),
    };
    let lambda = lambda.unwrap_or_else(|| default_lambda(&blocks.aa, &blocks.yy));
    if lambda < 0.0 {
        return Err(Error::InvalidTable("lambda must be non-negative".into()));
    }
    let (d_hat, e_hat) = effect_from_covariances(&blocks, f, sigma_nn, lambda)?;
    let f_inv = checked_inverse(f, "F")?;
    let mu_x = f_inv * &m.means[2];
    let intercept = &m.means[0] - &d_hat * &m.means[1] - &e_hat * mu_x;
    Ok(EffectEstimate { d_hat, e_hat, lambda, n: m.n, intercept })
}

/// Ridge-regularized least squares of the `target` block on the
/// concatenated `regressors` blocks; returns one coefficient matrix per block
/// and the intercept.
fn regress(sample: &SampleSet, target: &[String], regressors: &[&[String]], lambda: f64) -> Result<(Vec<DMatrix<f64>>, DVector<f64>, usize)> {
    let mut blocks: Vec<&[String]> = vec![target];
    blocks.extend_from_slice(regressors);
    let m = moments(sample, &blocks)?;
    let dims: Vec<usize> = regressors.iter().map(|r| r.len()).collect();
    let total: usize = dims.iter().sum();
    let mut sxx = DMatrix::zeros(total, total);
    let mut szx = DMatrix::zeros(target.len(), total);
    let mut row = 0;
    for (i, &di) in dims.iter().enumerate() {
        let mut col = 0;
        for (j, &dj) in dims.iter().enumerate() {
            sxx.view_mut((row, col), (di, dj)).copy_from(&m.cov[i + 1][j + 1]);
            col += dj;
        }
        szx.view_mut((0, row), (target.len(), di)).copy_from(&m.cov[0][i + 1]);
        row += di;
    }
    sxx += DMatrix::identity(total, total) * lambda;
    let coef = &szx * checked_inverse(&sxx, "regressor covariance")?;
    let mut out = Vec::new();
    let mut intercept = m.means[0].clone();
    let mut start = 0;
    for (i, &di) in dims.iter().enumerate() {
        let b = coef.columns(start, di).into_owned();
        intercept -= &b * &m.means[i + 1];
        out.push(b);
        start += di;
    }
    Ok((out, intercept, m.n))
}

/// Linear counterpart of the average-based proxy: regress `Z` on `(A, Y_S)`
/// and push the observation coefficients through the sensor, `Ẽ = B_Y F`.
pub fn linear_average_proxy(
    sample: &SampleSet,
    columns: &LinearColumns,
    f: &DMatrix<f64>,
    lambda: f64,
) -> Result<EffectEstimate> {
    let (coef, intercept, n) = regress(sample, &columns.outcome, &[&columns.action, &columns.observation], lambda)?;
    let e_hat = &coef[1] * f;
    // μ_Y = F μ_X, so the intercept is unchanged when re-expressed over X
    Ok(EffectEstimate { d_hat: coef[0].clone(), e_hat, lambda, n, intercept })
}

/// Ordinary least squares of `Z` on `(A, X)`, for samples that expose the
/// state.
pub fn ols_effect(sample: &SampleSet, outcome: &[String], action: &[String], state: &[String], lambda: f64) -> Result<EffectEstimate> {
    let (coef, intercept, n) = regress(sample, outcome, &[action, state], lambda)?;
    Ok(EffectEstimate { d_hat: coef[0].clone(), e_hat: coef[1].clone(), lambda, n, intercept })
}
