//! Cross-talk channels and the linear equalizers built around them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Constellation;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub matrix: DMatrix<f64>,
    /// Set when the matrix came from [`crosstalk_channel`].
    pub eps: Option<f64>,
}

impl ChannelModel {
    pub fn identity(n: usize) -> Self {
        ChannelModel {
            matrix: DMatrix::identity(n, n),
            eps: Some(0.0),
        }
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput("channel matrix must be square".into()));
        }
        Ok(ChannelModel { matrix, eps: None })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// The tridiagonal leakage model for one RGB triplet.
pub fn crosstalk_channel(eps: f64, n_leds: usize) -> Result<ChannelModel> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps must lie in [0, 0.5), got {eps}")));
    }
    if n_leds != 3 {
        return Err(Error::UnsupportedModel(format!(
            "cross-talk model is defined for 3 LEDs, got {n_leds}"
        )));
    }
    #[rustfmt::skip]
    let matrix = DMatrix::from_row_slice(3, 3, &[
        1.0 - eps, eps, 0.0,
        eps, 1.0 - 2.0 * eps, eps,
        0.0, eps, 1.0 - eps,
    ]);
    Ok(ChannelModel {
        matrix,
        eps: Some(eps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualizerKind {
    #[serde(rename = "none")]
    Identity,
    SvdPre,
    Zf,
    Lmmse,
}

impl EqualizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EqualizerKind::Identity => "none",
            EqualizerKind::SvdPre => "svd-pre",
            EqualizerKind::Zf => "zf",
            EqualizerKind::Lmmse => "lmmse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" | "identity" => Ok(EqualizerKind::Identity),
            "svd-pre" => Ok(EqualizerKind::SvdPre),
            "zf" => Ok(EqualizerKind::Zf),
            "lmmse" => Ok(EqualizerKind::Lmmse),
            other => Err(Error::InvalidInput(format!("unknown equalizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerSet {
    pub kind: EqualizerKind,
    /// Transmit-side matrix, `N_T x r`.
    pub pre: Option<DMatrix<f64>>,
    /// Receive-side matrix, `r x N_T` (SVD) or `N_T x N_T`.
    pub post: Option<DMatrix<f64>>,
    pub rank: usize,
}

impl EqualizerSet {
    pub fn identity(n: usize) -> Self {
        EqualizerSet {
            kind: EqualizerKind::Identity,
            pre: None,
            post: None,
            rank: n,
        }
    }
}

/// Singular triplets sorted by decreasing singular value, each right
/// singular vector signed so its first nonzero entry is positive.
fn sorted_svd(h: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = h.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let n = order.len();
    let mut u_s = DMatrix::zeros(u.nrows(), n);
    let mut v_s = DMatrix::zeros(v.nrows(), n);
    let mut s = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        let mut uc = u.column(i).into_owned();
        let mut vc = v.column(i).into_owned();
        if let Some(first) = vc.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                uc = -uc;
                vc = -vc;
            }
        }
        u_s.set_column(k, &uc);
        v_s.set_column(k, &vc);
        s.push(svd.singular_values[i]);
    }
    (u_s, s, v_s)
}

/// Transmit `P = V_r S_r^-1`, receive `U_r^T`, so that `post * H * pre = I_r`.
pub fn svd_equalizers(h: &DMatrix<f64>) -> Result<EqualizerSet> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::InvalidInput("channel matrix must be square".into()));
    }
    let (u, s, v) = sorted_svd(h);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|x| **x > RANK_TOL * sigma_max).count();
    if sigma_max <= 0.0 || rank == 0 {
        return Err(Error::DegenerateChannel);
    }
    let mut pre = v.columns(0, rank).into_owned();
    for (k, sigma) in s.iter().take(rank).enumerate() {
        pre.column_mut(k).scale_mut(1.0 / sigma);
    }
    let post = u.columns(0, rank).transpose();
    Ok(EqualizerSet {
        kind: EqualizerKind::SvdPre,
        pre: Some(pre),
        post: Some(post),
        rank,
    })
}

pub fn zf_equalizer(h: &DMatrix<f64>) -> Result<EqualizerSet> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::InvalidInput("channel matrix must be square".into()));
    }
    let (_, s, _) = sorted_svd(h);
    let sigma_max = s[0];
    if sigma_max <= 0.0 || s.iter().any(|x| *x <= RANK_TOL * sigma_max) {
        return Err(Error::SingularChannel);
    }
    let post = h
        .clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or(Error::SingularChannel)?;
    Ok(EqualizerSet {
        kind: EqualizerKind::Zf,
        pre: None,
        post: Some(post),
        rank: h.nrows(),
    })
}

/// Uncentered second moment `(1/N) sum c c^T` of equiprobable symbols.
pub fn symbol_second_moment(constellation: &Constellation) -> DMatrix<f64> {
    let d = constellation.dim;
    let mut r = DMatrix::zeros(d, d);
    for p in &constellation.points {
        let c = DVector::from_column_slice(p);
        r += &c * c.transpose();
    }
    r / constellation.len() as f64
}

/// Wiener receiver `R_c H^T (H R_c H^T + (N0/2) I)^-1`.
pub fn lmmse_equalizer(
    h: &DMatrix<f64>,
    constellation: &Constellation,
    n0: f64,
) -> Result<EqualizerSet> {
    if !(n0 > 0.0) {
        return Err(Error::InvalidInput(format!("N0 must be positive, got {n0}")));
    }
    if constellation.is_empty() || constellation.dim != h.ncols() {
        return Err(Error::InvalidInput(
            "constellation dimension does not match channel".into(),
        ));
    }
    let rc = symbol_second_moment(constellation);
    let n = h.nrows();
    let a = h * &rc * h.transpose() + DMatrix::identity(n, n) * (n0 / 2.0);
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::AssemblyBug("LMMSE covariance not positive definite".into()))?;
    // A is symmetric, so post^T = A^-1 H R_c.
    let post = chol.solve(&(h * &rc)).transpose();
    Ok(EqualizerSet {
        kind: EqualizerKind::Lmmse,
        pre: None,
        post: Some(post),
        rank: n,
    })
}

/// `E ||G (H c + n) - c||^2` over equiprobable symbols and white noise of
/// per-dimension variance `N0/2`.
pub fn linear_receiver_mse(
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    constellation: &Constellation,
    n0: f64,
) -> f64 {
    let rc = symbol_second_moment(constellation);
    let e = g * h - DMatrix::identity(h.ncols(), h.ncols());
    (&e * &rc * e.transpose()).trace() + (n0 / 2.0) * (g * g.transpose()).trace()
}
