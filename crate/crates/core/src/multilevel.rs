//! Level transfer operators and first-order coherent coarse models.
//!
//! The restriction acts on the x-block only. Each level applies the
//! full-weighting stencil `¼[2 1], ¼[1 2 1], …` which maps `n_i` entries to
//! `n_i / 2`; the prolongation is its exact transpose (`σ = 1`). Bucket
//! problems carry their error block through unchanged, so `R = diag(R_x, I)`.

use ndarray::{Array1, Array2};

use crate::error::{check_len, Error, Result};
use crate::linalg::LIPSCHITZ_SAFETY;
use crate::problem::{
    smoothed_l1_grad, smoothed_l1_value, CompositeProblem, Dictionary, L1LeastSquares, SmoothObjective,
    SmoothedView,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionChain {
    fine_len: usize,
    /// Padded x-block length at every level, finest first.
    level_dims: Vec<usize>,
    tail: usize,
}

/// Deepest chain a block of `n` entries supports: `⌊log₂ n⌋ + 1` levels.
pub fn max_depth(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (usize::BITS - n.leading_zeros()) as usize
    }
}

/// Chain with `levels` levels (the fine level included) over an x-block of
/// length `n`. The block is zero-padded to a multiple of `2^(levels−1)`;
/// padded coordinates are dropped again on prolongation.
pub fn build_chain(n: usize, levels: usize) -> Result<RestrictionChain> {
    if levels == 0 {
        return Err(Error::invalid("levels", "a chain needs at least one level"));
    }
    let depth = max_depth(n);
    if n == 0 || levels > depth {
        return Err(Error::ChainTooDeep {
            dim: n,
            requested: levels,
            max_depth: depth,
        });
    }
    let factor = 1usize << (levels - 1);
    let padded = n.div_ceil(factor) * factor;
    let level_dims = (0..levels).map(|i| padded >> i).collect();
    Ok(RestrictionChain {
        fine_len: n,
        level_dims,
        tail: 0,
    })
}

impl RestrictionChain {
    /// Chain matching a problem's layout: x-block of `A`'s width, plus the
    /// identity-carried error block for bucket instances.
    pub fn for_problem(problem: &L1LeastSquares, levels: usize) -> Result<Self> {
        let dict = problem.dictionary();
        let chain = build_chain(dict.atoms(), levels)?;
        Ok(if dict.is_bucket() {
            chain.with_tail(dict.rows())
        } else {
            chain
        })
    }

    /// Appends an identity-carried block of length `tail`.
    pub fn with_tail(mut self, tail: usize) -> Self {
        self.tail = tail;
        self
    }

    pub fn levels(&self) -> usize {
        self.level_dims.len()
    }

    pub fn is_identity(&self) -> bool {
        self.levels() == 1
    }

    pub fn level_dims(&self) -> &[usize] {
        &self.level_dims
    }

    /// Length of the unpadded fine x-block.
    pub fn fine_block(&self) -> usize {
        self.fine_len
    }

    pub fn coarse_block(&self) -> usize {
        *self.level_dims.last().expect("chain has at least one level")
    }

    pub fn tail(&self) -> usize {
        self.tail
    }

    pub fn fine_dim(&self) -> usize {
        self.fine_len + self.tail
    }

    pub fn coarse_dim(&self) -> usize {
        if self.is_identity() {
            self.fine_dim()
        } else {
            self.coarse_block() + self.tail
        }
    }

    /// Restriction of the x-block alone (`R_x x`).
    pub fn restrict_block(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.fine_len);
        if self.is_identity() {
            return x.to_vec();
        }
        let mut cur = vec![0.0; self.level_dims[0]];
        cur[..self.fine_len].copy_from_slice(x);
        for &len in &self.level_dims[1..] {
            let mut next = vec![0.0; len];
            next[0] = 0.25 * (2.0 * cur[0] + cur[1]);
            for j in 1..len {
                next[j] = 0.25 * (cur[2 * j - 1] + 2.0 * cur[2 * j] + cur[2 * j + 1]);
            }
            cur = next;
        }
        cur
    }

    /// Transpose of [`restrict_block`](Self::restrict_block).
    pub fn prolong_block(&self, xh: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            return xh.to_vec();
        }
        debug_assert_eq!(xh.len(), self.coarse_block());
        let mut cur = xh.to_vec();
        for i in (0..self.levels() - 1).rev() {
            let fine = self.level_dims[i];
            let mut next = vec![0.0; fine];
            next[0] += 0.5 * cur[0];
            next[1] += 0.25 * cur[0];
            for (j, &c) in cur.iter().enumerate().skip(1) {
                next[2 * j - 1] += 0.25 * c;
                next[2 * j] += 0.5 * c;
                next[2 * j + 1] += 0.25 * c;
            }
            cur = next;
        }
        cur.truncate(self.fine_len);
        cur
    }

    /// `R w`
    pub fn restrict(&self, w: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("restrict", self.fine_dim(), w.len())?;
        Ok(self.restrict_unchecked(w))
    }

    /// `P w_H = Rᵀ w_H`
    pub fn prolong(&self, wh: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("prolong", self.coarse_dim(), wh.len())?;
        Ok(self.prolong_unchecked(wh))
    }

    pub(crate) fn restrict_unchecked(&self, w: &Array1<f64>) -> Array1<f64> {
        if self.is_identity() {
            return w.clone();
        }
        let w = w.as_standard_layout();
        let ws = w.as_slice().expect("standard layout");
        let mut out = self.restrict_block(&ws[..self.fine_len]);
        out.extend_from_slice(&ws[self.fine_len..]);
        Array1::from(out)
    }

    pub(crate) fn prolong_unchecked(&self, wh: &Array1<f64>) -> Array1<f64> {
        if self.is_identity() {
            return wh.clone();
        }
        let wh = wh.as_standard_layout();
        let ws = wh.as_slice().expect("standard layout");
        let nh = self.coarse_block();
        let mut out = self.prolong_block(&ws[..nh]);
        out.extend_from_slice(&ws[nh..]);
        Array1::from(out)
    }

    /// Dense `R` (coarse_dim × fine_dim). Intended for tests and small problems.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut r = Array2::zeros((self.coarse_dim(), self.fine_dim()));
        let mut e = Array1::zeros(self.fine_dim());
        for j in 0..self.fine_dim() {
            e[j] = 1.0;
            r.column_mut(j).assign(&self.restrict_unchecked(&e));
            e[j] = 0.0;
        }
        r
    }
}

/// Chain-dependent coarse data, computed once: `A_H = A R_xᵀ` and the
/// spectral estimate of `[A_H, I]ᵀ[A_H, I]`.
#[derive(Debug, Clone)]
pub struct CoarseSpace {
    chain: RestrictionChain,
    dict: Dictionary,
    gram: f64,
}

impl CoarseSpace {
    pub fn new(problem: &L1LeastSquares, chain: RestrictionChain) -> Result<Self> {
        let fine = problem.dictionary();
        check_len("chain fine dimension", problem.dim(), chain.fine_dim())?;
        check_len("chain identity block", if fine.is_bucket() { fine.rows() } else { 0 }, chain.tail())?;

        let a = fine.matrix();
        let nh = if chain.is_identity() { fine.atoms() } else { chain.coarse_block() };
        let mut ah = Array2::zeros((a.nrows(), nh));
        for (i, row) in a.outer_iter().enumerate() {
            let row = row.to_vec();
            let restricted = chain.restrict_block(&row);
            ah.row_mut(i).assign(&Array1::from(restricted));
        }
        let dict = Dictionary::new(ah, fine.is_bucket());
        let gram = dict.gram_norm()?;
        Ok(CoarseSpace { chain, dict, gram })
    }

    pub fn chain(&self) -> &RestrictionChain {
        &self.chain
    }

    /// `A_H`
    pub fn coarse_matrix(&self) -> &Array2<f64> {
        self.dict.matrix()
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    /// Power-iteration estimate of `‖[A_H I]ᵀ[A_H I]‖₂` before the safety factor.
    pub fn gram_norm(&self) -> f64 {
        self.gram
    }
}

/// `F_H(w) = ½‖[A_H I]w − b‖² + λΣ√(μ_H² + w_j²) + ⟨v_H, w⟩`.
#[derive(Debug, Clone)]
pub struct CoarseModel<'a> {
    space: &'a CoarseSpace,
    b: &'a Array1<f64>,
    lambda: f64,
    mu_h: f64,
    v_h: Array1<f64>,
    anchor: Array1<f64>,
    lipschitz: f64,
}

/// Coarse model anchored at `R x_k` whose correction term makes
/// `∇F_H(R x_k) = R ∇F_μ(x_k)`.
pub fn build_coarse_model<'a>(
    problem: &'a L1LeastSquares,
    space: &'a CoarseSpace,
    x_k: &Array1<f64>,
    mu_fine: f64,
    mu_h: f64,
) -> Result<CoarseModel<'a>> {
    check_len("coarse model anchor", problem.dim(), x_k.len())?;
    let view = SmoothedView::new(problem, mu_fine)?;
    let grad = view.grad(x_k);
    build_coarse_model_with_grad(problem, space, x_k, &grad, mu_h)
}

/// As [`build_coarse_model`], reusing an already computed `∇F_μ(x_k)`.
pub fn build_coarse_model_with_grad<'a>(
    problem: &'a L1LeastSquares,
    space: &'a CoarseSpace,
    x_k: &Array1<f64>,
    smoothed_grad: &Array1<f64>,
    mu_h: f64,
) -> Result<CoarseModel<'a>> {
    if !(mu_h > 0.0 && mu_h.is_finite()) {
        return Err(Error::invalid("mu_H", format!("coarse smoothing must be positive, got {mu_h}")));
    }
    check_len("coarse model gradient", problem.dim(), smoothed_grad.len())?;
    let chain = space.chain();
    let anchor = chain.restrict(x_k)?;
    let target = chain.restrict_unchecked(smoothed_grad);
    let lambda = problem.lambda();
    let mut model = CoarseModel {
        space,
        b: problem.observation(),
        lambda,
        mu_h,
        v_h: Array1::zeros(anchor.len()),
        anchor,
        lipschitz: space.gram * LIPSCHITZ_SAFETY + lambda / mu_h,
    };
    let (_, base) = model.value_and_grad(&model.anchor);
    model.v_h = target - base;
    Ok(model)
}

impl CoarseModel<'_> {
    pub fn correction(&self) -> &Array1<f64> {
        &self.v_h
    }

    /// Replaces `v_H`; the rest of the model is unchanged.
    pub fn with_correction(mut self, v_h: Array1<f64>) -> Result<Self> {
        check_len("coarse correction", self.v_h.len(), v_h.len())?;
        self.v_h = v_h;
        Ok(self)
    }

    /// `R x_k`, the starting point of the coarse solve.
    pub fn anchor(&self) -> &Array1<f64> {
        &self.anchor
    }

    pub fn mu(&self) -> f64 {
        self.mu_h
    }

    pub fn space(&self) -> &CoarseSpace {
        self.space
    }

    pub fn coarse_value(&self, w: &Array1<f64>) -> Result<f64> {
        check_len("coarse_value", self.v_h.len(), w.len())?;
        Ok(SmoothObjective::value(self, w))
    }

    pub fn coarse_grad(&self, w: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("coarse_grad", self.v_h.len(), w.len())?;
        Ok(SmoothObjective::grad(self, w))
    }

    /// `L_H = 1.01·‖[A_H I]ᵀ[A_H I]‖₂ + λ/μ_H`.
    pub fn coarse_lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl SmoothObjective for CoarseModel<'_> {
    fn dim(&self) -> usize {
        self.v_h.len()
    }

    fn value(&self, w: &Array1<f64>) -> f64 {
        let mut r = self.space.dict.apply(w);
        r -= self.b;
        0.5 * r.dot(&r) + smoothed_l1_value(w.view(), self.lambda, self.mu_h) + self.v_h.dot(w)
    }

    fn value_and_grad(&self, w: &Array1<f64>) -> (f64, Array1<f64>) {
        let mut r = self.space.dict.apply(w);
        r -= self.b;
        let value = 0.5 * r.dot(&r) + smoothed_l1_value(w.view(), self.lambda, self.mu_h) + self.v_h.dot(w);
        let mut grad = self.space.dict.apply_adjoint(&r);
        grad += &smoothed_l1_grad(w.view(), self.lambda, self.mu_h);
        grad += &self.v_h;
        (value, grad)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
