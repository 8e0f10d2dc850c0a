//! Candidate collections, criterion-minimizing selection, and greedy
//! elimination of regressor blocks.
//!
//! Ties among minimizers go to the smaller model, then to the smaller mask in
//! lexicographic order.

use serde::{Deserialize, Serialize};

use crate::dgp::{Dgp, TrainingSample};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix, PivotedQr};
use crate::lsq::{criterion_from_rss, criterion_value, fit_model, fit_rss, Criterion, ModelMask};
use crate::oracle::prediction_error;
use crate::scalar::Scalar;

/// Finite list of candidate models over a common set of `p` regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModelMask>", into = "Vec<ModelMask>")]
pub struct ModelCollection {
    masks: Vec<ModelMask>,
}

impl TryFrom<Vec<ModelMask>> for ModelCollection {
    type Error = Error;
    fn try_from(masks: Vec<ModelMask>) -> Result<Self> {
        ModelCollection::new(masks)
    }
}

impl From<ModelCollection> for Vec<ModelMask> {
    fn from(c: ModelCollection) -> Self {
        c.masks
    }
}

impl ModelCollection {
    pub fn new(masks: Vec<ModelMask>) -> Result<Self> {
        let first = masks.first().ok_or(Error::EmptyCollection)?;
        let p = first.p();
        if let Some(m) = masks.iter().find(|m| m.p() != p) {
            return Err(Error::DimensionMismatch { expected: p + 1, found: m.p() + 1 });
        }
        Ok(Self { masks })
    }

    /// Nested models made of the leading `k` coefficients for each `k` in `sizes`.
    pub fn nested(p: usize, sizes: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(sizes.into_iter().map(|k| ModelMask::leading(p, k)).collect::<Result<_>>()?)
    }

    pub fn masks(&self) -> &[ModelMask] {
        &self.masks
    }

    /// `#M`.
    pub fn count(&self) -> usize {
        self.masks.len()
    }

    /// `|M| = max |m|`.
    pub fn max_size(&self) -> usize {
        self.masks.iter().map(ModelMask::size).max().unwrap_or(0)
    }

    pub fn p(&self) -> usize {
        self.masks[0].p()
    }

    /// Checks `|m| < n − 1` for every member.
    pub fn check_size(&self, n: usize) -> Result<()> {
        self.masks.iter().try_for_each(|m| m.check_size(n))
    }
}

/// A selected model with its criterion value and its position in the
/// collection or path.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub mask: ModelMask,
    pub value: T,
    pub index: usize,
}

/// Index of the minimum of `values` under the tie rule. NaN values never win
/// against a number.
pub fn argmin_with_ties<T: Scalar>(values: &[T], masks: &[&ModelMask]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..values.len() {
        let better = match best {
            None => true,
            Some(b) => {
                let (v, w) = (values[i], values[b]);
                if w.is_nan() {
                    !v.is_nan()
                } else if v < w {
                    true
                } else if v == w {
                    (masks[i].size(), masks[i]) < (masks[b].size(), masks[b])
                } else {
                    false
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// `m̂ = argmin` of `kind` over the collection.
pub fn select_min<T: Scalar>(
    sample: &TrainingSample<T>,
    collection: &ModelCollection,
    kind: Criterion,
) -> Result<Selection<T>> {
    collection.check_size(sample.n())?;
    let values = collection
        .masks
        .iter()
        .map(|m| fit_model(sample, m).map(|f| criterion_value(&f, kind)))
        .collect::<Result<Vec<T>>>()?;
    pick(&values, collection.masks.iter().collect())
}

fn pick<T: Scalar>(values: &[T], masks: Vec<&ModelMask>) -> Result<Selection<T>> {
    let index = argmin_with_ties(values, &masks).ok_or(Error::EmptyCollection)?;
    Ok(Selection { mask: masks[index].clone(), value: values[index], index })
}

/// Which true quantity [`oracle_best`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTarget {
    /// `m_ρ`: minimal conditional mean squared prediction error.
    Rho,
    /// `m_δ`: minimal conditional prediction error variance.
    Delta,
}

/// `m_ρ` or `m_δ` over the collection, from the true law of each fit's
/// prediction error.
pub fn oracle_best<T: Scalar>(
    dgp: &Dgp<T>,
    sample: &TrainingSample<T>,
    collection: &ModelCollection,
    target: OracleTarget,
) -> Result<Selection<T>> {
    collection.check_size(sample.n())?;
    let values = collection
        .masks
        .iter()
        .map(|m| {
            let fit = fit_model(sample, m)?;
            let law = prediction_error(dgp, &fit.beta_hat)?;
            Ok(match target {
                OracleTarget::Rho => law.rho_sq(),
                OracleTarget::Delta => law.delta_sq,
            })
        })
        .collect::<Result<Vec<T>>>()?;
    pick(&values, collection.masks.iter().collect())
}

/// Disjoint, nonempty groups of regressor positions (`1..=p`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    p: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(p: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidBlocks("no blocks".into()));
        }
        let mut seen = vec![false; p + 1];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidBlocks(format!("block {b} is empty")));
            }
            for &j in block {
                if j == 0 || j > p {
                    return Err(Error::InvalidBlocks(format!("block {b} has position {j} outside 1..={p}")));
                }
                if seen[j] {
                    return Err(Error::InvalidBlocks(format!("position {j} appears in more than one block")));
                }
                seen[j] = true;
            }
        }
        Ok(Self { p, blocks })
    }

    /// `count` consecutive blocks of `width` regressors starting at position 1.
    pub fn contiguous(count: usize, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidBlocks("block width must be >= 1".into()));
        }
        let blocks = (0..count).map(|b| (b * width + 1..=(b + 1) * width).collect()).collect();
        Self::new(count * width, blocks)
    }

    /// Same blocks over a larger regressor set.
    pub fn with_p(self, p: usize) -> Result<Self> {
        Self::new(p, self.blocks)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    /// Intercept plus every blocked regressor.
    pub fn full_mask(&self) -> ModelMask {
        let mut include = vec![false; self.p + 1];
        include[0] = true;
        for &j in self.blocks.iter().flatten() {
            include[j] = true;
        }
        ModelMask::new(include).expect("intercept set")
    }
}

/// Nested models from the full blocked model down to the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath<T> {
    /// Most complex first; `#blocks + 1` entries.
    pub visited: Vec<ModelMask>,
    pub rss_path: Vec<T>,
    /// Block removed at each step.
    pub elimination_order: Vec<usize>,
    /// Least-squares coefficients (length `p + 1`) of each visited model.
    pub beta_path: Vec<Vec<T>>,
}

/// How [`greedy_block_path`] evaluates candidate removals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationStrategy {
    /// One QR of the full model, then rank-`w` downdates of the inverse Gram
    /// matrix. Falls back to `Refit` if the full model is rank deficient.
    #[default]
    Downdate,
    /// Fresh QR fit of every candidate at every step.
    Refit,
}

/// Repeatedly removes the block whose removal increases RSS least (ties: lowest
/// block index) until only the intercept remains.
pub fn greedy_block_path<T: Scalar>(
    sample: &TrainingSample<T>,
    blocks: &BlockPartition,
    strategy: EliminationStrategy,
) -> Result<GreedyPath<T>> {
    if blocks.p() != sample.p() {
        return Err(Error::InvalidBlocks(format!(
            "partition covers p = {} regressors but the sample has {}",
            blocks.p(),
            sample.p()
        )));
    }
    let full = blocks.full_mask();
    full.check_size(sample.n())?;
    if strategy == EliminationStrategy::Downdate {
        if let Some(path) = downdate_path(sample, blocks, &full)? {
            return Ok(path);
        }
    }
    refit_path(sample, blocks, &full)
}

fn without_block(mask: &ModelMask, block: &[usize]) -> ModelMask {
    let mut include = mask.include().to_vec();
    for &j in block {
        include[j] = false;
    }
    ModelMask::new(include).expect("intercept kept")
}

fn refit_path<T: Scalar>(sample: &TrainingSample<T>, blocks: &BlockPartition, full: &ModelMask) -> Result<GreedyPath<T>> {
    let first = fit_model(sample, full)?;
    let mut current = full.clone();
    let mut remaining: Vec<usize> = (0..blocks.len()).collect();
    let mut path = GreedyPath {
        visited: vec![current.clone()],
        rss_path: vec![first.rss],
        elimination_order: Vec::with_capacity(blocks.len()),
        beta_path: vec![first.beta_hat],
    };
    while !remaining.is_empty() {
        let mut best: Option<(usize, T)> = None;
        for (pos, &b) in remaining.iter().enumerate() {
            let rss = fit_rss(sample, &without_block(&current, blocks.block(b)))?;
            if best.is_none_or(|(_, r)| rss < r) {
                best = Some((pos, rss));
            }
        }
        let (pos, _) = best.expect("nonempty");
        let b = remaining.remove(pos);
        current = without_block(&current, blocks.block(b));
        let fit = fit_model(sample, &current)?;
        // keep the path monotone against rounding in separate factorizations
        let prev = *path.rss_path.last().expect("nonempty");
        path.rss_path.push(fit.rss.max(prev));
        path.visited.push(current.clone());
        path.elimination_order.push(b);
        path.beta_path.push(fit.beta_hat);
    }
    Ok(path)
}

/// Removing coordinates `B` from a least-squares fit with inverse Gram `H`
/// raises RSS by `β_Bᵀ H_BB⁻¹ β_B` and moves the remaining coefficients by
/// `−H_RB H_BB⁻¹ β_B`; `H` of the reduced fit is the Schur complement.
fn downdate_path<T: Scalar>(
    sample: &TrainingSample<T>,
    blocks: &BlockPartition,
    full: &ModelMask,
) -> Result<Option<GreedyPath<T>>> {
    let cols = full.indices();
    let qr = PivotedQr::from_columns(sample.x(), &cols, sample.y())?;
    let Some(mut h) = qr.inverse_gram() else {
        return Ok(None);
    };
    let first = fit_model(sample, full)?;
    let p = sample.p();
    // local position of each regressor within `cols`
    let mut local = vec![usize::MAX; p + 1];
    for (i, &j) in cols.iter().enumerate() {
        local[j] = i;
    }
    let mut beta: Vec<T> = cols.iter().map(|&j| first.beta_hat[j]).collect();
    let mut active = vec![true; cols.len()];
    let mut current = full.clone();
    let mut rss = first.rss;
    let mut remaining: Vec<usize> = (0..blocks.len()).collect();
    let mut path = GreedyPath {
        visited: vec![current.clone()],
        rss_path: vec![rss],
        elimination_order: Vec::with_capacity(blocks.len()),
        beta_path: vec![first.beta_hat],
    };
    while !remaining.is_empty() {
        let mut best: Option<(usize, T, Cholesky<T>)> = None;
        for (pos, &b) in remaining.iter().enumerate() {
            let idx: Vec<usize> = blocks.block(b).iter().map(|&j| local[j]).collect();
            let Ok(ch) = Cholesky::new(&h.select(&idx, &idx)) else {
                return Ok(None);
            };
            let bb: Vec<T> = idx.iter().map(|&i| beta[i]).collect();
            let delta = ch.inverse_quadratic_form(&bb).max(T::zero());
            if best.as_ref().is_none_or(|(_, d, _)| delta < *d) {
                best = Some((pos, delta, ch));
            }
        }
        let (pos, delta, ch) = best.expect("nonempty");
        let b = remaining.remove(pos);
        let idx: Vec<usize> = blocks.block(b).iter().map(|&j| local[j]).collect();
        for &i in &idx {
            active[i] = false;
        }
        let rest: Vec<usize> = (0..cols.len()).filter(|&i| active[i]).collect();
        // G = H_RB H_BB⁻¹, one column solve per remaining row
        let w = idx.len();
        let mut g = Matrix::zeros(rest.len(), w);
        for (r, &i) in rest.iter().enumerate() {
            let hrb: Vec<T> = idx.iter().map(|&k| h[(i, k)]).collect();
            let sol = ch.solve(&hrb);
            g.row_mut(r).copy_from_slice(&sol);
        }
        let beta_b: Vec<T> = idx.iter().map(|&i| beta[i]).collect();
        for (r, &i) in rest.iter().enumerate() {
            let gr = g.row(r);
            beta[i] -= gr.iter().zip(&beta_b).map(|(&a, &c)| a * c).sum::<T>();
            for &k in &rest[r..] {
                let upd: T = gr.iter().zip(&idx).map(|(&a, &l)| a * h[(l, k)]).sum();
                h[(i, k)] -= upd;
                if k != i {
                    h[(k, i)] = h[(i, k)];
                }
            }
        }
        for &i in &idx {
            beta[i] = T::zero();
        }
        rss += delta;
        current = without_block(&current, blocks.block(b));
        let mut full_beta = vec![T::zero(); p + 1];
        for (i, &j) in cols.iter().enumerate() {
            if active[i] {
                full_beta[j] = beta[i];
            }
        }
        path.visited.push(current.clone());
        path.rss_path.push(rss);
        path.elimination_order.push(b);
        path.beta_path.push(full_beta);
    }
    Ok(Some(path))
}

/// `m̂_g`: minimizer of `ρ̂²` among the visited models.
pub fn select_on_path<T: Scalar>(sample: &TrainingSample<T>, path: &GreedyPath<T>) -> Result<Selection<T>> {
    select_on_path_by(sample.n(), path, Criterion::RhoHatSq)
}

/// Minimizer of `kind` among the visited models, from the stored RSS values.
pub fn select_on_path_by<T: Scalar>(n: usize, path: &GreedyPath<T>, kind: Criterion) -> Result<Selection<T>> {
    if path.visited.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let values: Vec<T> = path
        .visited
        .iter()
        .zip(&path.rss_path)
        .map(|(m, &rss)| {
            m.check_size(n)?;
            Ok(criterion_from_rss(kind, rss, n, m.size()))
        })
        .collect::<Result<_>>()?;
    pick(&values, path.visited.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{Covariance, DgpSpec};
    use crate::rng::substream;

    fn dgp(beta: Vec<f64>) -> Dgp<f64> {
        let p = beta.len();
        DgpSpec { p, beta0: 1.0, beta, gamma: vec![0.5; p], sigma_x: Covariance::Geometric { r: 0.3 }, sigma_u: 1.0 }
            .build()
            .unwrap()
    }

    #[test]
    fn tie_rule() {
        let a = ModelMask::from_indices(3, &[1, 2]).unwrap();
        let b = ModelMask::from_indices(3, &[3]).unwrap();
        let c = ModelMask::from_indices(3, &[2]).unwrap();
        // equal sizes: [T,F,F,T] < [T,F,T,F]
        assert_eq!(argmin_with_ties(&[1.0, 1.0, 1.0], &[&a, &b, &c]), Some(1));
        assert_eq!(argmin_with_ties(&[1.0, 1.0, 1.0], &[&a, &c, &b]), Some(2));
        assert_eq!(argmin_with_ties(&[1.0, 1.0], &[&a, &b]), Some(1));
        assert_eq!(argmin_with_ties(&[f64::NAN, 2.0], &[&a, &b]), Some(1));
        assert_eq!(argmin_with_ties::<f64>(&[], &[]), None);
    }

    #[test]
    fn collection_rules() {
        assert!(matches!(ModelCollection::new(vec![]), Err(Error::EmptyCollection)));
        let c = ModelCollection::nested(30, 1..=20).unwrap();
        assert_eq!((c.count(), c.max_size()), (20, 20));
        assert!(c.check_size(21).is_err());
        assert!(c.check_size(22).is_ok());
        assert!(ModelCollection::new(vec![ModelMask::full(2), ModelMask::full(3)]).is_err());
    }

    #[test]
    fn partition_rules() {
        assert!(BlockPartition::new(4, vec![vec![1, 2], vec![2, 3]]).is_err());
        assert!(BlockPartition::new(4, vec![vec![0]]).is_err());
        assert!(BlockPartition::new(4, vec![vec![]]).is_err());
        let bp = BlockPartition::contiguous(2, 3).unwrap();
        assert_eq!(bp.block(1), &[4, 5, 6]);
        assert_eq!(bp.full_mask().size(), 7);
        let wider = bp.with_p(8).unwrap();
        assert_eq!(wider.full_mask().include()[7..], [false, false]);
    }

    #[test]
    fn single_block_path() {
        let d = dgp(vec![1.0, 0.5, 0.0]);
        let s = d.sample_training(20, &mut substream(1, 0)).unwrap();
        let bp = BlockPartition::contiguous(1, 3).unwrap();
        let path = greedy_block_path(&s, &bp, EliminationStrategy::Downdate).unwrap();
        assert_eq!(path.visited, vec![ModelMask::full(3), ModelMask::intercept_only(3)]);
        assert_eq!(path.elimination_order, vec![0]);
    }

    #[test]
    fn downdate_matches_refit() {
        let d = dgp(vec![1.0, 0.5, 0.0, 0.0, -0.7, 0.2, 0.0, 0.1, 0.3]);
        let bp = BlockPartition::contiguous(3, 3).unwrap();
        for rep in 0..10 {
            let s = d.sample_training(40, &mut substream(2, rep)).unwrap();
            let a = greedy_block_path(&s, &bp, EliminationStrategy::Downdate).unwrap();
            let b = greedy_block_path(&s, &bp, EliminationStrategy::Refit).unwrap();
            assert_eq!(a.visited, b.visited);
            for (x, y) in a.rss_path.iter().zip(&b.rss_path) {
                assert!((x - y).abs() <= 1e-9 * y.max(1.0));
            }
            for (u, v) in a.beta_path.iter().zip(&b.beta_path) {
                for (x, y) in u.iter().zip(v) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn selection_ignores_response_scale() {
        let d = dgp(vec![1.0, 0.0, 0.4, 0.0]);
        let coll = ModelCollection::nested(4, 1..=5).unwrap();
        let s = d.sample_training(30, &mut substream(3, 0)).unwrap();
        let a = select_min(&s, &coll, Criterion::RhoHatSq).unwrap();
        let b = select_min(&s.scale_response(7.5), &coll, Criterion::RhoHatSq).unwrap();
        assert_eq!(a.mask, b.mask);
        let single = ModelCollection::new(vec![ModelMask::full(4)]).unwrap();
        assert_eq!(oracle_best(&d, &s, &single, OracleTarget::Rho).unwrap().mask, ModelMask::full(4));
    }
}
