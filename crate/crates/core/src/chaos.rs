//! Multi-index bookkeeping, normalized Hermite and Wick polynomials, and the
//! product-expansion coefficients of two chaos series.
//!
//! Hermite polynomials follow the probabilists' convention
//! `He_{n+1} = x He_n - n He_{n-1}` scaled by `1/sqrt(n!)`, so that
//! `E[H_m(Z) H_n(Z)] = delta_mn` for a standard Gaussian `Z`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest Hermite order accepted by [`hermite_normalized`]. Factorials up to
/// `24!` appear in the product coefficients and stay exact enough in `f64`.
pub const MAX_HERMITE_ORDER: u32 = 12;

/// Finitely supported order vector `alpha` over 1-based Gaussian modes.
///
/// Zero orders are never stored, so the empty map is the unique zero index and
/// derived equality is structural equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    orders: BTreeMap<u32, u32>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// First-order index `delta_mode`.
    pub fn unit(mode: u32) -> Self {
        Self::single(mode, 1)
    }

    /// Single-mode index with `alpha_mode = order`.
    pub fn single(mode: u32, order: u32) -> Self {
        Self::from_pairs([(mode, order)])
    }

    /// Builds an index from `(mode, order)` pairs; zero orders are dropped and
    /// repeated modes accumulate.
    ///
    /// # Panics
    /// If a mode number is 0 (modes are 1-based).
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut orders = BTreeMap::new();
        for (mode, order) in pairs {
            assert!(mode >= 1, "modes are 1-based");
            if order > 0 {
                *orders.entry(mode).or_insert(0) += order;
            }
        }
        Self { orders }
    }

    pub fn is_zero(&self) -> bool {
        self.orders.is_empty()
    }

    /// Total order `|alpha|`.
    pub fn total_order(&self) -> u32 {
        self.orders.values().sum()
    }

    pub fn order(&self, mode: u32) -> u32 {
        self.orders.get(&mode).copied().unwrap_or(0)
    }

    /// Iterates `(mode, order)` over the nonzero entries in mode order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.orders.iter().map(|(&m, &o)| (m, o))
    }

    /// Number of modes with nonzero order.
    pub fn support_len(&self) -> usize {
        self.orders.len()
    }

    /// The mode `i` if this index is exactly `delta_i`.
    pub fn as_unit(&self) -> Option<u32> {
        match self.orders.iter().next() {
            Some((&mode, &1)) if self.orders.len() == 1 => Some(mode),
            _ => None,
        }
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.iter().all(|(m, o)| o <= other.order(m))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex::from_pairs(self.iter().chain(other.iter()))
    }

    /// Componentwise difference, `None` unless `other <= self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex::from_pairs(
            self.iter().map(|(m, o)| (m, o - other.order(m))),
        ))
    }

    /// All `beta` with `beta <= self` componentwise, in lexicographic order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero()];
        for (mode, order) in self.iter() {
            let mut next = Vec::with_capacity(out.len() * (order as usize + 1));
            for base in &out {
                for k in 0..=order {
                    let mut b = base.clone();
                    if k > 0 {
                        b.orders.insert(mode, k);
                    }
                    next.push(b);
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.iter().map(|(m, o)| format!("{m}:{o}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// The diagonal (single-mode) truncation of the multi-index set.
///
/// Modes `1..=gaussian_count` carry first-order indices. Modes
/// `gaussian_count+1..=total_count` carry one index each whose order is the
/// mode number, capped at `higher_order_cap`. With the default cap of 1 the
/// truncation is purely Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationScheme {
    pub gaussian_count: u32,
    pub total_count: u32,
    pub higher_order_cap: u32,
}

impl TruncationScheme {
    pub fn new(gaussian_count: u32, total_count: u32, higher_order_cap: u32) -> Result<Self> {
        if total_count < gaussian_count {
            return Err(Error::InvalidArgument(format!(
                "total mode count {total_count} is smaller than the Gaussian count {gaussian_count}"
            )));
        }
        if higher_order_cap == 0 || higher_order_cap > MAX_HERMITE_ORDER {
            return Err(Error::InvalidArgument(format!(
                "higher-order cap must lie in 1..={MAX_HERMITE_ORDER}, got {higher_order_cap}"
            )));
        }
        Ok(Self {
            gaussian_count,
            total_count,
            higher_order_cap,
        })
    }

    /// Purely first-order truncation on `modes` Gaussian modes.
    pub fn gaussian(modes: u32) -> Self {
        Self {
            gaussian_count: modes,
            total_count: modes,
            higher_order_cap: 1,
        }
    }

    /// `0`, then `delta_1..delta_Itilde`, then the capped single-mode indices.
    pub fn enumerate(&self) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(1 + self.total_count as usize);
        out.push(MultiIndex::zero());
        for mode in 1..=self.gaussian_count {
            out.push(MultiIndex::unit(mode));
        }
        for mode in self.gaussian_count + 1..=self.total_count {
            out.push(MultiIndex::single(mode, mode.min(self.higher_order_cap)));
        }
        out
    }

    pub fn len(&self) -> usize {
        1 + self.total_count as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of Gaussian coordinates a sample must provide.
    pub fn mode_count(&self) -> usize {
        self.total_count as usize
    }
}

/// Position lookup for an enumerated truncation.
#[derive(Debug, Clone)]
pub struct IndexSet {
    indices: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.indices == other.indices
    }
}

impl IndexSet {
    pub fn new(indices: Vec<MultiIndex>) -> Self {
        let positions = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Self { indices, positions }
    }

    pub fn from_scheme(scheme: &TruncationScheme) -> Self {
        Self::new(scheme.enumerate())
    }

    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        self.positions.get(index).copied()
    }

    pub fn contains(&self, index: &MultiIndex) -> bool {
        self.positions.contains_key(index)
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Normalized probabilists' Hermite polynomial `He_n(x) / sqrt(n!)`.
pub fn hermite_normalized(order: u32, point: f64) -> Result<f64> {
    if order > MAX_HERMITE_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_HERMITE_ORDER,
        });
    }
    // Recurrence on the normalized family:
    // h_{n+1} = (x h_n - sqrt(n) h_{n-1}) / sqrt(n+1)
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 0..order {
        let nf = f64::from(n);
        let next = (point * cur - nf.sqrt() * prev) / (nf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Wick polynomial `T_alpha(xi) = prod_i H_{alpha_i}(xi_i)`; `xi[0]` holds
/// mode 1.
pub fn wick_eval(index: &MultiIndex, xi: &[f64]) -> Result<f64> {
    index.iter().try_fold(1.0, |acc, (mode, order)| {
        let value = xi.get(mode as usize - 1).ok_or_else(|| {
            Error::OutOfRange(format!(
                "index {index} needs mode {mode} but only {} values were supplied",
                xi.len()
            ))
        })?;
        Ok(acc * hermite_normalized(order, *value)?)
    })
}

/// Product-expansion coefficient
/// `C(theta, beta, p) = sqrt(C(theta, beta) C(theta - beta + p, p) C(beta + p, p))`
/// with binomials taken componentwise. Returns 0 unless `beta <= theta`.
pub fn product_coeff(theta: &MultiIndex, beta: &MultiIndex, p: &MultiIndex) -> f64 {
    let Some(rest) = theta.checked_sub(beta) else {
        return 0.0;
    };
    let left = rest.add(p);
    let right = beta.add(p);
    let mut product = 1.0;
    for (mode, order) in theta.iter() {
        product *= binomial(order, beta.order(mode));
    }
    for (mode, order) in p.iter() {
        product *= binomial(left.order(mode), order) * binomial(right.order(mode), order);
    }
    product.sqrt()
}

/// One term `coeff * u_left * d/dx u_right` of the projected nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTerm {
    pub left: MultiIndex,
    pub right: MultiIndex,
    pub coeff: f64,
}

/// Enumerates the `(beta, p)` double sum of `E[(u v) T_alpha]` restricted to
/// pairs whose factors `alpha - beta + p` and `beta + p` both lie in the
/// truncation. Sorted by `(left, right)`.
pub fn convolution_terms(
    alpha: &MultiIndex,
    scheme: &TruncationScheme,
) -> Result<Vec<ConvolutionTerm>> {
    convolution_terms_in(alpha, &IndexSet::from_scheme(scheme))
}

pub(crate) fn convolution_terms_in(
    alpha: &MultiIndex,
    set: &IndexSet,
) -> Result<Vec<ConvolutionTerm>> {
    if !set.contains(alpha) {
        return Err(Error::NotInTruncation(alpha.to_string()));
    }
    let mut terms = Vec::new();
    for beta in alpha.sub_indices() {
        let rest = alpha.checked_sub(&beta).expect("beta <= alpha");
        for right in set.indices() {
            let Some(p) = right.checked_sub(&beta) else {
                continue;
            };
            let left = rest.add(&p);
            if !set.contains(&left) {
                continue;
            }
            let coeff = product_coeff(alpha, &beta, &p);
            if coeff > 0.0 {
                terms.push(ConvolutionTerm {
                    left,
                    right: right.clone(),
                    coeff,
                });
            }
        }
    }
    terms.sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
    Ok(terms)
}
