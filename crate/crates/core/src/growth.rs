//! Word growth of `π₁(Γ\Sol) ≅ ℤ² ⋊_A ℤ`.
//!
//! Exponential growth of the fundamental group is the computable witness of
//! energy hyperbolicity used here; the abelian group `ℤ²` serves as the
//! polynomial-growth control.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// 2×2 integer matrix, row-major.
pub type IntMatrix = [[i64; 2]; 2];

/// Largest word length accepted by [`ball_counts`].
pub const MAX_SEMIDIRECT_RADIUS: usize = 16;

/// Default cap on the number of stored group elements during BFS.
pub const DEFAULT_ELEMENT_BUDGET: usize = 50_000_000;

/// An element `(v, l)` of `ℤ² ⋊_A ℤ` with law `(v,l)(v′,l′) = (v + Aˡv′, l + l′)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub v: [i64; 2],
    pub l: i64,
}

impl GroupElement {
    pub const fn identity() -> Self {
        Self { v: [0, 0], l: 0 }
    }

    pub const fn new(v: [i64; 2], l: i64) -> Self {
        Self { v, l }
    }

    /// `self · other`; `None` on `i64` overflow.
    pub fn multiply(&self, other: &Self, a: &IntMatrix) -> Option<Self> {
        let moved = mat_pow_apply(a, self.l, other.v)?;
        Some(Self {
            v: [self.v[0].checked_add(moved[0])?, self.v[1].checked_add(moved[1])?],
            l: self.l.checked_add(other.l)?,
        })
    }

    /// `(v, l)⁻¹ = (−A⁻ˡ v, −l)`.
    pub fn inverse(&self, a: &IntMatrix) -> Option<Self> {
        let w = mat_pow_apply(a, self.l.checked_neg()?, self.v)?;
        Some(Self {
            v: [w[0].checked_neg()?, w[1].checked_neg()?],
            l: -self.l,
        })
    }
}

/// Checked `A · B`.
pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    let mut c = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0]
                .checked_mul(b[0][j])?
                .checked_add(a[i][1].checked_mul(b[1][j])?)?;
        }
    }
    Some(c)
}

/// Inverse of a determinant-one integer matrix.
pub fn unimodular_inverse(a: &IntMatrix) -> IntMatrix {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

/// Checked `Aᵉ` for any integer exponent (det A = 1 assumed for `e < 0`).
pub fn mat_pow(a: &IntMatrix, e: i64) -> Option<IntMatrix> {
    let base = if e < 0 { unimodular_inverse(a) } else { *a };
    let mut result = [[1, 0], [0, 1]];
    let mut b = base;
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            result = mat_mul(&result, &b)?;
        }
        k >>= 1;
        if k > 0 {
            b = mat_mul(&b, &b)?;
        }
    }
    Some(result)
}

/// Checked `Aᵉ v`.
pub fn mat_pow_apply(a: &IntMatrix, e: i64, v: [i64; 2]) -> Option<[i64; 2]> {
    if e == 0 {
        return Some(v);
    }
    let m = mat_pow(a, e)?;
    Some([
        m[0][0].checked_mul(v[0])?.checked_add(m[0][1].checked_mul(v[1])?)?,
        m[1][0].checked_mul(v[0])?.checked_add(m[1][1].checked_mul(v[1])?)?,
    ])
}

/// The symmetric generating set `{(±e₁,0), (±e₂,0), (0,±1)}`.
pub fn generators() -> [GroupElement; 6] {
    [
        GroupElement::new([1, 0], 0),
        GroupElement::new([-1, 0], 0),
        GroupElement::new([0, 1], 0),
        GroupElement::new([0, -1], 0),
        GroupElement::new([0, 0], 1),
        GroupElement::new([0, 0], -1),
    ]
}

/// Ball sizes `b_0..=b_{n_max}` in the Cayley graph of `ℤ² ⋊_A ℤ`.
pub fn ball_counts(a: &IntMatrix, n_max: usize, element_budget: usize) -> Result<Vec<u64>> {
    if n_max > MAX_SEMIDIRECT_RADIUS {
        return Err(LabError::BudgetExceeded(format!(
            "word length {n_max} exceeds the supported radius {MAX_SEMIDIRECT_RADIUS}"
        )));
    }
    let gens = generators();
    bfs_counts(n_max, element_budget, |g| {
        gens.iter()
            .map(|s| {
                g.multiply(s, a)
                    .ok_or_else(|| LabError::BudgetExceeded("group element overflowed i64".into()))
            })
            .collect()
    })
}

/// Ball sizes for the abelian control `ℤ²` with generators `(±e₁,0), (±e₂,0)`.
pub fn abelian_ball_counts(n_max: usize, element_budget: usize) -> Result<Vec<u64>> {
    let gens = &generators()[..4];
    bfs_counts(n_max, element_budget, |g| {
        Ok(gens
            .iter()
            .map(|s| GroupElement::new([g.v[0] + s.v[0], g.v[1] + s.v[1]], 0))
            .collect())
    })
}

fn bfs_counts<N>(n_max: usize, element_budget: usize, neighbours: N) -> Result<Vec<u64>>
where
    N: Fn(&GroupElement) -> Result<Vec<GroupElement>> + Sync,
{
    let mut seen: HashSet<GroupElement> = HashSet::new();
    seen.insert(GroupElement::identity());
    let mut frontier = vec![GroupElement::identity()];
    let mut counts = vec![1u64];
    for _ in 0..n_max {
        let candidates: Vec<Vec<GroupElement>> =
            frontier.par_iter().map(&neighbours).collect::<Result<_>>()?;
        let mut next = Vec::new();
        for g in candidates.into_iter().flatten() {
            if seen.insert(g) {
                next.push(g);
            }
        }
        if seen.len() > element_budget {
            return Err(LabError::BudgetExceeded(format!(
                "BFS stored {} elements (cap {element_budget})",
                seen.len()
            )));
        }
        counts.push(seen.len() as u64);
        frontier = next;
    }
    Ok(counts)
}
