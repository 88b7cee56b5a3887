//! Truncated spinor basis and block-sparse operators.
//!
//! A basis vector `v^j_{x,y,s}` is stored with `two_j = 2j`. Operators keep
//! their entries grouped by the change in `2j` and the spin sectors of source
//! and target, which is the natural structure of every operator built from the
//! representation: weighted shifts by `±1` in `2j` and diagonal multipliers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisVector {
    pub two_j: u32,
    pub s: Spin,
    pub x: u32,
    pub y: u32,
}

impl BasisVector {
    /// Returns `None` when the indices fall outside the allowed ranges.
    pub fn new(two_j: i64, x: i64, y: i64, s: Spin) -> Option<Self> {
        if two_j < 0 || x < 0 || y < 0 || x > two_j {
            return None;
        }
        let y_max = match s {
            Spin::Up => two_j + 1,
            Spin::Down => two_j - 1,
        };
        if y > y_max {
            return None;
        }
        Some(Self {
            two_j: two_j as u32,
            x: x as u32,
            y: y as u32,
            s,
        })
    }

    pub fn is_valid(&self) -> bool {
        Self::new(self.two_j as i64, self.x as i64, self.y as i64, self.s).is_some()
    }

    /// `|D|`-eigenvalue: `2j + 3/2` on up vectors, `2j + 1/2` on down vectors.
    pub fn abs_eigenvalue(&self) -> f64 {
        match self.s {
            Spin::Up => self.two_j as f64 + 1.5,
            Spin::Down => self.two_j as f64 + 0.5,
        }
    }

    /// Signed `D`-eigenvalue.
    pub fn eigenvalue(&self) -> f64 {
        self.s.sign() * self.abs_eigenvalue()
    }
}

impl fmt::Display for BasisVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.s {
            Spin::Up => "up",
            Spin::Down => "dn",
        };
        write!(f, "v[2j={},x={},y={},{}]", self.two_j, self.x, self.y, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub max_two_j: u32,
    pub guard: u32,
}

impl Truncation {
    pub fn new(max_two_j: u32, guard: u32) -> Result<Self> {
        if guard >= max_two_j && !(guard == 0 && max_two_j == 0) {
            return Err(Error::InvalidTruncation(format!(
                "guard {guard} must be smaller than max_two_j {max_two_j}"
            )));
        }
        Ok(Self { max_two_j, guard })
    }

    /// Highest level on which identity checks are asserted.
    pub fn interior_max(&self) -> u32 {
        self.max_two_j - self.guard
    }

    pub fn level_dimension(two_j: u32) -> usize {
        let n = two_j as usize;
        (n + 1) * (n + 2) + (n + 1) * n
    }

    pub fn up_dimension(two_j: u32) -> usize {
        let n = two_j as usize;
        (n + 1) * (n + 2)
    }

    pub fn dimension(&self) -> usize {
        (0..=self.max_two_j).map(Self::level_dimension).sum()
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "max_two_j={}, guard={}", self.max_two_j, self.guard)
    }
}

/// Deterministically ordered basis, lexicographic in `(two_j, s, x, y)`.
pub fn enumerate_basis(trunc: Truncation) -> Vec<BasisVector> {
    let mut out = Vec::with_capacity(trunc.dimension());
    for two_j in 0..=trunc.max_two_j {
        for s in Spin::BOTH {
            let y_count = match s {
                Spin::Up => two_j + 2,
                Spin::Down => two_j,
            };
            for x in 0..=two_j {
                for y in 0..y_count {
                    out.push(BasisVector { two_j, x, y, s });
                }
            }
        }
    }
    out
}

/// The truncated Hilbert space with an arithmetic index map.
#[derive(Debug)]
pub struct Space {
    trunc: Truncation,
    basis: Vec<BasisVector>,
    level_offset: Vec<usize>,
}

impl Space {
    pub fn new(trunc: Truncation) -> Arc<Self> {
        let basis = enumerate_basis(trunc);
        let mut level_offset = Vec::with_capacity(trunc.max_two_j as usize + 2);
        let mut acc = 0;
        for two_j in 0..=trunc.max_two_j {
            level_offset.push(acc);
            acc += Truncation::level_dimension(two_j);
        }
        level_offset.push(acc);
        Arc::new(Self {
            trunc,
            basis,
            level_offset,
        })
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisVector] {
        &self.basis
    }

    #[inline]
    pub fn vector(&self, index: usize) -> BasisVector {
        self.basis[index]
    }

    pub fn index_of(&self, v: &BasisVector) -> Option<usize> {
        if v.two_j > self.trunc.max_two_j || !v.is_valid() {
            return None;
        }
        let n = v.two_j as usize;
        let base = self.level_offset[n];
        let (x, y) = (v.x as usize, v.y as usize);
        Some(match v.s {
            Spin::Up => base + x * (n + 2) + y,
            Spin::Down => base + (n + 1) * (n + 2) + x * n + y,
        })
    }

    /// Index range of one `2j`-level.
    pub fn level_range(&self, two_j: u32) -> std::ops::Range<usize> {
        let n = two_j as usize;
        self.level_offset[n]..self.level_offset[n + 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockKey {
    /// Change of `2j` from source to target.
    pub shift: i32,
    pub source: Spin,
    pub target: Spin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub row: u32,
    pub col: u32,
    pub value: C64,
}

/// One entry of the debug dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    pub row: BasisVector,
    pub col: BasisVector,
    pub re: f64,
    pub im: f64,
}

/// Sparse operator on a truncated space; entries sorted by `(col, row)`
/// inside each block, exact zeros removed.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    space: Arc<Space>,
    blocks: BTreeMap<BlockKey, Vec<Entry>>,
}

fn canonicalize(mut entries: Vec<Entry>) -> Vec<Entry> {
    entries.sort_by(|a, b| (a.col, a.row).cmp(&(b.col, b.row)));
    let mut out: Vec<Entry> = Vec::with_capacity(entries.len());
    for e in entries {
        match out.last_mut() {
            Some(last) if last.row == e.row && last.col == e.col => last.value += e.value,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.value != C64::new(0.0, 0.0));
    out
}

impl BlockOperator {
    pub fn zero(space: &Arc<Space>) -> Self {
        Self {
            space: Arc::clone(space),
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(space: &Arc<Space>) -> Self {
        Self::diagonal(space, |_| C64::new(1.0, 0.0))
    }

    pub fn diagonal(space: &Arc<Space>, f: impl Fn(&BasisVector) -> C64) -> Self {
        let entries = space
            .basis()
            .iter()
            .enumerate()
            .map(|(i, v)| Entry {
                row: i as u32,
                col: i as u32,
                value: f(v),
            })
            .collect();
        Self::from_entries(space, entries)
    }

    /// Builds an operator from `(row, col, value)` triples, summing repeats.
    pub fn from_entries(space: &Arc<Space>, entries: Vec<Entry>) -> Self {
        let mut grouped: BTreeMap<BlockKey, Vec<Entry>> = BTreeMap::new();
        for e in entries {
            let r = space.vector(e.row as usize);
            let c = space.vector(e.col as usize);
            let key = BlockKey {
                shift: r.two_j as i32 - c.two_j as i32,
                source: c.s,
                target: r.s,
            };
            grouped.entry(key).or_default().push(e);
        }
        let blocks = grouped
            .into_iter()
            .map(|(k, v)| (k, canonicalize(v)))
            .filter(|(_, v)| !v.is_empty())
            .collect();
        Self {
            space: Arc::clone(space),
            blocks,
        }
    }

    /// Builds an operator column by column from an action on basis vectors.
    /// Targets outside the truncation are dropped.
    pub fn from_action(
        space: &Arc<Space>,
        action: impl Fn(&BasisVector) -> Vec<(BasisVector, f64)> + Sync,
    ) -> Self {
        let entries: Vec<Entry> = space
            .basis()
            .par_iter()
            .enumerate()
            .flat_map_iter(|(col, v)| {
                action(v).into_iter().filter_map(move |(t, c)| {
                    space.index_of(&t).map(|row| Entry {
                        row: row as u32,
                        col: col as u32,
                        value: C64::new(c, 0.0),
                    })
                })
            })
            .collect();
        Self::from_entries(space, entries)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn truncation(&self) -> Truncation {
        self.space.truncation()
    }

    pub fn blocks(&self) -> &BTreeMap<BlockKey, Vec<Entry>> {
        &self.blocks
    }

    pub fn nnz(&self) -> usize {
        self.blocks.values().map(Vec::len).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.blocks.values().flatten()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || self.truncation() == other.truncation() {
            Ok(())
        } else {
            Err(Error::TruncationMismatch {
                left: self.truncation().to_string(),
                right: other.truncation().to_string(),
            })
        }
    }

    /// `⟨row| A |col⟩`.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        let r = self.space.vector(row);
        let c = self.space.vector(col);
        let key = BlockKey {
            shift: r.two_j as i32 - c.two_j as i32,
            source: c.s,
            target: r.s,
        };
        self.blocks
            .get(&key)
            .and_then(|es| {
                es.binary_search_by(|e| (e.col, e.row).cmp(&(col as u32, row as u32)))
                    .ok()
                    .map(|i| es[i].value)
            })
            .unwrap_or_default()
    }

    /// Nonzero entries of column `col`, in `(block, row)` order.
    pub fn column(&self, col: usize) -> Vec<(usize, C64)> {
        let s = self.space.vector(col).s;
        let mut out = Vec::new();
        for (k, es) in &self.blocks {
            if k.source != s {
                continue;
            }
            let lo = es.partition_point(|e| (e.col as usize) < col);
            out.extend(
                es[lo..]
                    .iter()
                    .take_while(|e| e.col as usize == col)
                    .map(|e| (e.row as usize, e.value)),
            );
        }
        out
    }

    /// Matrix product `self · other`; block shifts add.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let pairs: Vec<(&BlockKey, &Vec<Entry>, &BlockKey, &Vec<Entry>)> = self
            .blocks
            .iter()
            .flat_map(|(ka, ea)| {
                other
                    .blocks
                    .iter()
                    .filter(move |(kb, _)| kb.target == ka.source)
                    .map(move |(kb, eb)| (ka, ea, kb, eb))
            })
            .collect();
        let products: Vec<(BlockKey, Vec<Entry>)> = pairs
            .par_iter()
            .map(|(ka, ea, kb, eb)| {
                let key = BlockKey {
                    shift: ka.shift + kb.shift,
                    source: kb.source,
                    target: ka.target,
                };
                let mut out = Vec::new();
                for b in eb.iter() {
                    let lo = ea.partition_point(|e| e.col < b.row);
                    for a in ea[lo..].iter().take_while(|e| e.col == b.row) {
                        out.push(Entry {
                            row: a.row,
                            col: b.col,
                            value: a.value * b.value,
                        });
                    }
                }
                (key, out)
            })
            .collect();
        let mut grouped: BTreeMap<BlockKey, Vec<Entry>> = BTreeMap::new();
        for (k, es) in products {
            grouped.entry(k).or_default().extend(es);
        }
        let blocks = grouped
            .into_par_iter()
            .map(|(k, v)| (k, canonicalize(v)))
            .filter(|(_, v)| !v.is_empty())
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Ok(Self {
            space: Arc::clone(&self.space),
            blocks,
        })
    }

    /// Product of a list of factors, left to right.
    pub fn product(factors: &[&Self]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::Precondition("empty operator product".into()))?;
        rest.iter()
            .try_fold((*first).clone(), |acc, f| acc.compose(f))
    }

    pub fn adjoint(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|(k, es)| {
                let key = BlockKey {
                    shift: -k.shift,
                    source: k.target,
                    target: k.source,
                };
                let flipped = es
                    .iter()
                    .map(|e| Entry {
                        row: e.col,
                        col: e.row,
                        value: e.value.conj(),
                    })
                    .collect();
                (key, canonicalize(flipped))
            })
            .collect();
        Self {
            space: Arc::clone(&self.space),
            blocks,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_entries(|_, _, v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// `α·self + β·other`.
    pub fn lin_comb(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        self.check_same(other)?;
        let mut blocks = BTreeMap::new();
        let keys: std::collections::BTreeSet<BlockKey> =
            self.blocks.keys().chain(other.blocks.keys()).copied().collect();
        for k in keys {
            let mut es: Vec<Entry> = Vec::new();
            if let Some(a) = self.blocks.get(&k) {
                es.extend(a.iter().map(|e| Entry {
                    value: e.value * alpha,
                    ..*e
                }));
            }
            if let Some(b) = other.blocks.get(&k) {
                es.extend(b.iter().map(|e| Entry {
                    value: e.value * beta,
                    ..*e
                }));
            }
            let es = canonicalize(es);
            if !es.is_empty() {
                blocks.insert(k, es);
            }
        }
        Ok(Self {
            space: Arc::clone(&self.space),
            blocks,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// Reweights every entry; zero results are dropped.
    pub fn map_entries(&self, f: impl Fn(&BasisVector, &BasisVector, C64) -> C64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|(k, es)| {
                let mapped: Vec<Entry> = es
                    .iter()
                    .filter_map(|e| {
                        let r = self.space.vector(e.row as usize);
                        let c = self.space.vector(e.col as usize);
                        let v = f(&r, &c, e.value);
                        (v != C64::new(0.0, 0.0)).then_some(Entry { value: v, ..*e })
                    })
                    .collect();
                (*k, mapped)
            })
            .filter(|(_, v)| !v.is_empty())
            .collect();
        Self {
            space: Arc::clone(&self.space),
            blocks,
        }
    }

    /// Keeps entries for which `keep(row, col)` holds.
    pub fn filter_entries(&self, keep: impl Fn(&BasisVector, &BasisVector) -> bool) -> Self {
        self.map_entries(|r, c, v| if keep(r, c) { v } else { C64::new(0.0, 0.0) })
    }

    /// Restriction to rows and columns with `2j ≤ limit`.
    pub fn restrict_levels(&self, limit: u32) -> Self {
        self.filter_entries(|r, c| r.two_j <= limit && c.two_j <= limit)
    }

    /// Diagonal as a dense vector indexed like the basis.
    pub fn diagonal_vector(&self) -> Vec<C64> {
        let mut d = vec![C64::new(0.0, 0.0); self.space.dim()];
        for (k, es) in &self.blocks {
            if k.shift == 0 && k.source == k.target {
                for e in es.iter().filter(|e| e.row == e.col) {
                    d[e.row as usize] = e.value;
                }
            }
        }
        d
    }

    /// Diagonal of `self · other` without forming the product.
    pub fn product_diagonal(&self, other: &Self) -> Result<Vec<C64>> {
        self.check_same(other)?;
        let mut d = vec![C64::new(0.0, 0.0); self.space.dim()];
        for (kb, eb) in &other.blocks {
            let ka = BlockKey {
                shift: -kb.shift,
                source: kb.target,
                target: kb.source,
            };
            let Some(ea) = self.blocks.get(&ka) else {
                continue;
            };
            for b in eb {
                if let Ok(i) = ea.binary_search_by(|e| (e.col, e.row).cmp(&(b.row, b.col))) {
                    d[b.col as usize] += ea[i].value * b.value;
                }
            }
        }
        Ok(d)
    }

    /// Sum of diagonal entries over basis vectors with `2j ≤ upto_two_j`.
    pub fn truncated_trace(&self, upto_two_j: u32) -> C64 {
        let limit = upto_two_j.min(self.truncation().max_two_j);
        let end = self.space.level_range(limit).end;
        self.diagonal_vector()[..end].iter().sum()
    }

    /// Per-level diagonal sums `(up, down)` of a diagonal vector.
    pub fn level_sector_sums(space: &Space, diag: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let levels = space.truncation().max_two_j as usize + 1;
        let mut up = vec![C64::new(0.0, 0.0); levels];
        let mut dn = vec![C64::new(0.0, 0.0); levels];
        for (n, (u, d)) in up.iter_mut().zip(dn.iter_mut()).enumerate() {
            let range = space.level_range(n as u32);
            let split = range.start + Truncation::up_dimension(n as u32);
            *u = diag[range.start..split].iter().sum();
            *d = diag[split..range.end].iter().sum();
        }
        (up, dn)
    }

    /// Per-level traces of the up and down sectors.
    pub fn level_sector_traces(&self) -> (Vec<C64>, Vec<C64>) {
        Self::level_sector_sums(&self.space, &self.diagonal_vector())
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.space.dim()];
        for e in self.entries() {
            y[e.row as usize] += e.value * x[e.col as usize];
        }
        y
    }

    /// `self† · x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.space.dim()];
        for e in self.entries() {
            y[e.col as usize] += e.value.conj() * x[e.row as usize];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|e| e.value.norm()).fold(0.0, f64::max)
    }

    /// Largest entry with both row and column at `2j ≤ limit`.
    pub fn max_abs_within(&self, limit: u32) -> f64 {
        self.entries()
            .filter(|e| {
                self.space.vector(e.row as usize).two_j <= limit
                    && self.space.vector(e.col as usize).two_j <= limit
            })
            .map(|e| e.value.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry inside the guard interior of the truncation.
    pub fn max_abs_interior(&self) -> f64 {
        self.max_abs_within(self.truncation().interior_max())
    }

    /// Operator norm by power iteration on `A†A`.
    pub fn operator_norm_estimate(&self) -> f64 {
        let dim = self.space.dim();
        if dim == 0 || self.nnz() == 0 {
            return 0.0;
        }
        let mut x: Vec<C64> = (0..dim)
            .map(|i| C64::new(1.0 + (i % 7) as f64 / 7.0, 0.0))
            .collect();
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n0 = norm(&x);
        x.iter_mut().for_each(|z| *z /= n0);
        let mut estimate = 0.0;
        for _ in 0..20_000 {
            let y = self.adjoint_matvec(&self.matvec(&x));
            let ny = norm(&y);
            if ny == 0.0 {
                return 0.0;
            }
            let next = ny.sqrt();
            x = y.into_iter().map(|z| z / ny).collect();
            if (next - estimate).abs() <= 1e-10 * next {
                return next;
            }
            estimate = next;
        }
        estimate
    }

    /// Per-level supremum of entry magnitudes, grouped by source level.
    pub fn entry_decay_profile(&self) -> Vec<(u32, f64)> {
        let mut prof = vec![0.0f64; self.truncation().max_two_j as usize + 1];
        for e in self.entries() {
            let n = self.space.vector(e.col as usize).two_j as usize;
            prof[n] = prof[n].max(e.value.norm());
        }
        prof.into_iter()
            .enumerate()
            .map(|(n, v)| (n as u32, v))
            .collect()
    }

    /// Sum of singular values, computed on the connected components of the
    /// row/column incidence graph.
    pub fn trace_norm(&self) -> f64 {
        let dim = self.space.dim();
        let mut parent: Vec<usize> = (0..2 * dim).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in self.entries() {
            let a = find(&mut parent, e.row as usize);
            let b = find(&mut parent, dim + e.col as usize);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut comps: BTreeMap<usize, Vec<&Entry>> = BTreeMap::new();
        for e in self.entries() {
            let root = find(&mut parent, e.row as usize);
            comps.entry(root).or_default().push(e);
        }
        comps
            .values()
            .map(|es| {
                if es.len() == 1 {
                    return es[0].value.norm();
                }
                let mut rows: Vec<u32> = es.iter().map(|e| e.row).collect();
                let mut cols: Vec<u32> = es.iter().map(|e| e.col).collect();
                rows.sort_unstable();
                rows.dedup();
                cols.sort_unstable();
                cols.dedup();
                let mut m = DMatrix::<C64>::zeros(rows.len(), cols.len());
                for e in es {
                    let i = rows.binary_search(&e.row).unwrap();
                    let j = cols.binary_search(&e.col).unwrap();
                    m[(i, j)] += e.value;
                }
                m.singular_values().iter().sum::<f64>()
            })
            .sum()
    }

    /// Sparse entries in basis order, for debugging.
    pub fn dump(&self) -> Vec<DumpEntry> {
        let mut out: Vec<DumpEntry> = self
            .entries()
            .map(|e| DumpEntry {
                row: self.space.vector(e.row as usize),
                col: self.space.vector(e.col as usize),
                re: e.value.re,
                im: e.value.im,
            })
            .collect();
        out.sort_by(|a, b| (a.col, a.row).cmp(&(b.col, b.row)));
        out
    }

    pub fn dump_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.dump())?)
    }

    /// Maximum entrywise difference on the guard interior.
    pub fn interior_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs_interior())
    }
}
