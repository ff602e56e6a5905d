//! Enumeration kernel for the zero set of a polynomial system over `F_p`.
//!
//! Coordinates are fixed left to right. After each step the residual of
//! every polynomial is checked; a residual that collapsed to a nonzero
//! constant prunes the subtree. The last coordinate is never scanned blindly
//! when it can be solved: a residual that is linear in it yields its single
//! root, and a polynomial whose dependence on the last variable is
//! prefix-free (`h(x_r) + g(x_1, …, x_{r-1})`) is inverted through a
//! precomputed preimage table of `h`.

use crate::numtheory::inv_mod;
use crate::polynomial::{reduce, Polynomial};

/// Preimage tables are only built up to this modulus.
const TABLE_LIMIT: u64 = 1 << 24;

/// `{x ∈ [lo, hi] : x ≡ start (mod step)}` with `lo <= start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CoordSet {
    start: u64,
    hi: u64,
    step: u64,
}

impl CoordSet {
    /// `None` when the set is empty.
    pub(crate) fn new(lo: u64, hi: u64, modulus: u64, residue: u64) -> Option<Self> {
        debug_assert!(modulus > 0 && residue < modulus);
        let offset = (residue + modulus - lo % modulus) % modulus;
        let start = lo.checked_add(offset)?;
        (start <= hi).then_some(Self {
            start,
            hi,
            step: modulus,
        })
    }

    pub(crate) fn contains(&self, x: u64) -> bool {
        x >= self.start && x <= self.hi && (x - self.start) % self.step == 0
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = u64> {
        (self.start..=self.hi).step_by(self.step as usize)
    }

    #[cfg(test)]
    fn len(&self) -> u64 {
        (self.hi - self.start) / self.step + 1
    }
}

#[derive(Debug, Clone)]
struct Preimage {
    offsets: Vec<u32>,
    values: Vec<u32>,
}

impl Preimage {
    /// Inverts `y ↦ h(y)` on `[0, p)`; each preimage list is ascending.
    fn build(p: u64, h: impl Fn(u64) -> u64) -> Self {
        let images: Vec<u32> = (0..p).map(|y| h(y) as u32).collect();
        let mut offsets = vec![0u32; p as usize + 1];
        for &v in &images {
            offsets[v as usize + 1] += 1;
        }
        for i in 0..p as usize {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut values = vec![0u32; p as usize];
        for (y, &v) in images.iter().enumerate() {
            values[cursor[v as usize] as usize] = y as u32;
            cursor[v as usize] += 1;
        }
        Self { offsets, values }
    }

    fn lookup(&self, v: u64) -> &[u32] {
        let v = v as usize;
        &self.values[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }
}

#[derive(Debug, Clone)]
struct CompiledPoly {
    coef: Vec<u64>,
    exps: Vec<Vec<u32>>,
    /// Per depth `k` (first `k` coordinates fixed): term indices grouped by
    /// the exponents of the free variables, nonconstant groups only.
    groups: Vec<Vec<Vec<usize>>>,
    /// Per depth `k`: terms whose free-variable exponents are all zero.
    constants: Vec<Vec<usize>>,
    /// Term indices by exponent of the last variable.
    by_last: Vec<Vec<usize>>,
    max_exp: Vec<u32>,
    table: Option<Preimage>,
}

impl CompiledPoly {
    fn new(f: &Polynomial, p: u64) -> Self {
        let r = f.nvars();
        let coef: Vec<u64> = f.terms().iter().map(|t| reduce(t.coefficient, p)).collect();
        let exps: Vec<Vec<u32>> = f.terms().iter().map(|t| t.exponents.clone()).collect();
        let mut groups = Vec::with_capacity(r);
        let mut constants = Vec::with_capacity(r);
        for k in 0..r {
            let mut keyed: Vec<(Vec<u32>, usize)> = Vec::new();
            let mut consts = Vec::new();
            for (t, e) in exps.iter().enumerate() {
                if e[k..].iter().all(|&x| x == 0) {
                    consts.push(t);
                } else {
                    keyed.push((e[k..].to_vec(), t));
                }
            }
            keyed.sort();
            let mut grouped: Vec<Vec<usize>> = Vec::new();
            let mut last_key: Option<&Vec<u32>> = None;
            for (key, t) in &keyed {
                if last_key != Some(key) {
                    grouped.push(Vec::new());
                    last_key = Some(key);
                }
                grouped.last_mut().expect("group pushed").push(*t);
            }
            groups.push(grouped);
            constants.push(consts);
        }
        let last_deg = f.degree_in(r - 1) as usize;
        let mut by_last = vec![Vec::new(); last_deg + 1];
        for (t, e) in exps.iter().enumerate() {
            by_last[e[r - 1] as usize].push(t);
        }
        let max_exp = (0..r).map(|j| f.degree_in(j)).collect();

        let separable = exps
            .iter()
            .all(|e| e[r - 1] == 0 || e[..r - 1].iter().all(|&x| x == 0));
        let table = (separable && last_deg >= 2 && p <= TABLE_LIMIT).then(|| {
            let last_terms: Vec<(u64, u64)> = exps
                .iter()
                .zip(&coef)
                .filter(|(e, _)| e[r - 1] > 0)
                .map(|(e, &c)| (c, e[r - 1] as u64))
                .collect();
            Preimage::build(p, |y| {
                last_terms.iter().fold(0, |acc, &(c, e)| {
                    (acc + c * crate::numtheory::pow_mod(y, e, p)) % p
                })
            })
        });

        Self {
            coef,
            exps,
            groups,
            constants,
            by_last,
            max_exp,
            table,
        }
    }
}

/// A polynomial system compiled for one prime.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    p: u64,
    r: usize,
    polys: Vec<CompiledPoly>,
}

struct Scratch {
    /// `[poly][depth][term]`: coefficient times the fixed-prefix monomial.
    partial: Vec<Vec<Vec<u64>>>,
    univariate: Vec<Vec<u64>>,
    powers: Vec<u64>,
}

enum LastStep {
    Empty,
    Free,
    Root(u64),
    Table(usize, u64),
    Scan,
}

impl Kernel {
    pub(crate) fn new(polys: &[Polynomial], r: usize, p: u64) -> Self {
        Self {
            p,
            r,
            polys: polys.iter().map(|f| CompiledPoly::new(f, p)).collect(),
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            partial: self
                .polys
                .iter()
                .map(|c| {
                    let mut v = vec![vec![0u64; c.coef.len()]; self.r];
                    v[0].copy_from_slice(&c.coef);
                    v
                })
                .collect(),
            univariate: self.polys.iter().map(|c| vec![0; c.by_last.len()]).collect(),
            powers: Vec::new(),
        }
    }

    /// Visits every solution in `sets[0] × … × sets[r-1]` in
    /// lexicographic order.
    pub(crate) fn run(&self, sets: &[CoordSet], visit: &mut dyn FnMut(&[u64])) {
        let mut scratch = self.scratch();
        let mut point = vec![0u64; self.r];
        self.descend(0, sets, &mut scratch, &mut point, visit);
    }

    /// Same as [`run`](Self::run) restricted to `x_1 = first`. Needs `r >= 2`.
    pub(crate) fn run_stripe(
        &self,
        first: u64,
        sets: &[CoordSet],
        visit: &mut dyn FnMut(&[u64]),
    ) {
        debug_assert!(self.r >= 2);
        let mut scratch = self.scratch();
        let mut point = vec![0u64; self.r];
        point[0] = first;
        if self.advance(0, first, &mut scratch) {
            self.descend(1, sets, &mut scratch, &mut point, visit);
        }
    }

    fn descend(
        &self,
        depth: usize,
        sets: &[CoordSet],
        scratch: &mut Scratch,
        point: &mut [u64],
        visit: &mut dyn FnMut(&[u64]),
    ) {
        if depth + 1 == self.r {
            self.solve_last(sets, scratch, point, visit);
            return;
        }
        for x in sets[depth].iter() {
            point[depth] = x;
            if self.advance(depth, x, scratch) {
                self.descend(depth + 1, sets, scratch, point, visit);
            }
        }
    }

    /// Fixes coordinate `depth` to `x`. Returns false when some residual
    /// became a nonzero constant.
    fn advance(&self, depth: usize, x: u64, scratch: &mut Scratch) -> bool {
        let p = self.p;
        let next = depth + 1;
        for (i, c) in self.polys.iter().enumerate() {
            let top = c.max_exp[depth] as usize;
            scratch.powers.clear();
            let mut pw = 1u64;
            for _ in 0..=top {
                scratch.powers.push(pw);
                pw = pw * x % p;
            }
            let (cur, rest) = scratch.partial[i].split_at_mut(next);
            let from = &cur[depth];
            let to = &mut rest[0];
            for (t, e) in c.exps.iter().enumerate() {
                to[t] = from[t] * scratch.powers[e[depth] as usize] % p;
            }
            if next + 1 < self.r {
                let nonconstant = c.groups[next]
                    .iter()
                    .any(|g| g.iter().fold(0, |s, &t| (s + to[t]) % p) != 0);
                if !nonconstant {
                    let value = c.constants[next].iter().fold(0, |s, &t| (s + to[t]) % p);
                    if value != 0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn eval_univariate(coeffs: &[u64], y: u64, p: u64) -> u64 {
        coeffs.iter().rev().fold(0, |acc, &c| (acc * y + c) % p)
    }

    fn solve_last(
        &self,
        sets: &[CoordSet],
        scratch: &mut Scratch,
        point: &mut [u64],
        visit: &mut dyn FnMut(&[u64]),
    ) {
        let p = self.p;
        let last = self.r - 1;
        let mut step = LastStep::Free;
        for (i, c) in self.polys.iter().enumerate() {
            let partial = &scratch.partial[i][last];
            let uni = &mut scratch.univariate[i];
            for (e, terms) in c.by_last.iter().enumerate() {
                uni[e] = terms.iter().fold(0, |s, &t| (s + partial[t]) % p);
            }
            let Some(deg) = (1..uni.len()).rev().find(|&e| uni[e] != 0) else {
                if uni[0] != 0 {
                    step = LastStep::Empty;
                    break;
                }
                continue;
            };
            let candidate = if deg == 1 {
                let inv = inv_mod(uni[1], p).expect("p is prime");
                LastStep::Root((p - uni[0]) % p * inv % p)
            } else if c.table.is_some() {
                LastStep::Table(i, (p - uni[0]) % p)
            } else {
                LastStep::Scan
            };
            step = match (step, candidate) {
                (LastStep::Root(x), _) => LastStep::Root(x),
                (_, LastStep::Root(x)) => LastStep::Root(x),
                (LastStep::Table(j, v), _) => LastStep::Table(j, v),
                (_, cand) => cand,
            };
        }

        let set = &sets[last];
        let univariate = &scratch.univariate;
        let satisfies = |y: u64| {
            univariate
                .iter()
                .all(|u| Self::eval_univariate(u, y, p) == 0)
        };
        match step {
            LastStep::Empty => {}
            LastStep::Free => {
                for y in set.iter() {
                    point[last] = y;
                    visit(point);
                }
            }
            LastStep::Root(y) => {
                if set.contains(y) && satisfies(y) {
                    point[last] = y;
                    visit(point);
                }
            }
            LastStep::Table(i, v) => {
                let table = self.polys[i].table.as_ref().expect("table present");
                for &y in table.lookup(v) {
                    let y = y as u64;
                    if set.contains(y) && satisfies(y) {
                        point[last] = y;
                        visit(point);
                    }
                }
            }
            LastStep::Scan => {
                for y in set.iter() {
                    if satisfies(y) {
                        point[last] = y;
                        visit(point);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coord_set_membership() {
        let s = CoordSet::new(3, 20, 4, 1).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![5, 9, 13, 17]);
        assert_eq!(s.len(), 4);
        assert!(s.contains(13) && !s.contains(1) && !s.contains(21) && !s.contains(6));
        assert!(CoordSet::new(2, 3, 5, 4).is_none());
        assert_eq!(CoordSet::new(0, 6, 1, 0).unwrap().len(), 7);
    }

    #[test]
    fn preimage_table_inverts() {
        let p = 13;
        let t = Preimage::build(p, |y| y * y % p);
        assert_eq!(t.lookup(0), &[0]);
        assert_eq!(t.lookup(4), &[2, 11]);
        assert!(t.lookup(2).is_empty());
    }
}
