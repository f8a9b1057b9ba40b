//! Exact polyhedral kernel: regular subdivisions of lifted point sets, the
//! face lattice of cells (each cell is a demand set realized at some price),
//! and integer points of polytopes.
//!
//! Hulls are computed by supporting-hyperplane enumeration over small point
//! sets, which is exact and auditable at the instance sizes this crate
//! targets (a handful of goods, a few dozen bundles).

use crate::demand::PriceVector;
use crate::lp::{LinearProgram, LpOutcome, Rel};
use crate::num::{IntVector, Rat};
use crate::valuation::Valuation;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// A finite configuration of bundles lifted by their values. The x-parts are
/// pairwise distinct.
#[derive(Clone, Debug)]
pub struct LiftedPointSet {
    pub points: Vec<(IntVector, Rat)>,
    pub dim: usize,
}

impl LiftedPointSet {
    pub fn new(points: Vec<(IntVector, Rat)>) -> Self {
        assert!(!points.is_empty(), "need at least one lifted point");
        let dim = points[0].0.len();
        assert!(points.iter().all(|(x, _)| x.len() == dim));
        let distinct: BTreeSet<&IntVector> = points.iter().map(|(x, _)| x).collect();
        assert_eq!(distinct.len(), points.len(), "lifted points must have distinct bundles");
        LiftedPointSet { points, dim }
    }

    pub fn from_valuation(v: &Valuation) -> Self {
        LiftedPointSet::new(v.lifted_points())
    }

    fn xs(&self) -> Vec<&IntVector> {
        self.points.iter().map(|(x, _)| x).collect()
    }
}

/// A maximal cell of the regular subdivision: the point indices lying on one
/// supporting hyperplane of the upper hull, plus the price vector whose
/// payoff the members jointly maximize.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub members: BTreeSet<usize>,
    pub price: PriceVector,
}

/// Any cell of the subdivision, of any dimension, with a strictly supporting
/// price: the members are exactly the payoff maximizers at `price`.
#[derive(Clone, Debug)]
pub struct Cell {
    pub members: BTreeSet<usize>,
    pub price: PriceVector,
    pub dim: usize,
}

fn solve_square_system(mut m: Vec<Vec<Rat>>, mut rhs: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        rhs[col] = &rhs[col] / &p;
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in 0..n {
                let delta = &m[col][c] * &f;
                m[r][c] = &m[r][c] - delta;
            }
            let delta = &rhs[col] * &f;
            rhs[r] = &rhs[r] - delta;
        }
    }
    Some(rhs)
}

/// A maximal linearly independent set of difference vectors from the first
/// point; its length is the affine rank of the configuration.
fn affine_basis(xs: &[&IntVector]) -> Vec<IntVector> {
    let mut basis: Vec<IntVector> = Vec::new();
    let mut reduced: Vec<Vec<Rat>> = Vec::new();
    if xs.is_empty() {
        return basis;
    }
    let origin = xs[0];
    for x in xs.iter().skip(1) {
        let diff = x.sub(origin);
        let mut row: Vec<Rat> = diff.0.iter().map(|c| Rat::from_integer(c.clone())).collect();
        for r in &reduced {
            if let Some(lead) = r.iter().position(|v| !v.is_zero()) {
                if !row[lead].is_zero() {
                    let f = &row[lead] / &r[lead];
                    for (rv, bv) in row.iter_mut().zip(r) {
                        let delta = bv * &f;
                        *rv = &*rv - delta;
                    }
                }
            }
        }
        if row.iter().any(|v| !v.is_zero()) {
            reduced.push(row);
            basis.push(diff);
        }
    }
    basis
}

fn streaming_combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let cur = current.clone()?;
        // Advance in place for the next call.
        let mut next = cur.clone();
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if next[i] != i + n - k {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                break true;
            }
        };
        current = if advanced { Some(next) } else { None };
        Some(cur)
    })
}

/// All maximal cells of the regular subdivision induced by the lift: for each
/// affinely independent (rank + 1)-subset, the hyperplane through its lifted
/// points is kept when every other lifted point lies weakly below it. The
/// price is the hyperplane's slope expressed in the configuration's affine
/// span (components orthogonal to the span are zero).
pub fn upper_hull_facets(pts: &LiftedPointSet) -> Vec<Facet> {
    let count = pts.points.len();
    if count == 1 {
        return vec![Facet {
            members: BTreeSet::from([0]),
            price: PriceVector::zeros(pts.dim),
        }];
    }
    let xs = pts.xs();
    let basis = affine_basis(&xs);
    let d = basis.len();
    let mut seen: BTreeMap<BTreeSet<usize>, PriceVector> = BTreeMap::new();
    for subset in streaming_combinations(count, d + 1) {
        let origin = &pts.points[subset[0]];
        // Solve for the slope lambda in span coordinates: for each other
        // subset point, p.(x - x0) = V(x) - V(x0) with p = B^T lambda.
        let mut m: Vec<Vec<Rat>> = Vec::with_capacity(d);
        let mut rhs: Vec<Rat> = Vec::with_capacity(d);
        for &idx in subset.iter().skip(1) {
            let diff = pts.points[idx].0.sub(&origin.0);
            m.push(
                basis
                    .iter()
                    .map(|b| Rat::from_integer(b.dot_int(&diff)))
                    .collect(),
            );
            rhs.push(&pts.points[idx].1 - &origin.1);
        }
        let Some(lambda) = solve_square_system(m, rhs) else {
            continue; // affinely dependent subset
        };
        let mut price = vec![Rat::zero(); pts.dim];
        for (b, l) in basis.iter().zip(&lambda) {
            for (pc, bc) in price.iter_mut().zip(&b.0) {
                *pc += l * Rat::from_integer(bc.clone());
            }
        }
        let price = PriceVector(price);
        let top = &origin.1 - price.dot(&origin.0);
        let mut members = BTreeSet::new();
        let mut supported = true;
        for (i, (x, v)) in pts.points.iter().enumerate() {
            let pay = v - price.dot(x);
            if pay > top {
                supported = false;
                break;
            }
            if pay == top {
                members.insert(i);
            }
        }
        if supported {
            seen.entry(members).or_insert(price);
        }
    }
    seen.into_iter()
        .map(|(members, price)| Facet { members, price })
        .collect()
}

/// Facets of the convex hull of a point set, as index sets. Proper faces
/// only; a configuration of affine rank d has facets of rank d - 1.
fn polytope_facets(xs: &[&IntVector]) -> Vec<BTreeSet<usize>> {
    let count = xs.len();
    let basis = affine_basis(xs);
    let d = basis.len();
    if d == 0 {
        return Vec::new();
    }
    let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for subset in streaming_combinations(count, d) {
        let origin = xs[subset[0]];
        // A normal within the span vanishing on the subset's differences:
        // kernel vector of the (d-1) x d system over the span basis.
        let rows: Vec<Vec<Rat>> = subset
            .iter()
            .skip(1)
            .map(|&idx| {
                let diff = xs[idx].sub(origin);
                basis
                    .iter()
                    .map(|b| Rat::from_integer(b.dot_int(&diff)))
                    .collect()
            })
            .collect();
        let Some(mu) = kernel_vector(rows, d) else {
            continue;
        };
        // Normal in ambient coordinates.
        let mut normal = vec![Rat::zero(); xs[0].len()];
        for (b, m) in basis.iter().zip(&mu) {
            for (nc, bc) in normal.iter_mut().zip(&b.0) {
                *nc += m * Rat::from_integer(bc.clone());
            }
        }
        let mut members = BTreeSet::new();
        let mut pos = false;
        let mut neg = false;
        for (i, x) in xs.iter().enumerate() {
            let s: Rat = normal
                .iter()
                .zip(&x.sub(origin).0)
                .map(|(n, c)| n * Rat::from_integer(c.clone()))
                .sum();
            if s.is_positive() {
                pos = true;
            } else if s.is_negative() {
                neg = true;
            } else {
                members.insert(i);
            }
            if pos && neg {
                break;
            }
        }
        if pos && neg {
            continue;
        }
        if members.len() < count {
            seen.insert(members);
        }
    }
    seen.into_iter().collect()
}

/// One nonzero kernel vector of an underdetermined system, when the row rank
/// is exactly cols - 1 (otherwise None).
fn kernel_vector(rows: Vec<Vec<Rat>>, cols: usize) -> Option<Vec<Rat>> {
    let mut reduced: Vec<Vec<Rat>> = Vec::new();
    for mut row in rows {
        for r in &reduced {
            let lead = r.iter().position(|v| !v.is_zero()).unwrap();
            if !row[lead].is_zero() {
                let f = &row[lead] / &r[lead];
                for (rv, bv) in row.iter_mut().zip(r) {
                    let delta = bv * &f;
                    *rv = &*rv - delta;
                }
            }
        }
        if row.iter().any(|v| !v.is_zero()) {
            reduced.push(row);
        }
    }
    if reduced.len() != cols - 1 {
        return None;
    }
    let leads: BTreeSet<usize> = reduced
        .iter()
        .map(|r| r.iter().position(|v| !v.is_zero()).unwrap())
        .collect();
    let free = (0..cols).find(|c| !leads.contains(c))?;
    let mut kernel = vec![Rat::zero(); cols];
    kernel[free] = Rat::one();
    // Back-substitute in reverse order of leading columns.
    let mut ordered: Vec<&Vec<Rat>> = reduced.iter().collect();
    ordered.sort_by_key(|r| std::cmp::Reverse(r.iter().position(|v| !v.is_zero()).unwrap()));
    for r in ordered {
        let lead = r.iter().position(|v| !v.is_zero()).unwrap();
        let mut acc = Rat::zero();
        for c in lead + 1..cols {
            acc += &r[c] * &kernel[c];
        }
        kernel[lead] = -acc / &r[lead];
    }
    Some(kernel)
}

/// How each point constrains a supporting price in [support_lp].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum SupportKind {
    /// Must attain the common maximum payoff.
    Member,
    /// May tie but not exceed.
    Weak,
    /// Must fall strictly below (by the maximized margin).
    Strict,
}

/// Finds a price maximizing the margin by which members beat the strict
/// points. Returns the price and the achieved margin (capped at 1 when the
/// margin is unbounded); None when no price puts the members weakly on top.
pub(crate) fn support_lp(
    points: &[(IntVector, Rat)],
    kinds: &[SupportKind],
    nonneg_prices: bool,
) -> Option<(PriceVector, Rat)> {
    let n = points[0].0.len();
    let anchor = kinds.iter().position(|k| *k == SupportKind::Member)?;
    let build = |cap: bool| {
        // Variables: p_1..p_n, margin e.
        let mut lp = LinearProgram::new(n + 1);
        lp.objective[n] = Rat::one();
        if nonneg_prices {
            for j in 0..n {
                lp.nonneg[j] = true;
            }
        }
        let (ax, av) = &points[anchor];
        for (i, (x, v)) in points.iter().enumerate() {
            if i == anchor {
                continue;
            }
            // payoff(anchor) - payoff(i) = (av - v) + p.(x - ax).
            let diff = x.sub(ax);
            let mut coeffs: Vec<Rat> = diff
                .0
                .iter()
                .map(|c| Rat::from_integer(c.clone()))
                .collect();
            let rhs = v - av;
            match kinds[i] {
                SupportKind::Member => {
                    coeffs.push(Rat::zero());
                    lp.constrain(coeffs, Rel::Eq, rhs);
                }
                SupportKind::Weak => {
                    coeffs.push(Rat::zero());
                    lp.constrain(coeffs, Rel::Ge, rhs);
                }
                SupportKind::Strict => {
                    coeffs.push(-Rat::one());
                    lp.constrain(coeffs, Rel::Ge, rhs);
                }
            }
        }
        if cap {
            let mut coeffs = vec![Rat::zero(); n + 1];
            coeffs[n] = Rat::one();
            lp.constrain(coeffs, Rel::Le, Rat::one());
        }
        lp
    };
    let solved = match build(false).solve() {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Unbounded => match build(true).solve() {
            LpOutcome::Optimal(sol) => sol,
            _ => unreachable!("capped margin program stays feasible"),
        },
        LpOutcome::Infeasible => return None,
    };
    let margin = solved.value.clone();
    let price = PriceVector(solved.assignment[..n].to_vec());
    Some((price, margin))
}

/// Strictly supporting price for an exact member set: members attain the
/// maximum payoff, every other point falls strictly below.
pub(crate) fn strict_support(
    points: &[(IntVector, Rat)],
    members: &BTreeSet<usize>,
    nonneg_prices: bool,
) -> Option<(PriceVector, Rat)> {
    let kinds: Vec<SupportKind> = (0..points.len())
        .map(|i| {
            if members.contains(&i) {
                SupportKind::Member
            } else {
                SupportKind::Strict
            }
        })
        .collect();
    let (price, margin) = support_lp(points, &kinds, nonneg_prices)?;
    if margin.is_positive() {
        Some((price, margin))
    } else {
        None
    }
}

fn candidate_cells(pts: &LiftedPointSet) -> BTreeSet<BTreeSet<usize>> {
    let mut cells: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    if pts.points.len() == 1 {
        cells.insert(BTreeSet::from([0]));
        return cells;
    }
    for f in upper_hull_facets(pts) {
        cells.insert(f.members);
    }
    // Interior lower-dimensional faces arise as intersections of maximal
    // cells; iterate pairwise intersection to a fixpoint.
    loop {
        let snapshot: Vec<BTreeSet<usize>> = cells.iter().cloned().collect();
        let mut added = false;
        for (i, a) in snapshot.iter().enumerate() {
            for b in snapshot.iter().skip(i + 1) {
                let inter: BTreeSet<usize> = a.intersection(b).cloned().collect();
                if !inter.is_empty() && !cells.contains(&inter) {
                    cells.insert(inter);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    // Faces on the boundary of the domain's hull come from the induced
    // subdivisions of the hull's facets.
    let xs = pts.xs();
    for facet in polytope_facets(&xs) {
        let index_map: Vec<usize> = facet.iter().cloned().collect();
        let sub = LiftedPointSet::new(
            index_map
                .iter()
                .map(|&i| pts.points[i].clone())
                .collect(),
        );
        for sub_cell in candidate_cells(&sub) {
            cells.insert(sub_cell.iter().map(|&i| index_map[i]).collect());
        }
    }
    cells
}

fn affine_dim(pts: &LiftedPointSet, members: &BTreeSet<usize>) -> usize {
    let xs: Vec<&IntVector> = members.iter().map(|&i| &pts.points[i].0).collect();
    affine_basis(&xs).len()
}

/// Every cell of the regular subdivision, each with an exact strictly
/// supporting price (demand at that price is exactly the member set). The
/// 0-dimensional cells are the vertices of the upper hull.
pub fn face_lattice(pts: &LiftedPointSet) -> Vec<Cell> {
    let mut out = Vec::new();
    for members in candidate_cells(pts) {
        let Some((price, _margin)) = strict_support(&pts.points, &members, false) else {
            // Candidate generation can only propose genuine faces; reaching
            // this branch would mean the support check and the enumeration
            // disagree.
            debug_assert!(false, "candidate cell without a strict supporting price");
            continue;
        };
        let dim = affine_dim(pts, &members);
        out.push(Cell { members, price, dim });
    }
    out
}

/// All integer vectors in the convex hull of the input, decided coordinate
/// box point by point through exact LP membership.
pub fn integer_points_in_hull(vertices: &[IntVector]) -> BTreeSet<IntVector> {
    assert!(!vertices.is_empty());
    let n = vertices[0].len();
    let lows: Vec<_> = (0..n)
        .map(|c| vertices.iter().map(|v| v.0[c].clone()).min().unwrap())
        .collect();
    let highs: Vec<_> = (0..n)
        .map(|c| vertices.iter().map(|v| v.0[c].clone()).max().unwrap())
        .collect();
    let mut out = BTreeSet::new();
    let mut cursor = lows.clone();
    'scan: loop {
        let candidate = IntVector(cursor.clone());
        if hull_contains(vertices, &candidate) {
            out.insert(candidate);
        }
        let mut i = n;
        loop {
            if i == 0 {
                break 'scan;
            }
            i -= 1;
            if cursor[i] < highs[i] {
                cursor[i] += 1;
                for j in i + 1..n {
                    cursor[j] = lows[j].clone();
                }
                break;
            }
            cursor[i] = lows[i].clone();
        }
    }
    out
}

/// Exact membership of a point in conv(vertices): feasibility of the convex
/// combination program.
pub fn hull_contains(vertices: &[IntVector], point: &IntVector) -> bool {
    let k = vertices.len();
    let n = point.len();
    let mut lp = LinearProgram::new(k);
    lp.nonneg = vec![true; k];
    lp.constrain(vec![Rat::one(); k], Rel::Eq, Rat::one());
    for c in 0..n {
        let coeffs: Vec<Rat> = vertices
            .iter()
            .map(|v| Rat::from_integer(v.0[c].clone()))
            .collect();
        lp.constrain(coeffs, Rel::Eq, Rat::from_integer(point.0[c].clone()));
    }
    matches!(lp.solve(), LpOutcome::Optimal(_))
}
