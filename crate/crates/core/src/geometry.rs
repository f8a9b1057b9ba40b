//! Geometric fingerprint of a valuation: the one-dimensional cells of its
//! regular subdivision (demand-type vectors), compensated price effects with
//! replayable witnesses, and pseudoconcavity.
//!
//! Supporting prices for demand-type and price-effect extraction are taken
//! from the nonnegative orthant, which is where all of the crate's reference
//! scenarios live; the full subdivision over unrestricted prices remains
//! available through [crate::hull::face_lattice].

use crate::demand::{demand_set, PriceVector};
use crate::hull::{face_lattice, integer_points_in_hull, support_lp, LiftedPointSet, SupportKind};
use crate::num::{sorted_unique, Int, IntVector, Rat};
use crate::valuation::Valuation;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// A one-dimensional cell of the subdivision: at `price`, demand is exactly
/// `members`, whose convex hull is a segment parallel to `direction`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCell {
    /// Members ordered along the direction.
    pub members: Vec<IntVector>,
    /// Primitive, sign-normalized.
    pub direction: IntVector,
    pub price: PriceVector,
}

/// A compensated price effect: when the price of `good` falls from the first
/// witness price to the second, unique demand moves by `delta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceEffect {
    pub delta: IntVector,
    pub good: usize,
    pub witness: EffectWitness,
}

/// Replayable evidence: demand at `price_before` is uniquely `demand_before`;
/// after lowering the good's price to `price_after` (all other components
/// unchanged), `demand_before + delta` is demanded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectWitness {
    pub price_before: PriceVector,
    pub demand_before: IntVector,
    pub price_after: PriceVector,
    pub demand_after: IntVector,
}

/// Exact integer multiple test: diff == k * dir for primitive dir.
fn integer_multiple(diff: &IntVector, dir: &IntVector) -> Option<Int> {
    let lead = dir.0.iter().position(|c| !c.is_zero())?;
    if diff.0[lead].clone() % dir.0[lead].clone() != Int::zero() {
        return None;
    }
    let k = &diff.0[lead] / &dir.0[lead];
    for (d, e) in diff.0.iter().zip(&dir.0) {
        if *d != e * &k {
            return None;
        }
    }
    Some(k)
}

/// All one-dimensional cells of the subdivision that are supported by a
/// nonnegative price, found by scanning bundle pairs. For a fixed pair the
/// tie between the two points pins the payoff profile of the whole line, so
/// each pair determines at most one cell.
pub fn one_dim_cells(v: &Valuation) -> Vec<EdgeCell> {
    let points = v.lifted_points();
    let count = points.len();
    let mut seen: BTreeSet<Vec<IntVector>> = BTreeSet::new();
    let mut out = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            let direction = points[j].0.sub(&points[i].0).primitive_normalized();
            let mut kinds = vec![SupportKind::Strict; count];
            for (k, (x, _)) in points.iter().enumerate() {
                if integer_multiple(&x.sub(&points[i].0), &direction).is_some() {
                    kinds[k] = SupportKind::Weak;
                }
            }
            kinds[i] = SupportKind::Member;
            kinds[j] = SupportKind::Member;
            let Some((price, margin)) = support_lp(&points, &kinds, true) else {
                continue;
            };
            if !margin.is_positive() {
                continue;
            }
            let top = &points[i].1 - price.dot(&points[i].0);
            let mut members: Vec<(Int, IntVector)> = Vec::new();
            for (x, val) in &points {
                if val - price.dot(x) == top {
                    let k = integer_multiple(&x.sub(&points[i].0), &direction)
                        .expect("ties are confined to the pair's line");
                    members.push((k, x.clone()));
                }
            }
            members.sort_by(|a, b| a.0.cmp(&b.0));
            let ordered: Vec<IntVector> = members.into_iter().map(|(_, x)| x).collect();
            debug_assert!(ordered.len() >= 2);
            if seen.insert(ordered.clone()) {
                out.push(EdgeCell { members: ordered, direction, price });
            }
        }
    }
    out.sort_by(|a, b| a.members.cmp(&b.members));
    out
}

/// The minimal demand type: primitive directions of all one-dimensional
/// cells, sign-normalized and sorted.
pub fn demand_type_vectors(v: &Valuation) -> Vec<IntVector> {
    sorted_unique(one_dim_cells(v).into_iter().map(|c| c.direction))
}

/// Whether the valuation's demand type is contained (up to sign) in the
/// given set of sign-normalized primitive vectors.
pub fn is_of_demand_type(v: &Valuation, demand_type: &[IntVector]) -> bool {
    let allowed: BTreeSet<IntVector> = demand_type
        .iter()
        .map(|d| d.primitive_normalized())
        .collect();
    demand_type_vectors(v).iter().all(|d| allowed.contains(d))
}

/// Constructs the signed price effects of every one-dimensional cell: for
/// each good on which the cell's direction is nonzero, raising that good's
/// price by an instance-derived epsilon isolates the member with the fewest
/// units of the good, and lowering it back releases the rest of the cell.
/// Every emitted witness is re-verified through two demand-set calls.
pub fn price_effect_set(v: &Valuation, only_unit_box: bool) -> Vec<PriceEffect> {
    let mut out: Vec<PriceEffect> = Vec::new();
    let mut seen: BTreeSet<(IntVector, usize)> = BTreeSet::new();
    for cell in one_dim_cells(v) {
        for good in 0..v.space().len() {
            if cell.direction.0[good].is_zero() {
                continue;
            }
            let isolated = cell
                .members
                .iter()
                .min_by(|a, b| a.0[good].cmp(&b.0[good]))
                .expect("cells have members")
                .clone();
            let raised = isolate_by_raising(v, &cell, good, &isolated);
            let before = demand_set(v, &raised);
            assert!(
                before.len() == 1 && before.contains(&isolated),
                "price-effect witness must isolate a unique demand"
            );
            let after = demand_set(v, &cell.price);
            for target in &cell.members {
                if target == &isolated {
                    continue;
                }
                let delta = target.sub(&isolated);
                if only_unit_box && !delta.in_unit_box() {
                    continue;
                }
                assert!(after.contains(target), "cell members are demanded at the cell price");
                if seen.insert((delta.clone(), good)) {
                    out.push(PriceEffect {
                        delta,
                        good,
                        witness: EffectWitness {
                            price_before: raised.clone(),
                            demand_before: isolated.clone(),
                            price_after: cell.price.clone(),
                            demand_after: target.clone(),
                        },
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| (&a.delta, a.good).cmp(&(&b.delta, b.good)));
    out
}

/// The raised price p* + eps.e_good at which only `isolated` is demanded.
/// Epsilon is half the tightest payoff-gap-to-unit-saving ratio among bundles
/// with fewer units of the good, so no outside bundle can overtake.
fn isolate_by_raising(
    v: &Valuation,
    cell: &EdgeCell,
    good: usize,
    isolated: &IntVector,
) -> PriceVector {
    let top = v.eval_unchecked(&cell.members[0]) - cell.price.dot(&cell.members[0]);
    let member_set: BTreeSet<&IntVector> = cell.members.iter().collect();
    let mut epsilon: Option<Rat> = None;
    for x in v.domain() {
        if member_set.contains(x) {
            continue;
        }
        let saving = &isolated.0[good] - &x.0[good];
        if !saving.is_positive() {
            continue;
        }
        let gap = &top - (v.eval_unchecked(x) - cell.price.dot(x));
        debug_assert!(gap.is_positive());
        let bound = gap / Rat::from_integer(saving);
        epsilon = Some(match epsilon {
            None => bound,
            Some(e) => e.min(bound),
        });
    }
    let eps = epsilon.map(|e| e / Rat::from_integer(Int::from(2))).unwrap_or_else(Rat::one);
    let mut p = cell.price.clone();
    p.0[good] = &p.0[good] + eps;
    p
}

/// Sign-normalized directions of one-dimensional cells all of whose emitted
/// effects fall outside the unit box: reported rather than guessed at.
pub fn edge_only_directions(v: &Valuation) -> Vec<IntVector> {
    let unit_box_effects: BTreeSet<IntVector> = price_effect_set(v, true)
        .into_iter()
        .map(|e| e.delta.primitive_normalized())
        .collect();
    sorted_unique(
        demand_type_vectors(v)
            .into_iter()
            .filter(|d| !unit_box_effects.contains(d)),
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PseudoconcavityVerdict {
    Pseudoconcave,
    Violation {
        price: PriceVector,
        missing_point: IntVector,
    },
}

impl PseudoconcavityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, PseudoconcavityVerdict::Pseudoconcave)
    }
}

/// Checks that every cell of the subdivision contains every integer point of
/// its convex hull. The first failure (cells in member-set order, missing
/// points in lexicographic order) is returned with the cell's supporting
/// price.
pub fn is_pseudoconcave(v: &Valuation) -> PseudoconcavityVerdict {
    let pts = LiftedPointSet::from_valuation(v);
    let mut cells = face_lattice(&pts);
    cells.sort_by(|a, b| a.members.cmp(&b.members));
    for cell in cells {
        let vertices: Vec<IntVector> = cell
            .members
            .iter()
            .map(|&i| pts.points[i].0.clone())
            .collect();
        let member_set: BTreeSet<&IntVector> = vertices.iter().collect();
        for point in integer_points_in_hull(&vertices) {
            if !member_set.contains(&point) {
                return PseudoconcavityVerdict::Violation {
                    price: cell.price.clone(),
                    missing_point: point,
                };
            }
        }
    }
    PseudoconcavityVerdict::Pseudoconcave
}

/// Aggregate geometric fingerprint.
#[derive(Clone, Debug)]
pub struct GeometryReport {
    pub demand_type: Vec<IntVector>,
    pub unit_box_effects: Vec<PriceEffect>,
    pub edge_only: Vec<IntVector>,
    pub pseudoconcave: PseudoconcavityVerdict,
}

pub fn geometry_report(v: &Valuation) -> GeometryReport {
    GeometryReport {
        demand_type: demand_type_vectors(v),
        unit_box_effects: price_effect_set(v, true),
        edge_only: edge_only_directions(v),
        pseudoconcave: is_pseudoconcave(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_int};
    use crate::valuation::{GoodSpace, ValuationSpec};
    use std::collections::BTreeMap;

    fn space(goods: &[&str], m: u32) -> GoodSpace {
        GoodSpace::new(goods.iter().map(|s| s.to_string()).collect(), m).unwrap()
    }

    fn linear(space: &GoodSpace, prices: &[i64]) -> Valuation {
        Valuation::new(
            space.clone(),
            ValuationSpec::Linear {
                prices: prices.iter().map(|&p| rat_int(p)).collect(),
            },
        )
        .unwrap()
    }

    fn min_pair(space: &GoodSpace, goods: &[&str]) -> Valuation {
        Valuation::new(space.clone(), ValuationSpec::scaled_min(rat_int(3), goods)).unwrap()
    }

    fn units(n: usize) -> Vec<IntVector> {
        (0..n).map(|i| IntVector::unit(n, i)).collect()
    }

    #[test]
    fn additive_valuation_has_box_type() {
        let s = space(&["a", "b", "c"], 1);
        let v = linear(&s, &[1, 2, 3]);
        assert_eq!(demand_type_vectors(&v), sorted_unique(units(3)));
    }

    #[test]
    fn min_pair_type_on_four_goods() {
        let s = space(&["a", "b", "c", "d"], 1);
        let v = min_pair(&s, &["a", "b"]);
        let mut expected = units(4);
        expected.push(IntVector::from_i64s(&[1, 1, 0, 0]));
        assert_eq!(demand_type_vectors(&v), sorted_unique(expected));
    }

    #[test]
    fn min_all_type_is_units_plus_ones() {
        // With nonnegative supporting prices the all-goods complement
        // contributes only the coordinate vectors and the all-ones vector.
        let s = space(&["a", "b", "c"], 1);
        let v = min_pair(&s, &["a", "b", "c"]);
        let mut expected = units(3);
        expected.push(IntVector::from_i64s(&[1, 1, 1]));
        assert_eq!(demand_type_vectors(&v), sorted_unique(expected));
    }

    #[test]
    fn perfect_substitutes_have_swap_direction() {
        let s = space(&["a", "b"], 1);
        let v = Valuation::new(
            s,
            ValuationSpec::scaled_min_of_sum(rat_int(3), &["a", "b"], 1),
        )
        .unwrap();
        let types = demand_type_vectors(&v);
        assert!(types.contains(&IntVector::from_i64s(&[1, -1])));
    }

    #[test]
    fn zero_valuation_effects_are_unit_vectors() {
        let s = space(&["a", "b"], 1);
        let v = Valuation::zero(s);
        let effects = price_effect_set(&v, true);
        let directions: BTreeSet<IntVector> = effects
            .iter()
            .map(|e| e.delta.primitive_normalized())
            .collect();
        assert_eq!(directions, BTreeSet::from_iter(units(2)));
        for e in &effects {
            // Witnesses replay: unique before, contains after.
            let before = demand_set(&v, &e.witness.price_before);
            assert_eq!(before.len(), 1);
            assert!(before.contains(&e.witness.demand_before));
            let after = demand_set(&v, &e.witness.price_after);
            assert!(after.contains(&e.witness.demand_after));
            assert_eq!(e.witness.demand_after, e.witness.demand_before.add(&e.delta));
            assert!(e.witness.price_before.0[e.good] > e.witness.price_after.0[e.good]);
        }
    }

    #[test]
    fn three_cycle_effects_up_to_sign() {
        let s = space(&["a", "b", "c"], 1);
        let agents = [
            min_pair(&s, &["a", "b"]),
            min_pair(&s, &["b", "c"]),
            min_pair(&s, &["a", "c"]),
        ];
        let mut directions = BTreeSet::new();
        for v in &agents {
            for e in price_effect_set(v, true) {
                directions.insert(e.delta.primitive_normalized());
            }
        }
        let expected: BTreeSet<IntVector> = [
            &[1i64, 0, 0][..],
            &[0, 1, 0],
            &[0, 0, 1],
            &[1, 1, 0],
            &[0, 1, 1],
            &[1, 0, 1],
        ]
        .iter()
        .map(|v| IntVector::from_i64s(v))
        .collect();
        assert_eq!(directions, expected);
    }

    fn multiunit_split() -> Valuation {
        // max over y of 3 min(x_a, y, 1) + 3 min(x_b - y, x_c, 1) on
        // {0,1} x {0,1,2} x {0,1}.
        let s = space(&["apple", "banana", "coconut"], 2);
        let mut entries = BTreeMap::new();
        for a in 0..=1i64 {
            for b in 0..=2i64 {
                for c in 0..=1i64 {
                    let value = (0..=b)
                        .map(|y| 3 * a.min(y).min(1) + 3 * (b - y).min(c).min(1))
                        .max()
                        .unwrap();
                    entries.insert(IntVector::from_i64s(&[a, b, c]), rat_int(value));
                }
            }
        }
        Valuation::new(s, ValuationSpec::Table { entries }).unwrap()
    }

    #[test]
    fn multiunit_jump_is_excluded_from_unit_box_effects() {
        let v = multiunit_split();
        let unit_effects = price_effect_set(&v, true);
        let jump = IntVector::from_i64s(&[1, 2, 1]);
        assert!(unit_effects.iter().all(|e| e.delta != jump));
        // The two-unit banana jump crosses a two-dimensional cell: the full
        // demand set at (1,2,1) contains four bundles, so the jump is not a
        // subdivision edge and never appears as a constructed effect.
        assert!(!demand_type_vectors(&v).contains(&jump));
        let full = demand_set(&v, &PriceVector::from_i64s(&[1, 2, 1]));
        assert_eq!(full.len(), 4);
        assert!(full.contains(&IntVector::from_i64s(&[0, 0, 0])));
        assert!(full.contains(&jump));
    }

    #[test]
    fn skipping_cell_direction_is_edge_only() {
        // Single good, M = 2, V = (0,0,3): the only nontrivial cell is {0,2},
        // whose deltas jump by two units, so its direction is edge-only.
        let s1 = space(&["g"], 2);
        let mut entries = BTreeMap::new();
        for (count, val) in [(0i64, 0i64), (1, 0), (2, 3)] {
            entries.insert(IntVector::from_i64s(&[count]), rat_int(val));
        }
        let v = Valuation::new(s1, ValuationSpec::Table { entries }).unwrap();
        assert_eq!(edge_only_directions(&v), vec![IntVector::from_i64s(&[1])]);
        let all = price_effect_set(&v, false);
        assert!(all.iter().any(|e| e.delta == IntVector::from_i64s(&[2])));
        assert!(price_effect_set(&v, true).is_empty());
    }

    #[test]
    fn pseudoconcavity_verdicts() {
        let s = space(&["a", "b"], 1);
        assert!(is_pseudoconcave(&linear(&s, &[1, 2])).holds());
        assert!(is_pseudoconcave(&min_pair(&s, &["a", "b"])).holds());
        // Single good, M = 2, V = (0,0,3): cell {0,2} misses the point 1.
        let s1 = space(&["g"], 2);
        let mut entries = BTreeMap::new();
        for (count, val) in [(0i64, 0i64), (1, 0), (2, 3)] {
            entries.insert(IntVector::from_i64s(&[count]), rat_int(val));
        }
        let v = Valuation::new(s1, ValuationSpec::Table { entries }).unwrap();
        match is_pseudoconcave(&v) {
            PseudoconcavityVerdict::Violation { price, missing_point } => {
                assert_eq!(price, PriceVector(vec![rat(3, 2)]));
                assert_eq!(missing_point, IntVector::from_i64s(&[1]));
            }
            PseudoconcavityVerdict::Pseudoconcave => panic!("expected a violation"),
        }
    }

    #[test]
    fn own_type_membership() {
        let s = space(&["a", "b"], 1);
        let v = min_pair(&s, &["a", "b"]);
        let own = demand_type_vectors(&v);
        assert!(is_of_demand_type(&v, &own));
        // Of type {units, (1,1)} but not of the box type alone.
        assert!(!is_of_demand_type(&v, &units(2)));
    }

    #[test]
    fn edge_scan_agrees_with_face_lattice() {
        // On valuations whose subdivision is insensitive to the price-sign
        // restriction, the pair scan and the hull kernel list the same
        // one-dimensional directions.
        let s2 = space(&["a", "b"], 1);
        let s3 = space(&["a", "b", "c"], 1);
        let samples = vec![
            Valuation::zero(s2.clone()),
            linear(&s2, &[1, 2]),
            min_pair(&s2, &["a", "b"]),
            min_pair(&s3, &["a", "b"]),
        ];
        for v in samples {
            let pts = LiftedPointSet::from_valuation(&v);
            let mut from_lattice: BTreeSet<IntVector> = BTreeSet::new();
            for cell in face_lattice(&pts) {
                if cell.dim == 1 {
                    let members: Vec<&IntVector> =
                        cell.members.iter().map(|&i| &pts.points[i].0).collect();
                    from_lattice
                        .insert(members[1].sub(members[0]).primitive_normalized());
                }
            }
            let from_scan: BTreeSet<IntVector> =
                demand_type_vectors(&v).into_iter().collect();
            assert_eq!(from_scan, from_lattice, "valuation {v}");
        }
    }
}
