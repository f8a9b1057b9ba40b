//! Pairwise good classification, unit consistency, relevant bundles, bundle
//! consistency (direct enumeration over bundlings and the total-unimodularity
//! shortcut), and counterexample synthesis from inconsistent preference
//! pairs.

use crate::demand::{bundled_demand, expand_to_items, Bundling, PriceVector};
use crate::economy::{Agent, Economy};
use crate::geometry::{demand_type_vectors, one_dim_cells, price_effect_set, EdgeCell};
use crate::num::{is_totally_unimodular, sorted_unique, Int, IntVector, Rat, TuVerdict};
use crate::valuation::{linear_shift, Valuation, ValuationSpec};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairVerdict {
    Substitutable,
    Complementary,
    /// No strict effect either way.
    Both,
    Inconsistent,
}

/// Classification of a good pair across a set of agents, from the signs of
/// the products d_i * d_k over all demand-type vectors d.
#[derive(Clone, Debug)]
pub struct PairClassification {
    pub verdict: PairVerdict,
    /// (agent index, demand-type vector) with a positive product.
    pub complement_witness: Option<(usize, IntVector)>,
    /// (agent index, demand-type vector) with a negative product.
    pub substitute_witness: Option<(usize, IntVector)>,
}

/// Demand-type vectors of every agent, each with the first agent realizing
/// it, in lexicographic vector order.
fn union_demand_types(agents: &[Valuation]) -> Vec<(IntVector, usize)> {
    let mut map: BTreeMap<IntVector, usize> = BTreeMap::new();
    for (idx, v) in agents.iter().enumerate() {
        for d in demand_type_vectors(v) {
            map.entry(d).or_insert(idx);
        }
    }
    map.into_iter().collect()
}

pub fn classify_good_pair(agents: &[Valuation], i: usize, k: usize) -> PairClassification {
    assert_ne!(i, k, "classify distinct goods");
    let mut complement_witness = None;
    let mut substitute_witness = None;
    for (d, agent) in union_demand_types(agents) {
        let product = &d.0[i] * &d.0[k];
        if product.is_positive() && complement_witness.is_none() {
            complement_witness = Some((agent, d.clone()));
        } else if product.is_negative() && substitute_witness.is_none() {
            substitute_witness = Some((agent, d.clone()));
        }
    }
    let verdict = match (&complement_witness, &substitute_witness) {
        (Some(_), Some(_)) => PairVerdict::Inconsistent,
        (Some(_), None) => PairVerdict::Complementary,
        (None, Some(_)) => PairVerdict::Substitutable,
        (None, None) => PairVerdict::Both,
    };
    PairClassification { verdict, complement_witness, substitute_witness }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnitConsistency {
    Consistent,
    /// Two units of the same good move together along an item-level
    /// demand-type vector.
    Violation {
        good: usize,
        serial_low: u32,
        serial_high: u32,
        direction: IntVector,
    },
}

impl UnitConsistency {
    pub fn holds(&self) -> bool {
        matches!(self, UnitConsistency::Consistent)
    }
}

/// Units of the same good must be substitutes once each unit is treated as a
/// separate item. Trivially true when M = 1.
pub fn is_unit_consistent(v: &Valuation) -> UnitConsistency {
    let m = v.space().max_units;
    if m == 1 {
        return UnitConsistency::Consistent;
    }
    let expansion = expand_to_items(v);
    let per_good = expansion.items_per_good() as usize;
    for d in demand_type_vectors(&expansion.valuation) {
        for good in 0..v.space().len() {
            for lo in 0..per_good {
                for hi in lo + 1..per_good {
                    let a = &d.0[good * per_good + lo];
                    let b = &d.0[good * per_good + hi];
                    if (a * b).is_positive() {
                        return UnitConsistency::Violation {
                            good,
                            serial_low: lo as u32 + 1,
                            serial_high: hi as u32 + 1,
                            direction: d,
                        };
                    }
                }
            }
        }
    }
    UnitConsistency::Consistent
}

/// Coordinate bundles plus every agent's unit-box price effect, sign
/// normalized and deduplicated.
pub fn relevant_bundles(agents: &[Valuation]) -> Vec<IntVector> {
    let n = agents
        .first()
        .expect("at least one agent")
        .space()
        .len();
    let mut bundles: Vec<IntVector> = (0..n).map(|i| IntVector::unit(n, i)).collect();
    for v in agents {
        for e in price_effect_set(v, true) {
            bundles.push(e.delta.primitive_normalized());
        }
    }
    sorted_unique(bundles)
}

/// Witness of a bundle inconsistency: within `bundling`, the two basis
/// positions are complementary along one agent's transformed demand-type
/// vector and substitutable along another's.
#[derive(Clone, Debug)]
pub struct InconsistencyWitness {
    pub bundling: Vec<IntVector>,
    pub pair: (usize, usize),
    pub complement: (usize, IntVector),
    pub substitute: (usize, IntVector),
}

#[derive(Clone, Debug)]
pub enum ConsistencyVerdict {
    Consistent,
    Inconsistent(InconsistencyWitness),
}

impl ConsistencyVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ConsistencyVerdict::Consistent)
    }
}

/// First inconsistent bundle pair within one bundling, judged by the signs
/// of (G^-1 d)_k (G^-1 d)_l across all agents' demand-type vectors.
pub fn check_bundling(agents: &[Valuation], bundling: &Bundling) -> Option<InconsistencyWitness> {
    let types = union_demand_types(agents);
    let transformed: Vec<Vec<Rat>> = types
        .iter()
        .map(|(d, _)| bundling.coordinates(d))
        .collect();
    let n = bundling.dimension();
    for k in 0..n {
        for l in k + 1..n {
            let mut complement = None;
            let mut substitute = None;
            for ((d, agent), q) in types.iter().zip(&transformed) {
                let product = &q[k] * &q[l];
                if product.is_positive() && complement.is_none() {
                    complement = Some((*agent, d.clone()));
                } else if product.is_negative() && substitute.is_none() {
                    substitute = Some((*agent, d.clone()));
                }
                if let (Some(c), Some(s)) = (&complement, &substitute) {
                    return Some(InconsistencyWitness {
                        bundling: bundling.bundles.clone(),
                        pair: (k, l),
                        complement: c.clone(),
                        substitute: s.clone(),
                    });
                }
            }
        }
    }
    None
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if cur[i] != i + n - k {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            return out;
        }
    }
}

/// Enumerates every bundling made of relevant bundles (all bases of size
/// |goods| in lexicographic order) and checks every bundle pair; the first
/// inconsistent pair found is returned as the witness.
pub fn check_bundle_consistency_direct(agents: &[Valuation]) -> ConsistencyVerdict {
    let relevant = relevant_bundles(agents);
    let n = agents[0].space().len();
    for subset in combinations(relevant.len(), n) {
        let bundles: Vec<IntVector> = subset.iter().map(|&i| relevant[i].clone()).collect();
        let Ok(bundling) = Bundling::new(bundles) else {
            continue; // not a basis
        };
        if let Some(witness) = check_bundling(agents, &bundling) {
            return ConsistencyVerdict::Inconsistent(witness);
        }
    }
    ConsistencyVerdict::Consistent
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("agent {agent_index} is not unit-consistent; the total-unimodularity test requires unit consistency")]
pub struct UnitInconsistentInput {
    pub agent_index: usize,
    pub violation: UnitConsistency,
}

#[derive(Clone, Debug)]
pub struct TuConsistency {
    pub verdict: TuVerdict,
    /// The vectors tested: relevant bundles (effects plus coordinate bundles).
    pub vectors: Vec<IntVector>,
}

impl TuConsistency {
    pub fn holds(&self) -> bool {
        self.verdict.is_tu()
    }
}

/// Bundle consistency via total unimodularity of the unit-box price effects
/// (coordinate bundles included, which never changes the verdict). Requires
/// every agent to be unit-consistent.
pub fn check_bundle_consistency_tu(
    agents: &[Valuation],
) -> Result<TuConsistency, UnitInconsistentInput> {
    for (agent_index, v) in agents.iter().enumerate() {
        let verdict = is_unit_consistent(v);
        if !verdict.holds() {
            return Err(UnitInconsistentInput { agent_index, violation: verdict });
        }
    }
    let vectors = relevant_bundles(agents);
    Ok(TuConsistency { verdict: is_totally_unimodular(&vectors), vectors })
}

/// Replays an inconsistency witness through bundled-demand comparative
/// statics: for each side, isolating one end of the witness agent's cell by
/// raising the bundle price of pair position `k` and lowering it back moves
/// demand for pair position `l` in the direction the sign product predicts.
pub fn replay_witness(agents: &[Valuation], witness: &InconsistencyWitness) -> Result<(), String> {
    let bundling = Bundling::new(witness.bundling.clone()).map_err(|e| e.to_string())?;
    let (k, l) = witness.pair;
    for (expectation, (agent_idx, d)) in [
        (1, &witness.complement),
        (-1, &witness.substitute),
    ]
    .map(|(s, w)| (s, w))
    {
        let v = &agents[*agent_idx];
        let cell = one_dim_cells(v)
            .into_iter()
            .find(|c| c.direction == *d)
            .ok_or_else(|| format!("no cell parallel to {d} for agent {agent_idx}"))?;
        let q_move = replay_cell(v, &bundling, &cell, k, l)?;
        let sign = if q_move.is_positive() { 1 } else { -1 };
        if sign != expectation {
            return Err(format!(
                "bundle {l} moved by {q_move} when bundle {k}'s price fell; expected sign {expectation}"
            ));
        }
    }
    Ok(())
}

/// Comparative statics of one agent along one cell, in bundle coordinates:
/// returns the change in the quantity of bundle `l` when the price of bundle
/// `k` falls from an isolating level back to the cell's supporting level.
fn replay_cell(
    v: &Valuation,
    bundling: &Bundling,
    cell: &EdgeCell,
    k: usize,
    l: usize,
) -> Result<Rat, String> {
    // Bundle prices inducing the cell's goods prices: p~ = G^T p.
    let g = bundling.matrix.to_rational();
    let base_bundle_prices = PriceVector(g.transpose().mul_vec(&cell.price.0));
    let q_of = |x: &IntVector| bundling.coordinates(x);
    let members_q: Vec<Vec<Rat>> = cell.members.iter().map(|m| q_of(m)).collect();
    let t = {
        let d: Vec<Rat> = bundling.coordinates(&cell.direction);
        d
    };
    if t[k].is_zero() || t[l].is_zero() {
        return Err("witness direction has no movement on the pair".into());
    }
    // Isolate the member with the fewest units of bundle k by raising that
    // bundle's price; epsilon is bounded by payoff gaps per unit of q_k.
    let iso_idx = (0..cell.members.len())
        .min_by(|&a, &b| members_q[a][k].cmp(&members_q[b][k]))
        .unwrap();
    let iso = &cell.members[iso_idx];
    let top = v.eval_unchecked(&cell.members[0]) - cell.price.dot(&cell.members[0]);
    let member_set: BTreeSet<&IntVector> = cell.members.iter().collect();
    let mut epsilon: Option<Rat> = None;
    for x in v.domain() {
        if member_set.contains(x) {
            continue;
        }
        let saving = &q_of(iso)[k] - &q_of(x)[k];
        if !saving.is_positive() {
            continue;
        }
        let gap = &top - (v.eval_unchecked(x) - cell.price.dot(x));
        let bound = gap / saving;
        epsilon = Some(match epsilon {
            None => bound,
            Some(e) => e.min(bound),
        });
    }
    let eps = epsilon
        .map(|e| e / Rat::from_integer(Int::from(2)))
        .unwrap_or_else(Rat::one);
    let raised = {
        let mut p = base_bundle_prices.clone();
        p.0[k] = &p.0[k] + eps;
        p
    };
    let before = bundled_demand(v, bundling, &raised);
    if before.len() != 1 {
        return Err("failed to isolate a unique bundled demand".into());
    }
    let before_q = before.into_iter().next().unwrap();
    if &before_q != &members_q[iso_idx] {
        return Err("isolated the wrong cell member".into());
    }
    let after = bundled_demand(v, bundling, &base_bundle_prices);
    // Pick the member with the largest movement of bundle k (law of demand
    // keeps it nonnegative); report the matching movement of bundle l.
    let best = after
        .iter()
        .max_by(|a, b| (&a[k] - &before_q[k]).cmp(&(&b[k] - &before_q[k])))
        .unwrap();
    if !(&best[k] - &before_q[k]).is_positive() {
        return Err("demand for the cheaper bundle did not rise".into());
    }
    Ok(&best[l] - &before_q[l])
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SynthesisError {
    #[error("no strict {side} witness on the pair for the {which} valuation")]
    NoStrictWitness { side: &'static str, which: &'static str },
    #[error("the two valuations live on different good spaces")]
    SpaceMismatch,
}

/// Builds a three-agent economy with no competitive equilibrium out of a
/// strict-complements witness for the pair in `v1` and a strict-substitutes
/// witness in `v2`: both valuations are shifted so their witness cells share
/// one strictly positive price, endowments sit at the low endpoints of the
/// cells, and a third agent holds a linear valuation that is indifferent on
/// the pair.
pub fn synthesize_inconsistency_economy(
    v1: &Valuation,
    v2: &Valuation,
    k: usize,
    l: usize,
) -> Result<Economy, SynthesisError> {
    if v1.space() != v2.space() {
        return Err(SynthesisError::SpaceMismatch);
    }
    let space = v1.space().clone();
    let complement_cell = one_dim_cells(v1)
        .into_iter()
        .find(|c| c.direction.in_unit_box() && (&c.direction.0[k] * &c.direction.0[l]).is_positive())
        .ok_or(SynthesisError::NoStrictWitness { side: "complement", which: "first" })?;
    let substitute_cell = one_dim_cells(v2)
        .into_iter()
        .find(|c| c.direction.in_unit_box() && (&c.direction.0[k] * &c.direction.0[l]).is_negative())
        .ok_or(SynthesisError::NoStrictWitness { side: "substitute", which: "second" })?;

    // Common strictly positive price dominating both cells' prices.
    let n = space.len();
    let price: Vec<Rat> = (0..n)
        .map(|i| {
            complement_cell.price.0[i]
                .clone()
                .max(substitute_cell.price.0[i].clone())
                .max(Rat::one())
        })
        .collect();
    let shift1: Vec<Rat> = (0..n).map(|i| &price[i] - &complement_cell.price.0[i]).collect();
    let shift2: Vec<Rat> = (0..n).map(|i| &price[i] - &substitute_cell.price.0[i]).collect();
    let shifted1 = linear_shift(v1, &shift1).expect("dominating shift is nonnegative");
    let shifted2 = linear_shift(v2, &shift2).expect("dominating shift is nonnegative");

    // Orient each witness direction so its k-component is +1, and endow each
    // agent with the low endpoint of its cell along the oriented direction.
    let low_endpoint = |cell: &EdgeCell| -> (IntVector, IntVector) {
        let oriented = if cell.direction.0[k].is_positive() {
            cell.direction.clone()
        } else {
            cell.direction.neg()
        };
        let endpoint = if oriented == cell.direction {
            cell.members.first().unwrap().clone()
        } else {
            cell.members.last().unwrap().clone()
        };
        (oriented, endpoint)
    };
    let (d1, w1) = low_endpoint(&complement_cell);
    let (d2, w2) = low_endpoint(&substitute_cell);

    // Third agent: linear on {0,1}^I at the common price, zeroed on the pair.
    let mut hat = price.clone();
    hat[k] = Rat::zero();
    hat[l] = Rat::zero();
    let mut entries = BTreeMap::new();
    let binary_box = crate::valuation::GoodSpace::new(space.goods.clone(), 1)
        .expect("good space is valid");
    for x in binary_box.full_box() {
        let value: Rat = hat
            .iter()
            .zip(&x.0)
            .map(|(p, c)| p * Rat::from_integer(c.clone()))
            .sum();
        entries.insert(x, value);
    }
    let v3 = Valuation::new(space.clone(), ValuationSpec::Table { entries })
        .expect("linear table is valid");
    let w3 = IntVector(
        (0..n)
            .map(|i| {
                if (&d1.0[i] + &d2.0[i]).is_positive() {
                    Int::one()
                } else {
                    Int::zero()
                }
            })
            .collect(),
    );

    Economy::new(
        space,
        vec![
            Agent { id: "complement-side".into(), valuation: shifted1, endowment: w1 },
            Agent { id: "substitute-side".into(), valuation: shifted2, endowment: w2 },
            Agent { id: "linear-bystander".into(), valuation: v3, endowment: w3 },
        ],
    )
    .map_err(|_| SynthesisError::SpaceMismatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat_int;
    use crate::valuation::GoodSpace;

    fn space(goods: &[&str], m: u32) -> GoodSpace {
        GoodSpace::new(goods.iter().map(|s| s.to_string()).collect(), m).unwrap()
    }

    fn min_pair(space: &GoodSpace, goods: &[&str]) -> Valuation {
        Valuation::new(space.clone(), ValuationSpec::scaled_min(rat_int(3), goods)).unwrap()
    }

    fn three_cycle() -> Vec<Valuation> {
        let s = space(&["a", "b", "c"], 1);
        vec![
            min_pair(&s, &["a", "b"]),
            min_pair(&s, &["b", "c"]),
            min_pair(&s, &["a", "c"]),
        ]
    }

    #[test]
    fn three_cycle_pairs_are_complementary() {
        let agents = three_cycle();
        for (i, k) in [(0, 1), (1, 2), (0, 2)] {
            let c = classify_good_pair(&agents, i, k);
            assert_eq!(c.verdict, PairVerdict::Complementary, "pair ({i},{k})");
        }
    }

    #[test]
    fn zero_valuation_pair_is_both_ways() {
        let v0 = Valuation::zero(space(&["a", "b"], 1));
        let c = classify_good_pair(&[v0], 0, 1);
        assert_eq!(c.verdict, PairVerdict::Both);
    }

    #[test]
    fn mixed_min_and_substitutes_is_inconsistent() {
        let s = space(&["a", "b"], 1);
        let complements = min_pair(&s, &["a", "b"]);
        let substitutes = Valuation::new(
            s,
            ValuationSpec::scaled_min_of_sum(rat_int(3), &["a", "b"], 1),
        )
        .unwrap();
        let c = classify_good_pair(&[complements, substitutes], 0, 1);
        assert_eq!(c.verdict, PairVerdict::Inconsistent);
        assert!(c.complement_witness.is_some());
        assert!(c.substitute_witness.is_some());
        // Symmetry in the pair.
        let agents = [
            min_pair(&space(&["a", "b"], 1), &["a", "b"]),
        ];
        let ab = classify_good_pair(&agents, 0, 1);
        let ba = classify_good_pair(&agents, 1, 0);
        assert_eq!(ab.verdict, ba.verdict);
    }

    #[test]
    fn unit_consistency_trivial_for_single_units() {
        let agents = three_cycle();
        for v in &agents {
            assert!(is_unit_consistent(v).holds());
        }
    }

    #[test]
    fn bulk_discount_violates_unit_consistency() {
        let s = space(&["g"], 2);
        let mut entries = BTreeMap::new();
        for (count, val) in [(0i64, 0i64), (1, 0), (2, 3)] {
            entries.insert(IntVector::from_i64s(&[count]), rat_int(val));
        }
        let v = Valuation::new(s, ValuationSpec::Table { entries }).unwrap();
        match is_unit_consistent(&v) {
            UnitConsistency::Violation { good, serial_low, serial_high, .. } => {
                assert_eq!((good, serial_low, serial_high), (0, 1, 2));
            }
            UnitConsistency::Consistent => panic!("bulk discount must fail"),
        }
    }

    #[test]
    fn relevant_bundles_of_three_cycle() {
        let agents = three_cycle();
        let relevant = relevant_bundles(&agents);
        let expected: Vec<IntVector> = sorted_unique(
            [
                &[1i64, 0, 0][..],
                &[0, 1, 0],
                &[0, 0, 1],
                &[1, 1, 0],
                &[0, 1, 1],
                &[1, 0, 1],
            ]
            .iter()
            .map(|v| IntVector::from_i64s(v)),
        );
        assert_eq!(relevant, expected);
    }

    #[test]
    fn three_cycle_is_bundle_inconsistent_both_ways() {
        let agents = three_cycle();
        let direct = check_bundle_consistency_direct(&agents);
        let witness = match &direct {
            ConsistencyVerdict::Inconsistent(w) => w,
            ConsistencyVerdict::Consistent => panic!("three-cycle must be inconsistent"),
        };
        replay_witness(&agents, witness).expect("witness replays");
        let tu = check_bundle_consistency_tu(&agents).unwrap();
        assert!(!tu.holds());
        // The paper's own bundling exhibits the inconsistency on the pair
        // (apple-bundle, coconut-bundle).
        let paper_bundling =
            Bundling::from_i64s(&[&[1, 0, 0], &[1, 1, 0], &[0, 0, 1]]).unwrap();
        let w = check_bundling(&agents, &paper_bundling).expect("paper bundling is inconsistent");
        assert_eq!(w.pair, (0, 2));
        replay_witness(&agents, &w).expect("paper witness replays");
    }

    #[test]
    fn consecutive_variant_is_bundle_consistent() {
        let s = space(&["a", "b", "c"], 1);
        let agents = vec![
            min_pair(&s, &["a", "b"]),
            min_pair(&s, &["b", "c"]),
            min_pair(&s, &["a", "b", "c"]),
        ];
        assert!(check_bundle_consistency_direct(&agents).holds());
        assert!(check_bundle_consistency_tu(&agents).unwrap().holds());
    }

    #[test]
    fn tu_check_rejects_unit_inconsistent_input() {
        let s = space(&["g"], 2);
        let mut entries = BTreeMap::new();
        for (count, val) in [(0i64, 0i64), (1, 0), (2, 3)] {
            entries.insert(IntVector::from_i64s(&[count]), rat_int(val));
        }
        let v = Valuation::new(s, ValuationSpec::Table { entries }).unwrap();
        let err = check_bundle_consistency_tu(&[v]).unwrap_err();
        assert_eq!(err.agent_index, 0);
    }

    #[test]
    fn synthesis_requires_strict_witnesses() {
        let s = space(&["a", "b"], 1);
        let complements = min_pair(&s, &["a", "b"]);
        let err = synthesize_inconsistency_economy(&complements, &complements, 0, 1).unwrap_err();
        assert!(matches!(err, SynthesisError::NoStrictWitness { .. }));
    }

    #[test]
    fn synthesis_builds_three_agents_with_matching_supply() {
        let s = space(&["a", "b"], 1);
        let complements = min_pair(&s, &["a", "b"]);
        let substitutes = Valuation::new(
            s,
            ValuationSpec::scaled_min_of_sum(rat_int(3), &["a", "b"], 1),
        )
        .unwrap();
        let economy =
            synthesize_inconsistency_economy(&complements, &substitutes, 0, 1).unwrap();
        assert_eq!(economy.agents.len(), 3);
        assert_eq!(economy.total_supply(), IntVector::from_i64s(&[1, 1]));
    }
}
