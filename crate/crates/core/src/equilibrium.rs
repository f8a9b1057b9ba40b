//! Competitive-equilibrium existence and computation: exhaustive welfare
//! maximization, the exact Lyapunov linear program, allocation extraction
//! from demand sets, and full verification of any claimed equilibrium.
//!
//! Existence is decided by exact duality: the Lyapunov minimum over prices
//! always weakly exceeds the best integral welfare, and an equilibrium exists
//! precisely when the two values coincide.

use crate::demand::{demand_set, PriceVector};
use crate::economy::Economy;
use crate::lp::{LinearProgram, LpOutcome, Rel};
use crate::num::{Int, IntVector, Rat};
use num_traits::{Signed, Zero};
use std::collections::{BTreeSet, HashSet};

/// Per-agent consumption bundles in agent order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation(pub Vec<IntVector>);

impl Allocation {
    pub fn total(&self) -> IntVector {
        let mut acc = IntVector::zeros(self.0[0].len());
        for x in &self.0 {
            acc = acc.add(x);
        }
        acc
    }
}

pub const MAX_REPORTED_OPTIMA: usize = 64;

#[derive(Clone, Debug)]
pub struct WelfareOptimum {
    pub value: Rat,
    /// Welfare-maximizing allocations in lexicographic order, capped at
    /// [MAX_REPORTED_OPTIMA]; `count` is always exact.
    pub allocations: Vec<Allocation>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no feasible allocation sums to the total supply")]
pub struct InfeasibleSupply;

/// Exhaustive welfare maximization over allocations that clear the market
/// exactly. Agents are explored in order and bundles in lexicographic order.
pub fn welfare_optimum(e: &Economy) -> Result<WelfareOptimum, InfeasibleSupply> {
    let supply = e.total_supply();
    let mut best: Option<Rat> = None;
    let mut allocations: Vec<Allocation> = Vec::new();
    let mut count = 0usize;
    let mut partial: Vec<IntVector> = Vec::new();

    fn recurse(
        e: &Economy,
        agent: usize,
        remaining: IntVector,
        running: Rat,
        partial: &mut Vec<IntVector>,
        best: &mut Option<Rat>,
        allocations: &mut Vec<Allocation>,
        count: &mut usize,
    ) {
        if agent == e.agents.len() {
            if !remaining.is_zero() {
                return;
            }
            match best.as_ref() {
                Some(b) if running < *b => {}
                Some(b) if running == *b => {
                    *count += 1;
                    if allocations.len() < MAX_REPORTED_OPTIMA {
                        allocations.push(Allocation(partial.clone()));
                    }
                }
                _ => {
                    *best = Some(running);
                    *count = 1;
                    allocations.clear();
                    allocations.push(Allocation(partial.clone()));
                }
            }
            return;
        }
        for x in e.agents[agent].valuation.domain() {
            if x.0.iter().zip(&remaining.0).any(|(c, r)| c > r) {
                continue;
            }
            let value = e.agents[agent].valuation.eval_unchecked(x);
            partial.push(x.clone());
            recurse(
                e,
                agent + 1,
                remaining.sub(x),
                &running + value,
                partial,
                best,
                allocations,
                count,
            );
            partial.pop();
        }
    }

    recurse(
        e,
        0,
        supply,
        Rat::zero(),
        &mut partial,
        &mut best,
        &mut allocations,
        &mut count,
    );
    match best {
        Some(value) => Ok(WelfareOptimum { value, allocations, count }),
        None => Err(InfeasibleSupply),
    }
}

#[derive(Clone, Debug)]
pub struct LyapunovMinimum {
    pub value: Rat,
    pub price: PriceVector,
}

/// Minimizes sum_j max_x (V_j(x) - p.x) + p.W exactly, as a linear program
/// over (p, u_1..u_J) with one constraint per agent and bundle. The optimum
/// equals the fractional welfare relaxation; the minimizing price supports an
/// equilibrium whenever one exists.
pub fn lyapunov_minimum(e: &Economy) -> LyapunovMinimum {
    let n = e.space.len();
    let agents = e.agents.len();
    let supply = e.total_supply();
    // Variables: p_1..p_n, u_1..u_J (all free). Maximize -(sum u + p.W).
    let mut lp = LinearProgram::new(n + agents);
    for i in 0..n {
        lp.objective[i] = -Rat::from_integer(supply.0[i].clone());
    }
    for j in 0..agents {
        lp.objective[n + j] = -Rat::from_integer(Int::from(1));
    }
    for (j, agent) in e.agents.iter().enumerate() {
        for x in agent.valuation.domain() {
            // u_j + p.x >= V_j(x).
            let mut coeffs = vec![Rat::zero(); n + agents];
            for i in 0..n {
                coeffs[i] = Rat::from_integer(x.0[i].clone());
            }
            coeffs[n + j] = Rat::from_integer(Int::from(1));
            lp.constrain(coeffs, Rel::Ge, agent.valuation.eval_unchecked(x).clone());
        }
    }
    match lp.solve() {
        LpOutcome::Optimal(sol) => LyapunovMinimum {
            value: -sol.value,
            price: PriceVector(sol.assignment[..n].to_vec()),
        },
        // The objective is bounded below by any feasible allocation's
        // welfare and every economy has one (the endowment allocation).
        other => unreachable!("Lyapunov program must be solvable, got {other:?}"),
    }
}

#[derive(Clone, Debug)]
pub enum EquilibriumResult {
    Equilibrium {
        price: PriceVector,
        allocation: Allocation,
    },
    NonExistence {
        ip_value: Rat,
        lp_value: Rat,
        gap: Rat,
    },
}

impl EquilibriumResult {
    pub fn exists(&self) -> bool {
        matches!(self, EquilibriumResult::Equilibrium { .. })
    }
}

/// Decides existence by comparing the integral welfare optimum against the
/// Lyapunov minimum. On equality the minimizing price is turned into an
/// equilibrium by searching each agent's demand set for a market-clearing
/// selection (depth-first, agents in order, bundles lexicographic, failed
/// partial sums memoized); the result is verified before it is returned.
pub fn find_equilibrium(e: &Economy) -> Result<EquilibriumResult, InfeasibleSupply> {
    let welfare = welfare_optimum(e)?;
    let lyapunov = lyapunov_minimum(e);
    debug_assert!(
        lyapunov.value >= welfare.value,
        "weak duality: Lyapunov {} < welfare {}",
        lyapunov.value,
        welfare.value
    );
    if lyapunov.value != welfare.value {
        let gap = &lyapunov.value - &welfare.value;
        assert!(gap.is_positive());
        return Ok(EquilibriumResult::NonExistence {
            ip_value: welfare.value,
            lp_value: lyapunov.value,
            gap,
        });
    }
    let price = lyapunov.price;
    let demands: Vec<Vec<IntVector>> = e
        .agents
        .iter()
        .map(|a| demand_set(&a.valuation, &price).into_iter().collect())
        .collect();
    let supply = e.total_supply();
    let mut dead: HashSet<(usize, IntVector)> = HashSet::new();

    fn search(
        demands: &[Vec<IntVector>],
        agent: usize,
        remaining: IntVector,
        partial: &mut Vec<IntVector>,
        dead: &mut HashSet<(usize, IntVector)>,
    ) -> bool {
        if agent == demands.len() {
            return remaining.is_zero();
        }
        if dead.contains(&(agent, remaining.clone())) {
            return false;
        }
        for x in &demands[agent] {
            if x.0.iter().zip(&remaining.0).any(|(c, r)| c > r) {
                continue;
            }
            partial.push(x.clone());
            if search(demands, agent + 1, remaining.sub(x), partial, dead) {
                return true;
            }
            partial.pop();
        }
        dead.insert((agent, remaining));
        false
    }

    let mut partial = Vec::new();
    let found = search(&demands, 0, supply, &mut partial, &mut dead);
    assert!(
        found,
        "value equality guarantees a market-clearing selection from demand sets"
    );
    let allocation = Allocation(partial);
    let verification = verify_equilibrium(e, &price, &allocation);
    assert!(
        verification.is_ok(),
        "extracted equilibrium failed verification: {verification:?}"
    );
    Ok(EquilibriumResult::Equilibrium { price, allocation })
}

/// A reason an (price, allocation) pair fails to be an equilibrium.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquilibriumViolation {
    /// The agent's assigned bundle is not in their demand set; a strictly
    /// better bundle is included.
    NotDemanded {
        agent: String,
        assigned: IntVector,
        better: IntVector,
    },
    /// Aggregate demand minus supply.
    ExcessDemand { excess: IntVector },
    /// Assigned bundle outside the agent's domain.
    InfeasibleBundle { agent: String, assigned: IntVector },
}

/// Checks the two equilibrium conditions: every agent's bundle maximizes
/// quasilinear payoff at the prices, and markets clear. All violations are
/// reported.
pub fn verify_equilibrium(
    e: &Economy,
    price: &PriceVector,
    allocation: &Allocation,
) -> Result<(), Vec<EquilibriumViolation>> {
    let mut violations = Vec::new();
    assert_eq!(allocation.0.len(), e.agents.len());
    for (agent, x) in e.agents.iter().zip(&allocation.0) {
        if agent.valuation.eval(x).is_err() {
            violations.push(EquilibriumViolation::InfeasibleBundle {
                agent: agent.id.clone(),
                assigned: x.clone(),
            });
            continue;
        }
        let demand = demand_set(&agent.valuation, price);
        if !demand.contains(x) {
            let better = demand.first().expect("demand sets are never empty");
            violations.push(EquilibriumViolation::NotDemanded {
                agent: agent.id.clone(),
                assigned: x.clone(),
                better: better.clone(),
            });
        }
    }
    let excess = allocation.total().sub(&e.total_supply());
    if !excess.is_zero() {
        violations.push(EquilibriumViolation::ExcessDemand { excess });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Useful in tests: all endowment splits handing each unit of the supply to
/// exactly one agent (componentwise supply at most 1).
pub fn unit_supply_splits(e: &Economy, supply: &IntVector) -> Vec<Vec<IntVector>> {
    let agents = e.agents.len();
    let n = supply.len();
    let positive: Vec<usize> = (0..n).filter(|&i| supply.0[i].is_positive()).collect();
    let mut out = Vec::new();
    let combos = agents.pow(positive.len() as u32);
    for code in 0..combos {
        let mut endowments = vec![IntVector::zeros(n); agents];
        let mut c = code;
        for &good in &positive {
            let owner = c % agents;
            c /= agents;
            endowments[owner].0[good] = Int::from(1);
        }
        out.push(endowments);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::Agent;
    use crate::num::{rat, rat_int};
    use crate::valuation::{GoodSpace, Valuation, ValuationSpec};
    use std::collections::BTreeMap;

    fn space3() -> GoodSpace {
        GoodSpace::new(vec!["apple".into(), "banana".into(), "coconut".into()], 1).unwrap()
    }

    fn min_pair(space: &GoodSpace, goods: &[&str]) -> Valuation {
        Valuation::new(space.clone(), ValuationSpec::scaled_min(rat_int(3), goods)).unwrap()
    }

    fn three_cycle_economy() -> Economy {
        let s = space3();
        let agents = vec![
            Agent {
                id: "1".into(),
                valuation: min_pair(&s, &["apple", "banana"]),
                endowment: IntVector::from_i64s(&[1, 0, 0]),
            },
            Agent {
                id: "2".into(),
                valuation: min_pair(&s, &["banana", "coconut"]),
                endowment: IntVector::from_i64s(&[0, 1, 0]),
            },
            Agent {
                id: "3".into(),
                valuation: min_pair(&s, &["apple", "coconut"]),
                endowment: IntVector::from_i64s(&[0, 0, 1]),
            },
        ];
        Economy::new(s, agents).unwrap()
    }

    fn consecutive_economy() -> Economy {
        let s = space3();
        let agents = vec![
            Agent {
                id: "1".into(),
                valuation: min_pair(&s, &["apple", "banana"]),
                endowment: IntVector::from_i64s(&[1, 0, 0]),
            },
            Agent {
                id: "2".into(),
                valuation: min_pair(&s, &["banana", "coconut"]),
                endowment: IntVector::from_i64s(&[0, 1, 0]),
            },
            Agent {
                id: "3".into(),
                valuation: min_pair(&s, &["apple", "banana", "coconut"]),
                endowment: IntVector::from_i64s(&[0, 0, 1]),
            },
        ];
        Economy::new(s, agents).unwrap()
    }

    #[test]
    fn three_cycle_welfare_is_three() {
        let w = welfare_optimum(&three_cycle_economy()).unwrap();
        assert_eq!(w.value, rat_int(3));
        assert!(w.count >= 1);
        for a in &w.allocations {
            assert_eq!(a.total(), IntVector::from_i64s(&[1, 1, 1]));
        }
    }

    #[test]
    fn three_cycle_lyapunov_is_nine_halves() {
        // Primal-dual sandwich done by hand: the half-assignment of each
        // complementary pair reaches 9/2, and the uniform price 3/2 caps the
        // Lyapunov value at 9/2.
        let l = lyapunov_minimum(&three_cycle_economy());
        assert_eq!(l.value, rat(9, 2));
    }

    #[test]
    fn three_cycle_has_no_equilibrium() {
        match find_equilibrium(&three_cycle_economy()).unwrap() {
            EquilibriumResult::NonExistence { ip_value, lp_value, gap } => {
                assert_eq!(ip_value, rat_int(3));
                assert_eq!(lp_value, rat(9, 2));
                assert_eq!(gap, rat(3, 2));
            }
            EquilibriumResult::Equilibrium { .. } => panic!("three-cycle has no equilibrium"),
        }
    }

    #[test]
    fn consecutive_variant_clears_for_all_unit_splits() {
        let base = consecutive_economy();
        let supply = IntVector::from_i64s(&[1, 1, 1]);
        let splits = unit_supply_splits(&base, &supply);
        assert_eq!(splits.len(), 27);
        for endowments in splits {
            let economy = base.with_endowments(&endowments).unwrap();
            match find_equilibrium(&economy).unwrap() {
                EquilibriumResult::Equilibrium { price, allocation } => {
                    assert!(verify_equilibrium(&economy, &price, &allocation).is_ok());
                }
                EquilibriumResult::NonExistence { .. } => {
                    panic!("consecutive variant must clear")
                }
            }
        }
    }

    #[test]
    fn single_zero_agent_economy() {
        let s = space3();
        let economy = Economy::new(
            s.clone(),
            vec![Agent {
                id: "only".into(),
                valuation: Valuation::zero(s),
                endowment: IntVector::from_i64s(&[0, 0, 0]),
            }],
        )
        .unwrap();
        let w = welfare_optimum(&economy).unwrap();
        assert_eq!(w.value, rat_int(0));
        assert_eq!(w.allocations[0].0[0], IntVector::from_i64s(&[0, 0, 0]));
        let l = lyapunov_minimum(&economy);
        assert_eq!(l.value, rat_int(0));
        assert!(find_equilibrium(&economy).unwrap().exists());
    }

    #[test]
    fn bulk_discount_single_agent_has_gap() {
        let space = GoodSpace::new(vec!["g".into()], 2).unwrap();
        let mut entries = BTreeMap::new();
        for (count, val) in [(0i64, 0i64), (1, 0), (2, 3)] {
            entries.insert(IntVector::from_i64s(&[count]), rat_int(val));
        }
        let v = Valuation::new(space.clone(), ValuationSpec::Table { entries }).unwrap();
        let economy = Economy::new(
            space,
            vec![Agent {
                id: "hoarder".into(),
                valuation: v,
                endowment: IntVector::from_i64s(&[1]),
            }],
        )
        .unwrap();
        match find_equilibrium(&economy).unwrap() {
            EquilibriumResult::NonExistence { ip_value, lp_value, gap } => {
                assert_eq!(ip_value, rat_int(0));
                assert_eq!(lp_value, rat(3, 2));
                assert_eq!(gap, rat(3, 2));
            }
            EquilibriumResult::Equilibrium { .. } => panic!("indivisible unit cannot clear"),
        }
    }

    #[test]
    fn verify_rejects_non_demanded_bundles() {
        let economy = three_cycle_economy();
        // Price (1,1,1), agent 1 takes both desired goods: agents 2 and 3
        // then hold bundles outside their demand sets.
        let allocation = Allocation(vec![
            IntVector::from_i64s(&[1, 1, 0]),
            IntVector::from_i64s(&[0, 0, 1]),
            IntVector::from_i64s(&[0, 0, 0]),
        ]);
        let result = verify_equilibrium(
            &economy,
            &PriceVector::from_i64s(&[1, 1, 1]),
            &allocation,
        );
        let violations = result.unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, EquilibriumViolation::NotDemanded { agent, .. } if agent == "2")));
        assert!(violations
            .iter()
            .any(|v| matches!(v, EquilibriumViolation::NotDemanded { agent, .. } if agent == "3")));
    }

    #[test]
    fn verify_accepts_trivial_equilibrium() {
        let s = space3();
        let economy = Economy::new(
            s.clone(),
            vec![Agent {
                id: "only".into(),
                valuation: Valuation::zero(s),
                endowment: IntVector::from_i64s(&[1, 0, 1]),
            }],
        )
        .unwrap();
        let allocation = Allocation(vec![IntVector::from_i64s(&[1, 0, 1])]);
        assert!(verify_equilibrium(&economy, &PriceVector::zeros(3), &allocation).is_ok());
    }

    #[test]
    fn duality_sandwich_on_mixed_economies() {
        let economies = [three_cycle_economy(), consecutive_economy()];
        for e in &economies {
            let w = welfare_optimum(e).unwrap();
            let l = lyapunov_minimum(e);
            assert!(l.value >= w.value);
            let result = find_equilibrium(e).unwrap();
            assert_eq!(result.exists(), l.value == w.value);
        }
    }
}
