//! Valuations over finite bundle domains, built from a small combinator tree,
//! plus the money-utility adapter that reduces income effects to the
//! quasilinear case at a fixed utility level.

use crate::num::{Int, IntVector, Rat};
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Ordered goods plus the per-good unit cap M. Bundles live in {0..M}^goods
/// unless a table restricts the domain further.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GoodSpace {
    pub goods: Vec<String>,
    pub max_units: u32,
}

impl GoodSpace {
    pub fn new(goods: Vec<String>, max_units: u32) -> Result<Self, ValuationError> {
        if max_units < 1 {
            return Err(ValuationError::BadSpace("max units must be at least 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &goods {
            if !seen.insert(g.clone()) {
                return Err(ValuationError::BadSpace(format!("duplicate good {g:?}")));
            }
        }
        if goods.is_empty() {
            return Err(ValuationError::BadSpace("need at least one good".into()));
        }
        Ok(GoodSpace { goods, max_units })
    }

    pub fn len(&self) -> usize {
        self.goods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goods.is_empty()
    }

    pub fn index_of(&self, good: &str) -> Option<usize> {
        self.goods.iter().position(|g| g == good)
    }

    /// The full box {0..M}^goods in lexicographic order.
    pub fn full_box(&self) -> Vec<IntVector> {
        let n = self.len();
        let m = self.max_units as i64;
        let mut out = Vec::new();
        let mut cur = vec![0i64; n];
        loop {
            out.push(IntVector::from_i64s(&cur));
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < m {
                    cur[i] += 1;
                    for c in cur.iter_mut().skip(i + 1) {
                        *c = 0;
                    }
                    break;
                }
                if i == 0 {
                    return out;
                }
            }
        }
    }

    pub fn contains(&self, x: &IntVector) -> bool {
        x.len() == self.len()
            && x.0
                .iter()
                .all(|c| !c.is_negative() && *c <= Int::from(self.max_units))
    }
}

/// Combinator tree for valuations. `Table` fixes an explicit domain; all
/// other nodes are total on the full box (intersected with their children's
/// domains).
#[derive(Clone, PartialEq, Debug)]
pub enum ValuationSpec {
    Table {
        entries: BTreeMap<IntVector, Rat>,
    },
    Linear {
        prices: Vec<Rat>,
    },
    /// scale * min(min over the listed goods of x_i, cap).
    ScaledMin {
        scale: Rat,
        goods: Vec<String>,
        cap: Option<u32>,
    },
    /// scale * min(sum over the listed goods of x_i, cap): perfect substitutes.
    ScaledMinOfSum {
        scale: Rat,
        goods: Vec<String>,
        cap: Option<u32>,
    },
    Sum {
        children: Vec<ValuationSpec>,
    },
    Shift {
        child: Box<ValuationSpec>,
        prices: Vec<Rat>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValuationError {
    #[error("bundle {bundle} is outside the valuation's domain")]
    OutOfDomain { bundle: String },
    #[error("shift prices must be nonnegative (component {index})")]
    NegativeShift { index: usize },
    #[error("unknown good {good:?}")]
    UnknownGood { good: String },
    #[error("target utility {target} is out of range for bundle {bundle}")]
    UtilityOutOfRange { target: String, bundle: String },
    #[error("invalid good space: {0}")]
    BadSpace(String),
    #[error("invalid valuation: {0}")]
    BadSpec(String),
}

impl ValuationSpec {
    pub fn zero_valuation() -> ValuationSpec {
        ValuationSpec::Linear { prices: vec![] }
    }

    pub fn scaled_min(scale: Rat, goods: &[&str]) -> ValuationSpec {
        ValuationSpec::ScaledMin {
            scale,
            goods: goods.iter().map(|s| s.to_string()).collect(),
            cap: None,
        }
    }

    pub fn scaled_min_of_sum(scale: Rat, goods: &[&str], cap: u32) -> ValuationSpec {
        ValuationSpec::ScaledMinOfSum {
            scale,
            goods: goods.iter().map(|s| s.to_string()).collect(),
            cap: Some(cap),
        }
    }

    fn validate(&self, space: &GoodSpace) -> Result<(), ValuationError> {
        match self {
            ValuationSpec::Table { entries } => {
                if entries.is_empty() {
                    return Err(ValuationError::BadSpec("table domain is empty".into()));
                }
                for x in entries.keys() {
                    if !space.contains(x) {
                        return Err(ValuationError::BadSpec(format!(
                            "table bundle {x} does not fit the good space"
                        )));
                    }
                }
                Ok(())
            }
            ValuationSpec::Linear { prices } | ValuationSpec::Shift { prices, .. } => {
                if !prices.is_empty() && prices.len() != space.len() {
                    return Err(ValuationError::BadSpec(format!(
                        "expected {} price components, got {}",
                        space.len(),
                        prices.len()
                    )));
                }
                if let ValuationSpec::Shift { child, prices } = self {
                    if let Some(index) = prices.iter().position(|p| p.is_negative()) {
                        return Err(ValuationError::NegativeShift { index });
                    }
                    child.validate(space)?;
                }
                Ok(())
            }
            ValuationSpec::ScaledMin { goods, .. } | ValuationSpec::ScaledMinOfSum { goods, .. } => {
                if goods.is_empty() {
                    return Err(ValuationError::BadSpec("min over an empty good set".into()));
                }
                for g in goods {
                    if space.index_of(g).is_none() {
                        return Err(ValuationError::UnknownGood { good: g.clone() });
                    }
                }
                Ok(())
            }
            ValuationSpec::Sum { children } => {
                for c in children {
                    c.validate(space)?;
                }
                Ok(())
            }
        }
    }

    /// Compositional evaluation; `None` marks a bundle outside the domain.
    fn eval_opt(&self, space: &GoodSpace, x: &IntVector) -> Option<Rat> {
        match self {
            ValuationSpec::Table { entries } => entries.get(x).cloned(),
            ValuationSpec::Linear { prices } => {
                if prices.is_empty() {
                    return Some(Rat::zero());
                }
                Some(
                    prices
                        .iter()
                        .zip(&x.0)
                        .map(|(p, c)| p * Rat::from_integer(c.clone()))
                        .sum(),
                )
            }
            ValuationSpec::ScaledMin { scale, goods, cap } => {
                let mut m: Option<Int> = None;
                for g in goods {
                    let i = space.index_of(g)?;
                    let c = x.0[i].clone();
                    m = Some(match m {
                        None => c,
                        Some(cur) => cur.min(c),
                    });
                }
                let mut m = m.unwrap_or_else(Int::zero);
                if let Some(cap) = cap {
                    m = m.min(Int::from(*cap));
                }
                Some(scale * Rat::from_integer(m))
            }
            ValuationSpec::ScaledMinOfSum { scale, goods, cap } => {
                let mut s = Int::zero();
                for g in goods {
                    let i = space.index_of(g)?;
                    s += &x.0[i];
                }
                if let Some(cap) = cap {
                    s = s.min(Int::from(*cap));
                }
                Some(scale * Rat::from_integer(s))
            }
            ValuationSpec::Sum { children } => {
                let mut acc = Rat::zero();
                for c in children {
                    acc += c.eval_opt(space, x)?;
                }
                Some(acc)
            }
            ValuationSpec::Shift { child, prices } => {
                let base = child.eval_opt(space, x)?;
                let shift: Rat = prices
                    .iter()
                    .zip(&x.0)
                    .map(|(p, c)| p * Rat::from_integer(c.clone()))
                    .sum();
                Some(base + shift)
            }
        }
    }
}

/// A valuation bound to its good space, with the finite domain and all values
/// tabulated once at construction. Immutable afterwards.
#[derive(Clone, PartialEq, Debug)]
pub struct Valuation {
    space: GoodSpace,
    spec: ValuationSpec,
    domain: Arc<Vec<IntVector>>,
    values: Arc<BTreeMap<IntVector, Rat>>,
}

impl Valuation {
    pub fn new(space: GoodSpace, spec: ValuationSpec) -> Result<Self, ValuationError> {
        spec.validate(&space)?;
        let mut values = BTreeMap::new();
        for x in space.full_box() {
            if let Some(v) = spec.eval_opt(&space, &x) {
                values.insert(x, v);
            }
        }
        if values.is_empty() {
            return Err(ValuationError::BadSpec(
                "valuation has an empty effective domain".into(),
            ));
        }
        let domain: Vec<IntVector> = values.keys().cloned().collect();
        Ok(Valuation {
            space,
            spec,
            domain: Arc::new(domain),
            values: Arc::new(values),
        })
    }

    pub fn zero(space: GoodSpace) -> Self {
        Valuation::new(space, ValuationSpec::zero_valuation()).expect("zero valuation is valid")
    }

    pub fn space(&self) -> &GoodSpace {
        &self.space
    }

    pub fn spec(&self) -> &ValuationSpec {
        &self.spec
    }

    /// Domain in lexicographic order.
    pub fn domain(&self) -> &[IntVector] {
        &self.domain
    }

    pub fn eval(&self, x: &IntVector) -> Result<Rat, ValuationError> {
        self.values
            .get(x)
            .cloned()
            .ok_or_else(|| ValuationError::OutOfDomain { bundle: x.to_string() })
    }

    pub fn eval_unchecked(&self, x: &IntVector) -> &Rat {
        &self.values[x]
    }

    /// Lifted point set (bundle, value) for the polyhedral kernel.
    pub fn lifted_points(&self) -> Vec<(IntVector, Rat)> {
        self.domain
            .iter()
            .map(|x| (x.clone(), self.values[x].clone()))
            .collect()
    }
}

/// V'(x) = V(x) + p.x for nonnegative p; demand at q under the result equals
/// demand at q - p under the input.
pub fn linear_shift(v: &Valuation, prices: &[Rat]) -> Result<Valuation, ValuationError> {
    if let Some(index) = prices.iter().position(|p| p.is_negative()) {
        return Err(ValuationError::NegativeShift { index });
    }
    if prices.len() != v.space().len() {
        return Err(ValuationError::BadSpec(format!(
            "expected {} shift components, got {}",
            v.space().len(),
            prices.len()
        )));
    }
    let spec = ValuationSpec::Shift {
        child: Box::new(v.spec().clone()),
        prices: prices.to_vec(),
    };
    Valuation::new(v.space().clone(), spec)
}

/// Strictly increasing piecewise-linear money-utility curve, given by
/// breakpoints (money, utility) with both coordinates strictly increasing.
#[derive(Clone, PartialEq, Debug)]
pub struct PiecewiseLinearCurve {
    pub breakpoints: Vec<(Rat, Rat)>,
}

impl PiecewiseLinearCurve {
    pub fn new(breakpoints: Vec<(Rat, Rat)>) -> Result<Self, ValuationError> {
        if breakpoints.len() < 2 {
            return Err(ValuationError::BadSpec(
                "a curve needs at least two breakpoints".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(ValuationError::BadSpec(
                    "curve breakpoints must be strictly increasing".into(),
                ));
            }
        }
        Ok(PiecewiseLinearCurve { breakpoints })
    }

    /// Exact inverse: the money level at which the curve reaches `u`.
    pub fn invert(&self, u: &Rat) -> Option<Rat> {
        let lo = &self.breakpoints.first().unwrap().1;
        let hi = &self.breakpoints.last().unwrap().1;
        if u < lo || u > hi {
            return None;
        }
        for w in self.breakpoints.windows(2) {
            let (x0, y0) = &w[0];
            let (x1, y1) = &w[1];
            if u >= y0 && u <= y1 {
                let slope = (y1 - y0) / (x1 - x0);
                return Some(x0 + (u - y0) / slope);
            }
        }
        unreachable!("utility level inside the covered range")
    }
}

/// Money utility per bundle: quasilinear, or tabulated monotone curves.
#[derive(Clone, PartialEq, Debug)]
pub enum UtilitySpec {
    Quasilinear(Valuation),
    Tabulated {
        space: GoodSpace,
        curves: BTreeMap<IntVector, PiecewiseLinearCurve>,
    },
}

/// Fixed-utility-level valuation: entry -f_x^{-1}(u) per bundle. Demand for
/// the result at any price coincides with Hicksian demand at utility `u`.
pub fn hicksian_valuation(u: &UtilitySpec, target: &Rat) -> Result<Valuation, ValuationError> {
    match u {
        UtilitySpec::Quasilinear(v) => {
            let entries: BTreeMap<IntVector, Rat> = v
                .domain()
                .iter()
                .map(|x| (x.clone(), v.eval_unchecked(x) - target))
                .collect();
            Valuation::new(v.space().clone(), ValuationSpec::Table { entries })
        }
        UtilitySpec::Tabulated { space, curves } => {
            let mut entries = BTreeMap::new();
            for (x, curve) in curves {
                let money = curve.invert(target).ok_or_else(|| {
                    ValuationError::UtilityOutOfRange {
                        target: crate::num::rat_to_string(target),
                        bundle: x.to_string(),
                    }
                })?;
                entries.insert(x.clone(), -money);
            }
            Valuation::new(space.clone(), ValuationSpec::Table { entries })
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_int};

    pub(crate) fn space3() -> GoodSpace {
        GoodSpace::new(vec!["apple".into(), "banana".into(), "coconut".into()], 1).unwrap()
    }

    #[test]
    fn min_pair_valuation_values() {
        let v = Valuation::new(space3(), ValuationSpec::scaled_min(rat_int(3), &["apple", "banana"]))
            .unwrap();
        assert_eq!(v.eval(&IntVector::from_i64s(&[1, 1, 0])).unwrap(), rat_int(3));
        assert_eq!(v.eval(&IntVector::from_i64s(&[1, 0, 1])).unwrap(), rat_int(0));
        assert_eq!(v.domain().len(), 8);
    }

    #[test]
    fn zero_valuation_is_zero_everywhere() {
        let v = Valuation::zero(space3());
        for x in v.domain() {
            assert_eq!(v.eval_unchecked(x), &Rat::zero());
        }
    }

    #[test]
    fn out_of_domain_is_reported() {
        let v = Valuation::zero(space3());
        let err = v.eval(&IntVector::from_i64s(&[2, 0, 0])).unwrap_err();
        assert!(matches!(err, ValuationError::OutOfDomain { .. }));
    }

    #[test]
    fn table_restricts_domain() {
        let mut entries = BTreeMap::new();
        entries.insert(IntVector::from_i64s(&[0, 0, 0]), rat_int(0));
        entries.insert(IntVector::from_i64s(&[1, 1, 0]), rat_int(5));
        let v = Valuation::new(space3(), ValuationSpec::Table { entries }).unwrap();
        assert_eq!(v.domain().len(), 2);
    }

    #[test]
    fn shift_adds_linear_part() {
        let space = space3();
        let v0 = Valuation::zero(space.clone());
        let p = vec![rat_int(1), rat_int(2), rat_int(0)];
        let shifted = linear_shift(&v0, &p).unwrap();
        assert_eq!(
            shifted.eval(&IntVector::from_i64s(&[1, 1, 1])).unwrap(),
            rat_int(3)
        );
        // Shift by zero leaves values unchanged.
        let zero_shift = linear_shift(&v0, &[rat_int(0), rat_int(0), rat_int(0)]).unwrap();
        for x in v0.domain() {
            assert_eq!(zero_shift.eval_unchecked(x), v0.eval_unchecked(x));
        }
    }

    #[test]
    fn negative_shift_is_rejected() {
        let v0 = Valuation::zero(space3());
        let err = linear_shift(&v0, &[rat_int(0), rat_int(-1), rat_int(0)]).unwrap_err();
        assert_eq!(err, ValuationError::NegativeShift { index: 1 });
    }

    #[test]
    fn hicksian_of_quasilinear_subtracts_target() {
        let v = Valuation::new(space3(), ValuationSpec::scaled_min(rat_int(3), &["apple", "banana"]))
            .unwrap();
        let h = hicksian_valuation(&UtilitySpec::Quasilinear(v.clone()), &rat_int(2)).unwrap();
        for x in v.domain() {
            assert_eq!(h.eval_unchecked(x), &(v.eval_unchecked(x) - rat_int(2)));
        }
    }

    #[test]
    fn hicksian_linear_curves() {
        // f_x(m) = 2m + V(x) with V = 0: inverse is (u - 0) / 2.
        let space = GoodSpace::new(vec!["g".into()], 1).unwrap();
        let mut curves = BTreeMap::new();
        for x in space.full_box() {
            curves.insert(
                x,
                PiecewiseLinearCurve::new(vec![
                    (rat_int(-100), rat_int(-200)),
                    (rat_int(100), rat_int(200)),
                ])
                .unwrap(),
            );
        }
        let h = hicksian_valuation(&UtilitySpec::Tabulated { space, curves }, &rat_int(6)).unwrap();
        for x in h.domain() {
            assert_eq!(h.eval_unchecked(x), &rat_int(-3));
        }
    }

    #[test]
    fn hicksian_piecewise_inverse() {
        // Breakpoints (0,0), (2,1), (4,4); at u = 2 the middle segment gives 8/3.
        let space = GoodSpace::new(vec!["g".into()], 1).unwrap();
        let curve = PiecewiseLinearCurve::new(vec![
            (rat_int(0), rat_int(0)),
            (rat_int(2), rat_int(1)),
            (rat_int(4), rat_int(4)),
        ])
        .unwrap();
        assert_eq!(curve.invert(&rat_int(2)).unwrap(), rat(8, 3));
        let mut curves = BTreeMap::new();
        for x in space.full_box() {
            curves.insert(x, curve.clone());
        }
        let h = hicksian_valuation(
            &UtilitySpec::Tabulated { space, curves },
            &rat_int(2),
        )
        .unwrap();
        assert_eq!(h.eval(&IntVector::from_i64s(&[0])).unwrap(), rat(-8, 3));
    }

    #[test]
    fn utility_out_of_range_names_bundle() {
        let space = GoodSpace::new(vec!["g".into()], 1).unwrap();
        let curve =
            PiecewiseLinearCurve::new(vec![(rat_int(0), rat_int(0)), (rat_int(1), rat_int(1))])
                .unwrap();
        let mut curves = BTreeMap::new();
        for x in space.full_box() {
            curves.insert(x, curve.clone());
        }
        let err = hicksian_valuation(&UtilitySpec::Tabulated { space, curves }, &rat_int(5))
            .unwrap_err();
        assert!(matches!(err, ValuationError::UtilityOutOfRange { .. }));
    }
}
