//! Demand oracles: quasilinear demand by exhaustive scan, bundled demand via
//! the change-of-basis identity, the item expansion for multiunit analysis,
//! and the consecutive-quantities diagnostic.

use crate::num::{
    rational_inverse, Int, IntMatrix, IntVector, MatrixError, Rat, RationalMatrix,
};
use crate::valuation::{GoodSpace, Valuation, ValuationSpec};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// One exact rational per index (good, item, or bundle). Components may be
/// negative.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct PriceVector(pub Vec<Rat>);

impl PriceVector {
    pub fn zeros(n: usize) -> Self {
        PriceVector(vec![Rat::zero(); n])
    }

    pub fn from_i64s(vals: &[i64]) -> Self {
        PriceVector(vals.iter().map(|&v| Rat::from_integer(Int::from(v))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, x: &IntVector) -> Rat {
        assert_eq!(self.len(), x.len());
        self.0
            .iter()
            .zip(&x.0)
            .map(|(p, c)| p * Rat::from_integer(c.clone()))
            .sum()
    }

    pub fn with_component(&self, i: usize, value: Rat) -> PriceVector {
        let mut p = self.clone();
        p.0[i] = value;
        p
    }

    pub fn to_string_csv(&self) -> String {
        self.0
            .iter()
            .map(crate::num::rat_to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Quasilinear payoff of a bundle at given prices.
pub fn payoff(v: &Valuation, p: &PriceVector, x: &IntVector) -> Rat {
    v.eval_unchecked(x) - p.dot(x)
}

/// The exact argmax of V(x) - p.x over the finite domain. Never empty.
pub fn demand_set(v: &Valuation, p: &PriceVector) -> BTreeSet<IntVector> {
    assert_eq!(p.len(), v.space().len(), "price dimension mismatch");
    let mut best: Option<Rat> = None;
    let mut arg = BTreeSet::new();
    for x in v.domain() {
        let val = payoff(v, p, x);
        match &best {
            Some(b) if val < *b => {}
            Some(b) if val == *b => {
                arg.insert(x.clone());
            }
            _ => {
                best = Some(val);
                arg = BTreeSet::from([x.clone()]);
            }
        }
    }
    arg
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundlingError {
    #[error("bundling is singular: the bundles do not form a basis")]
    Singular,
    #[error("bundle component outside -1/0/1 at position {0}")]
    NotUnitBox(usize),
    #[error("expected {expected} bundles of dimension {expected}, got {got}")]
    WrongCount { expected: usize, got: usize },
}

/// An ordered basis of {-1,0,1} bundle vectors with its change-of-basis
/// matrix G (bundles as columns).
#[derive(Clone, Debug)]
pub struct Bundling {
    pub bundles: Vec<IntVector>,
    pub matrix: IntMatrix,
    pub determinant: Int,
    inverse: RationalMatrix,
}

impl Bundling {
    pub fn new(bundles: Vec<IntVector>) -> Result<Self, BundlingError> {
        let n = bundles.first().map(|b| b.len()).unwrap_or(0);
        if bundles.len() != n || n == 0 {
            return Err(BundlingError::WrongCount { expected: n, got: bundles.len() });
        }
        for (i, b) in bundles.iter().enumerate() {
            if b.len() != n {
                return Err(BundlingError::WrongCount { expected: n, got: b.len() });
            }
            if !b.in_unit_box() {
                return Err(BundlingError::NotUnitBox(i));
            }
        }
        let matrix = IntMatrix::from_columns(&bundles);
        let determinant =
            crate::num::bareiss_determinant(&matrix).expect("square by construction");
        if determinant.is_zero() {
            return Err(BundlingError::Singular);
        }
        let inverse = rational_inverse(&matrix.to_rational())
            .map_err(|e| match e {
                MatrixError::Singular => BundlingError::Singular,
                MatrixError::NotSquare { .. } => unreachable!("square by construction"),
            })?;
        Ok(Bundling { bundles, matrix, determinant, inverse })
    }

    pub fn from_i64s(bundles: &[&[i64]]) -> Result<Self, BundlingError> {
        Bundling::new(bundles.iter().map(|b| IntVector::from_i64s(b)).collect())
    }

    pub fn dimension(&self) -> usize {
        self.bundles.len()
    }

    /// Coordinates of a goods bundle in this basis: q = G^-1 x. Rational when
    /// |det G| > 1.
    pub fn coordinates(&self, x: &IntVector) -> Vec<Rat> {
        let xr: Vec<Rat> = x.0.iter().map(|c| Rat::from_integer(c.clone())).collect();
        self.inverse.mul_vec(&xr)
    }

    /// The goods price vector inducing the given bundle prices: p = G^-T p~,
    /// so that p.x = p~.q whenever x = Gq.
    pub fn goods_prices(&self, bundle_prices: &PriceVector) -> PriceVector {
        assert_eq!(bundle_prices.len(), self.dimension());
        PriceVector(self.inverse.transpose().mul_vec(&bundle_prices.0))
    }

    /// The goods bundle x = Gq for integer q.
    pub fn compose(&self, quantities: &IntVector) -> IntVector {
        assert_eq!(quantities.len(), self.dimension());
        let mut acc = IntVector::zeros(self.bundles[0].len());
        for (b, q) in self.bundles.iter().zip(&quantities.0) {
            let scaled = IntVector(b.0.iter().map(|c| c * q).collect());
            acc = acc.add(&scaled);
        }
        acc
    }
}

/// Demand expressed in bundle coordinates: the unique q = G^-1 x for each
/// demanded goods bundle x at goods prices G^-T p~.
pub fn bundled_demand(
    v: &Valuation,
    bundling: &Bundling,
    bundle_prices: &PriceVector,
) -> BTreeSet<Vec<Rat>> {
    let goods_prices = bundling.goods_prices(bundle_prices);
    demand_set(v, &goods_prices)
        .iter()
        .map(|x| bundling.coordinates(x))
        .collect()
}

/// Item expansion of a multiunit valuation: each unit of each good becomes a
/// separate item named `good#serial`, and the item valuation is the goods
/// valuation of the per-good unit counts.
pub struct ItemExpansion {
    pub valuation: Valuation,
    goods: usize,
    max_units: u32,
}

impl ItemExpansion {
    /// pi: item bundle to goods bundle (sums serials of each good).
    pub fn project(&self, item_bundle: &IntVector) -> IntVector {
        let m = self.max_units as usize;
        IntVector(
            (0..self.goods)
                .map(|g| {
                    (0..m).fold(Int::zero(), |acc, s| acc + &item_bundle.0[g * m + s])
                })
                .collect(),
        )
    }

    /// tau: goods bundle to the item bundle using the lowest serial numbers;
    /// a right inverse of pi.
    pub fn embed(&self, goods_bundle: &IntVector) -> IntVector {
        let m = self.max_units as usize;
        let mut out = Vec::with_capacity(self.goods * m);
        for g in 0..self.goods {
            let count = &goods_bundle.0[g];
            for s in 0..m {
                out.push(if Int::from(s) < *count { Int::one() } else { Int::zero() });
            }
        }
        IntVector(out)
    }

    /// The (good, serial) pair behind an item index.
    pub fn item_label(&self, item: usize) -> (usize, u32) {
        let m = self.max_units as usize;
        (item / m, (item % m) as u32 + 1)
    }

    pub fn items_per_good(&self) -> u32 {
        self.max_units
    }
}

/// Builds the item-space valuation V(pi(.)) over {0,1}^(goods x serials),
/// restricted to item bundles whose projection lies in the goods domain.
pub fn expand_to_items(v: &Valuation) -> ItemExpansion {
    let space = v.space();
    let m = space.max_units;
    let item_names: Vec<String> = space
        .goods
        .iter()
        .flat_map(|g| (1..=m).map(move |s| format!("{g}#{s}")))
        .collect();
    let item_space = GoodSpace::new(item_names, 1).expect("item space is valid");
    let goods = space.len();
    let expansion_shape = ItemExpansion {
        valuation: Valuation::zero(item_space.clone()),
        goods,
        max_units: m,
    };
    let mut entries = BTreeMap::new();
    for item_bundle in item_space.full_box() {
        let projected = expansion_shape.project(&item_bundle);
        if let Ok(value) = v.eval(&projected) {
            entries.insert(item_bundle, value);
        }
    }
    let valuation = Valuation::new(item_space, ValuationSpec::Table { entries })
        .expect("projected domain is nonempty");
    ItemExpansion { valuation, goods, max_units: m }
}

/// Demanded quantities of one good across the demand set, with a flag for
/// whether they form a consecutive run of integers.
pub fn demanded_quantities(
    v: &Valuation,
    p: &PriceVector,
    good: usize,
) -> (BTreeSet<Int>, bool) {
    let quantities: BTreeSet<Int> = demand_set(v, p)
        .iter()
        .map(|x| x.0[good].clone())
        .collect();
    let consecutive = quantities
        .iter()
        .zip(quantities.iter().skip(1))
        .all(|(a, b)| b - a == Int::one());
    (quantities, consecutive)
}
