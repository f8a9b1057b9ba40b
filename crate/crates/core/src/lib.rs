//! Exact-arithmetic analysis of exchange economies with indivisible goods.
//!
//! The crate computes quasilinear and bundled demand, extracts compensated
//! price effects from the regular subdivision a valuation induces, certifies
//! unit and bundle consistency (directly over bundlings and via the total
//! unimodularity shortcut), decides competitive-equilibrium existence through
//! exact welfare/Lyapunov duality, and synthesizes no-equilibrium economies
//! from inconsistent preference pairs. All arithmetic is exact rational.

pub mod num;
pub mod lp;
pub mod valuation;
pub mod demand;
pub mod hull;

pub use demand::{bundled_demand, demand_set, demanded_quantities, expand_to_items, Bundling, PriceVector};
pub use num::{Int, IntVector, Rat};
pub use valuation::{GoodSpace, Valuation, ValuationSpec};

pub mod cli;
pub mod geometry;
pub mod economy;
pub mod consistency;
pub mod equilibrium;
pub mod format;
