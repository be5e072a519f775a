//! Market state (impacted price, remaining inventory) and the region
//! decomposition of the state space.

use serde::{Deserialize, Serialize};

use crate::constants::DerivedConstants;

/// Instantaneous state seen by the seller: the current (impact-adjusted)
/// price and the inventory still held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    /// Impacted price `x > 0`.
    pub price: f64,
    /// Remaining inventory `y ≥ 0` in shares.
    pub inventory: f64,
}

impl MarketState {
    /// Bundles a price/inventory pair.
    #[inline]
    pub fn new(price: f64, inventory: f64) -> Self {
        Self { price, inventory }
    }

    /// True once the position is fully unwound.
    #[inline]
    pub fn is_exhausted(&self) -> bool {
        self.inventory <= 0.0
    }
}

/// The four regions of the `(x, y)` state space, distinguished by the form
/// the value function and the optimal sale take there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `y = 0`: nothing left to sell, value is identically zero.
    Exhausted,
    /// `x < F`: below the barrier; the optimal sale at an arrival is zero.
    Waiting,
    /// `F ≤ x < F·e^{λy}`: sell exactly enough to knock the price back down
    /// to the barrier, keeping some inventory.
    Intermediate,
    /// `x ≥ F·e^{λy}`: the price is so high that even dumping everything
    /// leaves it at or above the barrier; sell the whole inventory.
    FullLiquidation,
}

/// Classifies a state against the barrier geometry.
///
/// Boundary conventions: `y ≤ 0` is [`Region::Exhausted`]; `x = F` belongs
/// to [`Region::Intermediate`] (the waiting region is the open set `x < F`);
/// `x = F·e^{λy}` belongs to [`Region::FullLiquidation`].  The value
/// function is continuous across all three interfaces, so the choice only
/// fixes which closed-form branch evaluates a boundary point.
pub fn classify_region(state: &MarketState, constants: &DerivedConstants) -> Region {
    if state.inventory <= 0.0 {
        return Region::Exhausted;
    }
    if state.price < constants.barrier {
        return Region::Waiting;
    }
    if state.price < constants.full_liquidation_boundary(state.inventory) {
        Region::Intermediate
    } else {
        Region::FullLiquidation
    }
}
