//! Purification of mixed buy/sell strategies into sell-only strategies.
//!
//! Round-trip trades are pure waste here: the price impact of a buy undoes
//! the impact of earlier sales, but both legs pay proportional costs and
//! the buy pays the impact spread.  Any strategy that ever buys is
//! therefore (weakly) dominated by a sell-only strategy obtained by
//! netting buys against sales — which is why the selling problem can be
//! solved over sell-only strategies without loss.
//!
//! The netting rule: with `ν_i` the shares sold at the `i`-th opportunity
//! and `B_i` the shares bought in the interval since the previous one, the
//! purified sale is
//!
//! ```text
//! ν̄_i = (Σ_{ι=q..i} (ν_ι − B_ι))⁺
//! ```
//!
//! where `q − 1` is the last opportunity before `i` with a positive
//! purified sale (`q = 1` when there is none).  Buys are pushed forward and
//! absorbed against future sales; a net-negative stretch keeps absorbing
//! until the running sum turns positive again.
//!
//! The purified cumulative sales are sandwiched between the original net
//! and gross cumulative sales, prefix by prefix:
//!
//! ```text
//! Σ_{ι≤i} (ν_ι − B_ι)  ≤  Σ_{ι≤i} ν̄_ι  ≤  Σ_{ι≤i} ν_ι      for every i.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// What a strategy did at (and since the previous) trading opportunity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    /// Shares sold at this opportunity (`ν_i ≥ 0`).
    pub sell: f64,
    /// Shares bought since the previous opportunity (`B_i ≥ 0`).
    pub buy: f64,
}

impl Trade {
    /// A pure sale.
    pub fn sale(sell: f64) -> Self {
        Self { sell, buy: 0.0 }
    }
}

/// Nets buys against sales, producing the dominating sell-only quantities.
///
/// Runs in `O(K)`: a running net sum restarts after every positive
/// purified sale.  All arithmetic is exact when the inputs are exactly
/// representable (e.g. dyadic quantities), because only additions and
/// subtractions of inputs are performed.
///
/// Errors with [`ModelError::MalformedSequence`] on a negative or
/// non-finite quantity.
pub fn purify_strategy(trades: &[Trade]) -> Result<Vec<f64>> {
    for (index, t) in trades.iter().enumerate() {
        if !(t.sell >= 0.0 && t.sell.is_finite()) {
            return Err(ModelError::MalformedSequence {
                index,
                reason: format!("sell quantity {} is not a finite non-negative number", t.sell),
            });
        }
        if !(t.buy >= 0.0 && t.buy.is_finite()) {
            return Err(ModelError::MalformedSequence {
                index,
                reason: format!("buy quantity {} is not a finite non-negative number", t.buy),
            });
        }
    }

    let mut purified = Vec::with_capacity(trades.len());
    // Net position accumulated since the opportunity after the last
    // positive purified sale.
    let mut running = 0.0;
    for t in trades {
        running += t.sell - t.buy;
        if running > 0.0 {
            purified.push(running);
            running = 0.0;
        } else {
            purified.push(0.0);
        }
    }
    Ok(purified)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sell_only_sequences_pass_through_unchanged() {
        let trades: Vec<Trade> = [3.0, 0.0, 1.5, 7.25].iter().map(|&s| Trade::sale(s)).collect();
        let purified = purify_strategy(&trades).unwrap();
        assert_eq!(purified, vec![3.0, 0.0, 1.5, 7.25]);
    }

    #[test]
    fn buy_is_absorbed_by_later_sales() {
        let trades = vec![
            Trade { sell: 0.0, buy: 2.0 },
            Trade { sell: 1.0, buy: 0.0 },
            Trade { sell: 3.0, buy: 0.0 },
        ];
        // Net after two: −2 + 1 = −1 → still nothing; after three: +2.
        assert_eq!(purify_strategy(&trades).unwrap(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn interleaved_round_trips_net_out() {
        let trades = vec![
            Trade { sell: 5.0, buy: 0.0 },
            Trade { sell: 1.0, buy: 4.0 },
            Trade { sell: 2.0, buy: 0.5 },
        ];
        let purified = purify_strategy(&trades).unwrap();
        assert_eq!(purified[0], 5.0);
        assert_eq!(purified[1], 0.0); // 1 − 4 = −3 pending
        assert_eq!(purified[2], 0.0); // −3 + 1.5 = −1.5 still pending
    }

    #[test]
    fn prefix_sums_are_sandwiched() {
        let trades = vec![
            Trade { sell: 2.0, buy: 1.0 },
            Trade { sell: 0.0, buy: 3.0 },
            Trade { sell: 4.0, buy: 0.0 },
            Trade { sell: 1.0, buy: 2.0 },
            Trade { sell: 6.0, buy: 0.0 },
        ];
        let purified = purify_strategy(&trades).unwrap();
        let mut net = 0.0;
        let mut gross = 0.0;
        let mut pure = 0.0;
        for (t, p) in trades.iter().zip(&purified) {
            net += t.sell - t.buy;
            gross += t.sell;
            pure += p;
            assert!(net <= pure && pure <= gross, "prefix bounds broken");
        }
    }

    #[test]
    fn negative_quantity_is_malformed() {
        let trades = vec![Trade { sell: -1.0, buy: 0.0 }];
        assert!(matches!(
            purify_strategy(&trades),
            Err(ModelError::MalformedSequence { index: 0, .. })
        ));
    }
}
