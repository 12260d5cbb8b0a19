//! Super-hedging costs and strategies on finite discrete-time market trees,
//! without assuming no-arbitrage.
//!
//! The central computation is the concave envelope of a payoff relative to
//! the conditional support of next-period prices: its value at the current
//! price is the infimum super-hedging cost, finite exactly under the
//! absence of instantaneous profit (AIP) and minus infinity otherwise.
//! Backward induction of the one-step envelope prices claims over whole
//! trees; the [`diagnostics`] module decides AIP, classical no-arbitrage
//! and the weaker AWIP condition with machine-checkable certificates, and
//! [`oracle`] cross-validates everything by brute force.
//!
//! ```
//! use superhedge::{price_claim, MarketTree, PayoffSpec};
//!
//! let tree = MarketTree::one_step(vec![100.0], vec![(vec![80.0], 0.5), (vec![120.0], 0.5)])?;
//! let surface = price_claim(&tree, &PayoffSpec::parse("call:100")?)?;
//! let root = surface.get(tree.root());
//! assert!((root.value - 10.0).abs() < 1e-9);
//! assert!((root.hedge.as_ref().unwrap()[0] - 0.5).abs() < 1e-9);
//! # Ok::<(), superhedge::Error>(())
//! ```

pub mod corpus;
pub mod diagnostics;
pub mod envelope;
pub mod error;
pub mod market;
pub mod oracle;
pub mod payoff;
pub mod pricing;
pub mod simplex;

pub use error::{Error, Result};
pub use market::{
    calibrate_multipliers, conditional_esssup_of_function, conditional_support, essential_bounds,
    load_market, load_price_series, save_market, EssentialBounds, MarketTree, Node, NodeId,
    NodeSpec, SupportSet,
};
pub use payoff::PayoffSpec;
pub use pricing::{
    extend_market, price_binomial_scheme, price_call_1d, price_claim, price_convex_1d,
    price_one_step, BinomialLattice, BinomialScheme, PriceResult, ValueSurface,
};
