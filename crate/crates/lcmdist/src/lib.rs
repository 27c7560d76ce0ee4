//! Distribution of the least common multiple of random integer k-tuples.
//!
//! Everything revolves around the ratio `lcm(n_1,...,n_k) / (n_1 ... n_k) = 1/n`
//! for uniform tuples in `[1,x]^k`, its limit law `p_k(n)` as `x` grows, and the
//! scaled statistic `lcm / x^k`. The crate computes the same quantities three
//! independent ways and cross-validates them:
//!
//! * exactly, from Euler products over tagged prime-power divisibility
//!   conditions ([`plocal`], [`exactdist`], [`series`], [`limitdist`]);
//! * empirically, by exhaustive enumeration of `[1,x]^k` in exact rational
//!   arithmetic ([`empirical`]);
//! * stochastically, by sampling the limit random variable built from
//!   independent geometric variables ([`montecarlo`]).
//!
//! Every truncated infinite product or series is returned as a rigorous
//! enclosure ([`series::Bracket`]); exact quantities are arbitrary-precision
//! rationals. Floating point only enters where a transcendental limit does.

pub mod empirical;
pub mod exactdist;
pub mod limitdist;
pub mod montecarlo;
pub mod ntcore;
pub mod plocal;
pub mod report;
pub mod series;

pub use ntcore::Rational;
pub use series::{Bracket, TruncationPolicy};

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),
    /// An enumeration would exceed the caller-supplied tuple budget.
    /// The engine refuses up front; it never truncates silently.
    #[error("budget exceeded: {required} tuple classes needed, budget is {budget}")]
    Budget { required: u128, budget: u128 },
    /// Metadata of two reports being compared does not match.
    #[error("metadata mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
