use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value {value} for `{name}`: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("window too small: expected node count {expected_nodes:.3} is below {minimum}")]
    WindowTooSmall { expected_nodes: f64, minimum: f64 },

    #[error("scheme NC requires diversity order 1, got {0}")]
    NcDiversity(usize),

    #[error("{count} block contributions exceed diversity order {diversity}")]
    TooManyContributions { count: usize, diversity: usize },

    #[error("progress {0} is not positive; only positive-progress relays contend")]
    NonPositiveProgress(f64),

    #[error("need at least {minimum} trials, got {trials}")]
    TooFewTrials { trials: usize, minimum: usize },

    #[error("expected {expected} progress estimates, got {got}")]
    HopCount { expected: usize, got: usize },

    #[error(
        "cell-area integration did not converge: tail holds {tail_fraction:.3e} of the mass \
         at radius {radius:.3} (limit {limit:.3})"
    )]
    Integration {
        radius: f64,
        limit: f64,
        tail_fraction: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check(ok: bool, name: &'static str, value: f64, expected: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, expected })
    }
}
