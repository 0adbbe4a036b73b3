//! Built-in experiment suites reproducing the reference figure setups.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// PRD against `p` at `R = 3`, `α = 3`, `M = 2` for every scheme.
    Fig2,
    /// Optimal `R` against `M` for IRC at `α ∈ {3, 4}`.
    Fig3,
    /// Maximal PRD against `α ∈ [2.5, 4]` at `M = 2` for every scheme.
    Fig4,
    /// Maximal IRC PRD against `M` at `α ∈ {3, 4}`.
    Fig5,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Fig2, Suite::Fig3, Suite::Fig4, Suite::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fig2 => "fig2",
            Suite::Fig3 => "fig3",
            Suite::Fig4 => "fig4",
            Suite::Fig5 => "fig5",
        }
    }

    /// The suite's experiment file.
    pub fn source(self) -> &'static str {
        match self {
            Suite::Fig2 => include_str!("../suites/fig2.toml"),
            Suite::Fig3 => include_str!("../suites/fig3.toml"),
            Suite::Fig4 => include_str!("../suites/fig4.toml"),
            Suite::Fig5 => include_str!("../suites/fig5.toml"),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`: expected fig2, fig3, fig4 or fig5"))
    }
}
