use serde::{Deserialize, Serialize};

/// Outcome of a horizon-bounded quantifier check.
///
/// Finite evidence cannot prove a statement about infinitely many indices,
/// points, or scales; every check therefore reports one of three outcomes.
/// `Holds` and `Fails` always come with the concrete evidence (witness data)
/// recorded in the surrounding report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }

    /// CLI exit-code contract: 0 holds, 1 fails, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Fails => write!(f, "fails"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}
