//! Scenario descriptors for the supported star networks: settings counts,
//! term counts, root exponents, qubit layout and matrix-level capacity policy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{LayoutBlock, QubitLayout, MAX_DIM};

/// Parties in a star network. Bob is the central party; the rest are edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
    Diana,
}

impl Party {
    pub fn label(self) -> &'static str {
        match self {
            Party::Alice => "A",
            Party::Bob => "B",
            Party::Charlie => "C",
            Party::Diana => "D",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "standard-bilocal")]
    StandardBilocal,
    #[serde(rename = "bilocal-I")]
    BilocalI,
    #[serde(rename = "bilocal-II")]
    BilocalII,
    #[serde(rename = "trilocal-I")]
    TrilocalI,
    #[serde(rename = "trilocal-II")]
    TrilocalII,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::StandardBilocal => "standard-bilocal",
            ScenarioKind::BilocalI => "bilocal-I",
            ScenarioKind::BilocalII => "bilocal-II",
            ScenarioKind::TrilocalI => "trilocal-I",
            ScenarioKind::TrilocalII => "trilocal-II",
        }
    }

    pub fn all() -> [ScenarioKind; 5] {
        [
            ScenarioKind::StandardBilocal,
            ScenarioKind::BilocalI,
            ScenarioKind::BilocalII,
            ScenarioKind::TrilocalI,
            ScenarioKind::TrilocalII,
        ]
    }

    pub fn is_trilocal(self) -> bool {
        matches!(self, ScenarioKind::TrilocalI | ScenarioKind::TrilocalII)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard-bilocal" | "standard" => Ok(ScenarioKind::StandardBilocal),
            "bilocal-i" | "bilocal-1" => Ok(ScenarioKind::BilocalI),
            "bilocal-ii" | "bilocal-2" => Ok(ScenarioKind::BilocalII),
            "trilocal-i" | "trilocal-1" => Ok(ScenarioKind::TrilocalI),
            "trilocal-ii" | "trilocal-2" => Ok(ScenarioKind::TrilocalII),
            other => Err(Error::Domain(format!("unknown scenario kind `{other}`"))),
        }
    }
}

/// One edge of the star: the edge party and how many entangled pairs it
/// shares with the central party.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub party: Party,
    pub pairs: usize,
}

/// A scenario instance: network kind at a given `n`, with all derived counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioSpec {
    kind: ScenarioKind,
    n: usize,
}

/// Bilocal matrix evaluation is capped at this many settings for the
/// 2^(n−1)-input party; beyond it only the closed-form bound/optimum
/// families remain available.
pub const MAX_MATRIX_SETTINGS: usize = 128;

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n: usize) -> Result<Self> {
        match kind {
            ScenarioKind::StandardBilocal => {
                if n != 2 {
                    return Err(Error::Domain(format!(
                        "standard-bilocal is the n=2 scenario, got n={n}"
                    )));
                }
            }
            _ => {
                if n < 2 {
                    return Err(Error::Domain(format!("n must be at least 2, got {n}")));
                }
            }
        }
        Ok(ScenarioSpec { kind, n })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// N = ⌊n/2⌋, the number of pairs on the anticommuting party's edge.
    pub fn half_n(&self) -> usize {
        self.n / 2
    }

    /// Number of terms J in the nonlinear functional.
    pub fn terms(&self) -> usize {
        match self.kind {
            ScenarioKind::StandardBilocal => 2,
            ScenarioKind::BilocalI | ScenarioKind::TrilocalII => self.n,
            ScenarioKind::BilocalII | ScenarioKind::TrilocalI => 1 << (self.n - 1),
        }
    }

    /// Root exponent r: the number of independent sources.
    pub fn root(&self) -> u32 {
        if self.kind.is_trilocal() {
            3
        } else {
            2
        }
    }

    /// Settings count for a party.
    pub fn settings(&self, party: Party) -> usize {
        let pow = 1usize << (self.n - 1);
        match (self.kind, party) {
            (ScenarioKind::StandardBilocal, _) => 2,
            (ScenarioKind::BilocalI, Party::Alice) => pow,
            (ScenarioKind::BilocalI, _) => self.n,
            (ScenarioKind::BilocalII, Party::Charlie) => self.n,
            (ScenarioKind::BilocalII, _) => pow,
            (ScenarioKind::TrilocalI, Party::Charlie) => self.n,
            (ScenarioKind::TrilocalI, _) => pow,
            (ScenarioKind::TrilocalII, Party::Alice) => pow,
            (ScenarioKind::TrilocalII, _) => self.n,
        }
    }

    /// Edge parties in functional order, with pair counts toward Bob.
    pub fn edges(&self) -> Vec<EdgeSpec> {
        let half = self.half_n().max(1);
        match self.kind {
            ScenarioKind::StandardBilocal => vec![
                EdgeSpec {
                    party: Party::Alice,
                    pairs: 1,
                },
                EdgeSpec {
                    party: Party::Charlie,
                    pairs: 1,
                },
            ],
            ScenarioKind::BilocalI => vec![
                EdgeSpec {
                    party: Party::Alice,
                    pairs: half,
                },
                EdgeSpec {
                    party: Party::Charlie,
                    pairs: 1,
                },
            ],
            ScenarioKind::BilocalII => vec![
                EdgeSpec {
                    party: Party::Alice,
                    pairs: 1,
                },
                EdgeSpec {
                    party: Party::Charlie,
                    pairs: half,
                },
            ],
            ScenarioKind::TrilocalI | ScenarioKind::TrilocalII => vec![
                EdgeSpec {
                    party: Party::Alice,
                    pairs: 1,
                },
                EdgeSpec {
                    party: Party::Charlie,
                    pairs: 1,
                },
                EdgeSpec {
                    party: Party::Diana,
                    pairs: 1,
                },
            ],
        }
    }

    pub fn edge_parties(&self) -> Vec<Party> {
        self.edges().iter().map(|e| e.party).collect()
    }

    /// All parties including Bob, in settings order (x, j, z[, w]).
    pub fn parties_in_setting_order(&self) -> Vec<Party> {
        if self.kind.is_trilocal() {
            vec![Party::Alice, Party::Bob, Party::Charlie, Party::Diana]
        } else {
            vec![Party::Alice, Party::Bob, Party::Charlie]
        }
    }

    /// Qubit layout: per edge, the edge-party block followed by Bob's block
    /// for that edge.
    pub fn layout(&self) -> Result<QubitLayout> {
        let mut blocks = Vec::new();
        for edge in self.edges() {
            blocks.push(LayoutBlock {
                party: edge.party.label().to_string(),
                role: "edge".to_string(),
                qubits: edge.pairs,
            });
            blocks.push(LayoutBlock {
                party: Party::Bob.label().to_string(),
                role: format!("with-{}", edge.party.label()),
                qubits: edge.pairs,
            });
        }
        QubitLayout::new(blocks)
    }

    pub fn total_dim(&self) -> usize {
        let qubits: usize = self.edges().iter().map(|e| 2 * e.pairs).sum();
        1 << qubits
    }

    /// Whether matrix-level evaluation is supported: bilocal scenarios within
    /// the settings/dimension budget, trilocal scenarios at n = 3 only (their
    /// combination rows are defined only there).
    pub fn matrix_level(&self) -> Result<()> {
        if self.kind.is_trilocal() && self.n != 3 {
            return Err(Error::Capability(format!(
                "{} is evaluated at matrix level only for n=3; \
                 use the closed-form bound/optimum families for n={}",
                self.kind, self.n
            )));
        }
        let settings = self.settings(Party::Alice).max(self.settings(Party::Charlie));
        if settings > MAX_MATRIX_SETTINGS {
            return Err(Error::Capacity {
                context: "matrix-level evaluation (settings per party)",
                requested: settings as u128,
                limit: MAX_MATRIX_SETTINGS as u128,
            });
        }
        if self.total_dim() > MAX_DIM {
            return Err(Error::Capacity {
                context: "matrix-level evaluation (Hilbert dimension)",
                requested: self.total_dim() as u128,
                limit: MAX_DIM as u128,
            });
        }
        Ok(())
    }

    /// Uniform-noise exponent: total number of entangled pairs.
    pub fn total_pairs(&self) -> usize {
        self.edges().iter().map(|e| e.pairs).sum()
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={})", self.kind, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_and_terms_per_kind() {
        let s = ScenarioSpec::new(ScenarioKind::StandardBilocal, 2).unwrap();
        assert_eq!(
            (
                s.settings(Party::Alice),
                s.settings(Party::Bob),
                s.settings(Party::Charlie)
            ),
            (2, 2, 2)
        );
        assert_eq!((s.terms(), s.root()), (2, 2));

        let b1 = ScenarioSpec::new(ScenarioKind::BilocalI, 3).unwrap();
        assert_eq!(
            (
                b1.settings(Party::Alice),
                b1.settings(Party::Bob),
                b1.settings(Party::Charlie)
            ),
            (4, 3, 3)
        );
        assert_eq!((b1.terms(), b1.root()), (3, 2));

        let b2 = ScenarioSpec::new(ScenarioKind::BilocalII, 3).unwrap();
        assert_eq!(
            (
                b2.settings(Party::Alice),
                b2.settings(Party::Bob),
                b2.settings(Party::Charlie)
            ),
            (4, 4, 3)
        );
        assert_eq!(b2.terms(), 4);

        let t1 = ScenarioSpec::new(ScenarioKind::TrilocalI, 3).unwrap();
        assert_eq!(
            (
                t1.settings(Party::Alice),
                t1.settings(Party::Bob),
                t1.settings(Party::Charlie),
                t1.settings(Party::Diana)
            ),
            (4, 4, 3, 4)
        );
        assert_eq!((t1.terms(), t1.root()), (4, 3));

        let t2 = ScenarioSpec::new(ScenarioKind::TrilocalII, 3).unwrap();
        assert_eq!(
            (
                t2.settings(Party::Alice),
                t2.settings(Party::Bob),
                t2.settings(Party::Charlie),
                t2.settings(Party::Diana)
            ),
            (4, 3, 3, 3)
        );
        assert_eq!((t2.terms(), t2.root()), (3, 3));
    }

    #[test]
    fn layout_dimensions() {
        let b1 = ScenarioSpec::new(ScenarioKind::BilocalI, 3).unwrap();
        assert_eq!(b1.total_dim(), 16);
        assert_eq!(b1.layout().unwrap().dim(), 16);

        let b1n6 = ScenarioSpec::new(ScenarioKind::BilocalI, 6).unwrap();
        assert_eq!(b1n6.total_dim(), 256);

        let t2 = ScenarioSpec::new(ScenarioKind::TrilocalII, 3).unwrap();
        assert_eq!(t2.total_dim(), 64);
        assert_eq!(t2.layout().unwrap().blocks().len(), 6);
    }

    #[test]
    fn matrix_level_policy() {
        assert!(ScenarioSpec::new(ScenarioKind::BilocalI, 6)
            .unwrap()
            .matrix_level()
            .is_ok());
        assert!(ScenarioSpec::new(ScenarioKind::BilocalI, 8)
            .unwrap()
            .matrix_level()
            .is_ok());
        // 2^(9−1) = 256 settings exceeds the evaluation budget
        assert!(matches!(
            ScenarioSpec::new(ScenarioKind::BilocalI, 9)
                .unwrap()
                .matrix_level(),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            ScenarioSpec::new(ScenarioKind::TrilocalI, 4)
                .unwrap()
                .matrix_level(),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "bilocal-I".parse::<ScenarioKind>().unwrap(),
            ScenarioKind::BilocalI
        );
        assert_eq!(
            "TRILOCAL-II".parse::<ScenarioKind>().unwrap(),
            ScenarioKind::TrilocalII
        );
        assert!("pentalocal".parse::<ScenarioKind>().is_err());
    }
}
