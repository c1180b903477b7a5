use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The solver's control input for one simulator step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvironmentAction {
    /// Real-valued vector in scenario-defined units.
    Continuous(Vec<f64>),
    /// Token seeding the simulator's per-step random number generator.
    Seed(u64),
    /// Index into a finite action set.
    Discrete(usize),
}

/// Kind of actions a simulator accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSpace {
    Continuous { dim: usize },
    Seed,
    Discrete { count: usize },
}

impl ActionSpace {
    pub fn name(&self) -> &'static str {
        match self {
            ActionSpace::Continuous { .. } => "continuous",
            ActionSpace::Seed => "seed",
            ActionSpace::Discrete { .. } => "discrete",
        }
    }

    /// Checks that `action` belongs to this space.
    pub fn check(&self, action: &EnvironmentAction) -> Result<(), Error> {
        match (self, action) {
            (ActionSpace::Continuous { dim }, EnvironmentAction::Continuous(v)) => {
                if v.len() != *dim {
                    return Err(Error::InvalidAction(format!(
                        "expected {dim} components, got {}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("action"));
                }
                Ok(())
            }
            (ActionSpace::Seed, EnvironmentAction::Seed(_)) => Ok(()),
            (ActionSpace::Discrete { count }, EnvironmentAction::Discrete(i)) => {
                if i >= count {
                    Err(Error::InvalidAction(format!(
                        "discrete action {i} out of range 0..{count}"
                    )))
                } else {
                    Ok(())
                }
            }
            (space, action) => Err(Error::InvalidAction(format!(
                "{} action given to a {} simulator",
                action.kind(),
                space.name()
            ))),
        }
    }
}

impl EnvironmentAction {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvironmentAction::Continuous(_) => "continuous",
            EnvironmentAction::Seed(_) => "seed",
            EnvironmentAction::Discrete(_) => "discrete",
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            EnvironmentAction::Continuous(v) => Some(v),
            _ => None,
        }
    }
}

/// Text form used by the trajectory log: `c:<x1>,<x2>,...`, `s:<seed>`, `d:<index>`.
///
/// Reals are written with Rust's shortest round-trip formatting, so parsing
/// the text back yields bit-identical values.
impl fmt::Display for EnvironmentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvironmentAction::Continuous(v) => {
                f.write_str("c:")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            EnvironmentAction::Seed(s) => write!(f, "s:{s}"),
            EnvironmentAction::Discrete(i) => write!(f, "d:{i}"),
        }
    }
}

impl FromStr for EnvironmentAction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Log(format!("malformed action payload `{s}`"));
        let (tag, body) = s.split_once(':').ok_or_else(bad)?;
        match tag {
            "c" => {
                if body.is_empty() {
                    return Ok(EnvironmentAction::Continuous(Vec::new()));
                }
                body.split(',')
                    .map(|x| x.parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()
                    .map(EnvironmentAction::Continuous)
            }
            "s" => body.parse().map(EnvironmentAction::Seed).map_err(|_| bad()),
            "d" => body
                .parse()
                .map(EnvironmentAction::Discrete)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn continuous_dimension_is_enforced() {
        let space = ActionSpace::Continuous { dim: 2 };
        assert!(space
            .check(&EnvironmentAction::Continuous(vec![0.0, 1.0]))
            .is_ok());
        assert!(space
            .check(&EnvironmentAction::Continuous(vec![0.0]))
            .is_err());
        assert_eq!(
            space.check(&EnvironmentAction::Continuous(vec![0.0, f64::NAN])),
            Err(Error::NonFinite("action"))
        );
    }

    #[test]
    fn seeds_only_accepted_in_seed_mode() {
        let seed = EnvironmentAction::Seed(7);
        assert!(ActionSpace::Seed.check(&seed).is_ok());
        assert!(ActionSpace::Continuous { dim: 1 }.check(&seed).is_err());
        assert!(ActionSpace::Discrete { count: 3 }.check(&seed).is_err());
        assert!(ActionSpace::Discrete { count: 3 }
            .check(&EnvironmentAction::Discrete(3))
            .is_err());
    }

    proptest! {
        #[test]
        fn text_form_round_trips(v in prop::collection::vec(-1e12f64..1e12, 0..8), s in any::<u64>(), d in 0usize..1000) {
            for a in [EnvironmentAction::Continuous(v.clone()), EnvironmentAction::Seed(s), EnvironmentAction::Discrete(d)] {
                let back: EnvironmentAction = a.to_string().parse().unwrap();
                prop_assert_eq!(back, a);
            }
        }
    }
}
