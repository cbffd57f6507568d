use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hermitian excitation generator `T = i(E − E†)`.
///
/// `OneBody { r, s }` has `E = a†_r a_s`; `TwoBody { p, q, r, s }` has
/// `E = a†_p a†_q a_r a_s`; the two pairs may share one mode, which makes
/// `E` a density-conditioned hop. The derived ordering (one-body first, then
/// lexicographic indices) is the canonical pool order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExcitationGenerator {
    OneBody { r: usize, s: usize },
    TwoBody { p: usize, q: usize, r: usize, s: usize },
}

impl ExcitationGenerator {
    pub fn one_body(r: usize, s: usize) -> Result<Self> {
        let g = Self::OneBody { r, s };
        g.validate()?;
        Ok(g)
    }

    pub fn two_body(p: usize, q: usize, r: usize, s: usize) -> Result<Self> {
        let g = Self::TwoBody { p, q, r, s };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::OneBody { r, s } => {
                if r == s {
                    return Err(Error::MalformedGenerator(format!(
                        "one-body generator on a single mode {r}"
                    )));
                }
            }
            Self::TwoBody { p, q, r, s } => {
                if p == q {
                    return Err(Error::MalformedGenerator(format!("creation index {p} repeated")));
                }
                if r == s {
                    return Err(Error::MalformedGenerator(format!("annihilation index {r} repeated")));
                }
                if (p == r && q == s) || (p == s && q == r) {
                    return Err(Error::MalformedGenerator(
                        "creation and annihilation pairs coincide".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn is_one_body(&self) -> bool {
        matches!(self, Self::OneBody { .. })
    }

    /// Created modes followed by annihilated modes.
    pub fn modes(&self) -> Vec<usize> {
        match *self {
            Self::OneBody { r, s } => vec![r, s],
            Self::TwoBody { p, q, r, s } => vec![p, q, r, s],
        }
    }

    pub fn created(&self) -> Vec<usize> {
        match *self {
            Self::OneBody { r, .. } => vec![r],
            Self::TwoBody { p, q, .. } => vec![p, q],
        }
    }

    pub fn annihilated(&self) -> Vec<usize> {
        match *self {
            Self::OneBody { s, .. } => vec![s],
            Self::TwoBody { r, s, .. } => vec![r, s],
        }
    }

    /// Mode shared by the creation and annihilation pairs, if any.
    pub fn shared_mode(&self) -> Option<usize> {
        match *self {
            Self::OneBody { .. } => None,
            Self::TwoBody { p, q, r, s } => [p, q].into_iter().find(|&m| m == r || m == s),
        }
    }

    pub fn max_mode(&self) -> usize {
        self.modes().into_iter().max().unwrap_or(0)
    }

    /// `(annihilated mask, created mask)`
    pub(crate) fn masks(&self) -> (u64, u64) {
        let ann = self.annihilated().iter().fold(0u64, |m, &k| m | 1 << k);
        let cre = self.created().iter().fold(0u64, |m, &k| m | 1 << k);
        (ann, cre)
    }

    /// Operator application order: annihilators right to left, then creators
    /// right to left.
    pub(crate) fn action_order(&self) -> (Vec<usize>, Vec<usize>) {
        let mut ann = self.annihilated();
        let mut cre = self.created();
        ann.reverse();
        cre.reverse();
        (ann, cre)
    }

    /// Relabel modes through `map[local] = global`.
    pub fn map_modes(&self, map: &[usize]) -> Result<Self> {
        let get = |i: usize| {
            map.get(i).copied().ok_or(Error::ModeOutOfRange {
                index: i,
                n_modes: map.len(),
            })
        };
        let g = match *self {
            Self::OneBody { r, s } => Self::OneBody { r: get(r)?, s: get(s)? },
            Self::TwoBody { p, q, r, s } => Self::TwoBody {
                p: get(p)?,
                q: get(q)?,
                r: get(r)?,
                s: get(s)?,
            },
        };
        g.validate()?;
        Ok(g)
    }

    /// Canonical representative and the sign relating it to `self`
    /// (`self = sign * canonical` as generators).
    pub fn canonical(&self) -> (Self, f64) {
        match *self {
            Self::OneBody { r, s } => {
                if r < s {
                    (*self, 1.0)
                } else {
                    (Self::OneBody { r: s, s: r }, -1.0)
                }
            }
            Self::TwoBody { p, q, r, s } => {
                let mut sign = 1.0;
                let (p, q) = if p < q {
                    (p, q)
                } else {
                    sign = -sign;
                    (q, p)
                };
                let (r, s) = if r < s {
                    (r, s)
                } else {
                    sign = -sign;
                    (s, r)
                };
                if (p, q) <= (r, s) {
                    (Self::TwoBody { p, q, r, s }, sign)
                } else {
                    (Self::TwoBody { p: r, q: s, r: p, s: q }, -sign)
                }
            }
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical() == (*self, 1.0)
    }
}

impl std::fmt::Display for ExcitationGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::OneBody { r, s } => write!(f, "T({r};{s})"),
            Self::TwoBody { p, q, r, s } => write!(f, "T({p},{q};{r},{s})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_generators_rejected() {
        assert!(ExcitationGenerator::two_body(1, 1, 2, 3).is_err());
        assert!(ExcitationGenerator::two_body(0, 1, 2, 2).is_err());
        assert!(ExcitationGenerator::two_body(0, 1, 1, 0).is_err());
        assert!(ExcitationGenerator::two_body(0, 1, 1, 2).is_ok());
        assert!(ExcitationGenerator::one_body(3, 3).is_err());
    }

    #[test]
    fn ordering_puts_one_body_first() {
        let a = ExcitationGenerator::one_body(5, 6).unwrap();
        let b = ExcitationGenerator::two_body(0, 1, 2, 3).unwrap();
        assert!(a < b);
    }

    #[test]
    fn canonical_sign() {
        let g = ExcitationGenerator::TwoBody { p: 3, q: 2, r: 0, s: 1 };
        let (c, s) = g.canonical();
        assert_eq!(c, ExcitationGenerator::TwoBody { p: 0, q: 1, r: 2, s: 3 });
        assert_eq!(s, 1.0);
        let (c, s) = ExcitationGenerator::OneBody { r: 2, s: 1 }.canonical();
        assert_eq!(c, ExcitationGenerator::OneBody { r: 1, s: 2 });
        assert_eq!(s, -1.0);
    }
}
