//! JSON descriptors for maps, branch systems, densities and catalog entries.
//!
//! Rationals are strings such as `"1/2"`; integers and decimals are accepted on input.

use serde::{Deserialize, Serialize};

use crate::branching::{BranchSystem, Branches, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::interval_dynamics::{piece, BranchRule, Interval, Moebius, PieceFamily, PiecewiseMap};
use crate::measure::Density;
use crate::scalar::{format_rational, parse_rational, Rational};

type Pair = [String; 2];
type Quad = [String; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceDescriptor {
    pub dom: Pair,
    pub moebius: Quad,
}

fn default_truncation() -> u64 {
    DEFAULT_TRUNCATION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleDescriptor {
    Harmonic {
        base: Quad,
        shift: String,
        #[serde(default = "default_truncation")]
        truncation: u64,
    },
    Geometric {
        base: Quad,
        ratio: String,
        #[serde(default = "default_truncation")]
        truncation: u64,
    },
    Jump {
        first: Quad,
        second: Quad,
        #[serde(default = "default_truncation")]
        truncation: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    pub ambient: Pair,
    #[serde(default)]
    pub pieces: Vec<PieceDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_rule: Option<RuleDescriptor>,
    #[serde(default)]
    pub exceptional: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArityDescriptor {
    Finite(usize),
    /// always `"inf"`
    Infinite(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub ambient: Pair,
    pub arity: ArityDescriptor,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<Quad>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationDescriptor {
    pub value: f64,
    pub tag: String,
}

/// `scale * prod (x + c)^e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDescriptor {
    pub scale: String,
    #[serde(default)]
    pub factors: Vec<(String, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationDescriptor>,
    #[serde(default = "yes")]
    pub integrable: bool,
}

fn yes() -> bool {
    true
}

fn r(text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|_| Error::Descriptor(format!("`{text}` is not a rational number")))
}

fn pair(i: &Interval) -> Pair {
    [format_rational(i.lo()), format_rational(i.hi())]
}

fn interval(p: &Pair) -> Result<Interval> {
    Interval::new(r(&p[0])?, r(&p[1])?)
}

fn quad(m: &Moebius) -> Quad {
    m.coefficient_strings()
}

fn moebius(q: &Quad) -> Result<Moebius> {
    Moebius::new(r(&q[0])?, r(&q[1])?, r(&q[2])?, r(&q[3])?)
}

impl RuleDescriptor {
    pub fn from_rule(rule: &BranchRule, truncation: u64) -> Self {
        match rule {
            BranchRule::Harmonic { base, shift } => {
                RuleDescriptor::Harmonic { base: quad(base), shift: format_rational(shift), truncation }
            }
            BranchRule::Geometric { base, ratio } => {
                RuleDescriptor::Geometric { base: quad(base), ratio: format_rational(ratio), truncation }
            }
            BranchRule::Jump { first, second } => {
                RuleDescriptor::Jump { first: quad(first), second: quad(second), truncation }
            }
        }
    }

    pub fn build(&self) -> Result<(BranchRule, u64)> {
        Ok(match self {
            RuleDescriptor::Harmonic { base, shift, truncation } => {
                (BranchRule::Harmonic { base: moebius(base)?, shift: r(shift)? }, *truncation)
            }
            RuleDescriptor::Geometric { base, ratio, truncation } => {
                (BranchRule::Geometric { base: moebius(base)?, ratio: r(ratio)? }, *truncation)
            }
            RuleDescriptor::Jump { first, second, truncation } => {
                (BranchRule::Jump { first: moebius(first)?, second: moebius(second)? }, *truncation)
            }
        })
    }
}

impl MapDescriptor {
    pub fn from_map(map: &PiecewiseMap) -> Self {
        MapDescriptor {
            ambient: pair(map.ambient()),
            pieces: map
                .pieces()
                .iter()
                .map(|p| PieceDescriptor { dom: pair(p.domain()), moebius: quad(p.map()) })
                .collect(),
            family_rule: map.family().map(|f| RuleDescriptor::from_rule(&f.rule, f.truncation)),
            exceptional: map.exceptional().iter().map(|(x, y)| [format_rational(x), format_rational(y)]).collect(),
        }
    }

    pub fn build(&self) -> Result<PiecewiseMap> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| piece(interval(&p.dom)?, moebius(&p.moebius)?))
            .collect::<Result<Vec<_>>>()?;
        let family = match &self.family_rule {
            Some(d) => {
                let (rule, k) = d.build()?;
                Some(PieceFamily::new(rule, k))
            }
            None => None,
        };
        let exceptional = self.exceptional.iter().map(|p| Ok((r(&p[0])?, r(&p[1])?))).collect::<Result<Vec<_>>>()?;
        PiecewiseMap::new(interval(&self.ambient)?, pieces, family, exceptional)
    }
}

impl SystemDescriptor {
    pub fn from_system(f: &BranchSystem) -> Self {
        match f.branches() {
            Branches::Finite(v) => SystemDescriptor {
                ambient: pair(f.ambient()),
                arity: ArityDescriptor::Finite(v.len()),
                branches: v.iter().map(quad).collect(),
                rule: None,
            },
            Branches::Countable { rule, truncation } => SystemDescriptor {
                ambient: pair(f.ambient()),
                arity: ArityDescriptor::Infinite("inf".into()),
                branches: Vec::new(),
                rule: Some(RuleDescriptor::from_rule(rule, *truncation)),
            },
        }
    }

    pub fn build(&self) -> Result<BranchSystem> {
        let ambient = interval(&self.ambient)?;
        match (&self.arity, &self.rule) {
            (ArityDescriptor::Finite(n), None) => {
                if *n != self.branches.len() {
                    return Err(Error::Descriptor(format!("arity {n} but {} branches", self.branches.len())));
                }
                BranchSystem::finite(ambient, self.branches.iter().map(moebius).collect::<Result<_>>()?)
            }
            (ArityDescriptor::Infinite(tag), Some(rule)) if tag == "inf" => {
                let (rule, k) = rule.build()?;
                BranchSystem::countable(ambient, rule, k)
            }
            _ => Err(Error::Descriptor("arity must be a number with `branches`, or \"inf\" with `rule`".into())),
        }
    }
}

impl DensityDescriptor {
    pub fn from_density(d: &Density) -> Self {
        DensityDescriptor {
            scale: format_rational(d.scale()),
            factors: d.factors().iter().map(|(c, e)| (format_rational(c), *e)).collect(),
            normalization: d
                .normalization()
                .map(|n| NormalizationDescriptor { value: n.value, tag: n.tag.clone() }),
            integrable: d.integrable(),
        }
    }

    pub fn build(&self) -> Result<Density> {
        let factors = self.factors.iter().map(|(c, e)| Ok((r(c)?, *e))).collect::<Result<Vec<_>>>()?;
        let mut d = Density::new(r(&self.scale)?, factors)?.with_integrable(self.integrable);
        if let Some(n) = &self.normalization {
            d = d.with_normalization(n.value, &n.tag);
        }
        Ok(d)
    }
}

/// The branch system read off a coding map: inverses of the finite pieces, or
/// the family's rule.
pub fn system_from_map(map: &PiecewiseMap) -> Result<BranchSystem> {
    match (map.pieces().is_empty(), map.family()) {
        (false, None) => BranchSystem::finite(map.ambient().clone(), map.pieces().iter().map(|p| p.map().inverse()).collect()),
        (true, Some(f)) => BranchSystem::countable(map.ambient().clone(), f.rule.clone(), f.truncation),
        _ => Err(Error::Descriptor("a map needs either finite pieces or a family rule, not both".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_json_round_trip() {
        let text = r#"{
            "ambient": ["0", "1"],
            "pieces": [],
            "family_rule": {"kind": "harmonic", "base": ["0", "1", "1", "1"], "shift": "1"},
            "exceptional": [["0", "0"]]
        }"#;
        let d: MapDescriptor = serde_json::from_str(text).unwrap();
        let map = d.build().unwrap();
        assert_eq!(map.family().unwrap().truncation, DEFAULT_TRUNCATION);
        assert_eq!(map.eval_map(&crate::scalar::rat(2, 5)).unwrap(), crate::scalar::rat(1, 2));
        let again: MapDescriptor = serde_json::from_str(&serde_json::to_string(&MapDescriptor::from_map(&map)).unwrap()).unwrap();
        assert_eq!(again.build().unwrap(), map);
    }

    #[test]
    fn system_arity_forms() {
        let two: SystemDescriptor =
            serde_json::from_str(r#"{"ambient":["0","1"],"arity":2,"branches":[["0","1","1","1"],["1","0","1","1"]]}"#).unwrap();
        assert_eq!(two.build().unwrap().enumerated(), 2);
        let inf: SystemDescriptor = serde_json::from_str(
            r#"{"ambient":["0","1"],"arity":"inf","rule":{"kind":"geometric","base":["0","1","1","1"],"ratio":"1/2","truncation":10}}"#,
        )
        .unwrap();
        assert_eq!(inf.build().unwrap().truncation(), Some(10));
        let bad: SystemDescriptor = serde_json::from_str(r#"{"ambient":["0","1"],"arity":3,"branches":[["0","1","1","1"]]}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::Descriptor(_))));
    }

    #[test]
    fn density_round_trip() {
        let g = Density::mu2();
        let d = DensityDescriptor::from_density(&g);
        let back: DensityDescriptor = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back.build().unwrap(), g);
        assert!(matches!(
            serde_json::from_str::<DensityDescriptor>(r#"{"scale":"x"}"#).unwrap().build(),
            Err(Error::Descriptor(_))
        ));
    }
}
