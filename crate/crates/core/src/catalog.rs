//! The six built-in maps with their branch systems and invariant densities.

use serde::{Deserialize, Serialize};

use crate::branching::{coding_map_of, BranchSystem, DEFAULT_TRUNCATION};
use crate::cuntz::Representation;
use crate::descriptor::{system_from_map, DensityDescriptor, MapDescriptor, SystemDescriptor};
use crate::error::{Error, Result};
use crate::interval_dynamics::{BranchRule, Interval, Moebius, PieceFamily, PiecewiseMap};
use crate::measure::Density;
use crate::scalar::{format_rational, int, parse_rational, rat};

pub const ENTRY_NAMES: [&str; 6] = ["tent", "tent_jump", "farey", "gauss", "chan_sigma2", "chan_tau2"];

/// Base map and target set `A = f_1(X)` of a jump transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpPartner {
    pub base: String,
    pub target: Interval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub map: PiecewiseMap,
    pub branch_system: BranchSystem,
    pub invariant_density: Option<Density>,
    /// Set on jump transformations.
    pub jump_partner: Option<JumpPartner>,
    /// Set on base maps: the closed form of their jump transformation on `f_1(X)`.
    pub closed_form_jump: Option<PiecewiseMap>,
}

pub fn list_entries() -> Vec<&'static str> {
    ENTRY_NAMES.to_vec()
}

pub fn get_entry(name: &str) -> Result<CatalogEntry> {
    get_entry_with(name, DEFAULT_TRUNCATION)
}

fn reciprocal_shift() -> Moebius {
    Moebius::ints(0, 1, 1, 1)
}

fn tent_top() -> Moebius {
    Moebius::ints(-1, 2, 0, 2)
}

fn half() -> Moebius {
    Moebius::ints(1, 0, 0, 2)
}

fn finite(name: &str, description: &str, branches: Vec<Moebius>, density: Density) -> Result<CatalogEntry> {
    let f = BranchSystem::finite(Interval::unit(), branches)?;
    Ok(CatalogEntry {
        name: name.into(),
        description: description.into(),
        map: coding_map_of(&f)?,
        branch_system: f,
        invariant_density: Some(density),
        jump_partner: None,
        closed_form_jump: None,
    })
}

fn countable(name: &str, description: &str, rule: BranchRule, k: u64, density: Density, base: &str) -> Result<CatalogEntry> {
    let f = BranchSystem::countable(Interval::unit(), rule.clone(), k)?;
    let map = PiecewiseMap::new(Interval::unit(), vec![], Some(PieceFamily::new(rule, k)), vec![(int(0), int(0))])?;
    Ok(CatalogEntry {
        name: name.into(),
        description: description.into(),
        map,
        branch_system: f,
        invariant_density: Some(density),
        jump_partner: Some(JumpPartner { base: base.into(), target: Interval::new(rat(1, 2), int(1))? }),
        closed_form_jump: None,
    })
}

/// Entry `name`; countable systems enumerate `truncation` branches.
pub fn get_entry_with(name: &str, truncation: u64) -> Result<CatalogEntry> {
    let mut e = build(name, truncation)?;
    if let Some((_, jump)) = jump_pairs().into_iter().find(|(base, _)| *base == name) {
        e.closed_form_jump = Some(build(jump, truncation)?.map);
    }
    Ok(e)
}

fn build(name: &str, truncation: u64) -> Result<CatalogEntry> {
    match name {
        "tent" => finite("tent", "tent map 1 - |2x - 1|", vec![tent_top(), half()], Density::lebesgue()),
        "farey" => finite(
            "farey",
            "Farey map: x/(1 - x) on [0,1/2], 1/x - 1 on [1/2,1]",
            vec![reciprocal_shift(), Moebius::ints(1, 0, 1, 1)],
            Density::theta(),
        ),
        "chan_sigma2" => finite(
            "chan_sigma2",
            "2x on [0,1/2], 1/x - 1 on [1/2,1]",
            vec![reciprocal_shift(), half()],
            Density::gauss(),
        ),
        "tent_jump" => countable(
            "tent_jump",
            "jump transformation of the tent map on [1/2,1]: 2 - 2^n x on (2^-n, 2^-(n-1)]",
            BranchRule::Geometric { base: tent_top(), ratio: rat(1, 2) },
            truncation,
            Density::lebesgue(),
            "tent",
        ),
        "gauss" => countable(
            "gauss",
            "Gauss map 1/x - floor(1/x)",
            BranchRule::Harmonic { base: reciprocal_shift(), shift: int(1) },
            truncation,
            Density::gauss(),
            "farey",
        ),
        "chan_tau2" => countable(
            "chan_tau2",
            "jump transformation of chan_sigma2 on [1/2,1]: 1/(2^(n-1) x) - 1 on [2^-n, 2^-(n-1)]",
            BranchRule::Geometric { base: reciprocal_shift(), ratio: rat(1, 2) },
            truncation,
            Density::mu2(),
            "chan_sigma2",
        ),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

/// `(base, jump)` names of the three catalog jump pairs.
pub fn jump_pairs() -> [(&'static str, &'static str); 3] {
    [("farey", "gauss"), ("chan_sigma2", "chan_tau2"), ("tent", "tent_jump")]
}

/// `lebesgue`, `gauss`, `theta` or `mu2`.
pub fn density_by_name(name: &str) -> Result<Density> {
    match name {
        "lebesgue" => Ok(Density::lebesgue()),
        "gauss" | "gamma" => Ok(Density::gauss()),
        "theta" => Ok(Density::theta()),
        "mu2" => Ok(Density::mu2()),
        other => Err(Error::UnknownEntry(format!("density {other}"))),
    }
}

impl CatalogEntry {
    /// An entry for a bare map, its branches read off the pieces.
    pub fn from_map(name: &str, map: PiecewiseMap) -> Result<Self> {
        Ok(CatalogEntry {
            name: name.into(),
            description: String::new(),
            branch_system: system_from_map(&map)?,
            map,
            invariant_density: None,
            jump_partner: None,
            closed_form_jump: None,
        })
    }

    /// Isometries built from the branches, with the entry's map as coding map.
    pub fn representation(&self) -> Result<Representation> {
        Representation::with_coding_map(self.branch_system.clone(), self.map.clone())
    }

    /// The same entry with branch `i` of a finite system replaced; the map is kept.
    pub fn with_branch(&self, i: usize, branch: Moebius) -> Result<CatalogEntry> {
        let crate::branching::Branches::Finite(v) = self.branch_system.branches() else {
            return Err(Error::InvalidConfig(format!("{} has countably many branches", self.name)));
        };
        if i == 0 || i > v.len() {
            return Err(Error::IndexOutOfRange { index: i, arity: v.len().to_string() });
        }
        let mut v = v.clone();
        v[i - 1] = branch;
        Ok(CatalogEntry { branch_system: BranchSystem::finite(self.branch_system.ambient().clone(), v)?, ..self.clone() })
    }

    pub fn to_descriptor(&self) -> EntryDescriptor {
        EntryDescriptor {
            name: self.name.clone(),
            description: self.description.clone(),
            map: MapDescriptor::from_map(&self.map),
            branch_system: SystemDescriptor::from_system(&self.branch_system),
            invariant_density: self.invariant_density.as_ref().map(DensityDescriptor::from_density),
            jump_partner: self.jump_partner.as_ref().map(|p| PartnerDescriptor {
                base: p.base.clone(),
                target: [format_rational(p.target.lo()), format_rational(p.target.hi())],
            }),
            closed_form_jump: self.closed_form_jump.as_ref().map(MapDescriptor::from_map),
        }
    }

    pub fn from_descriptor(d: &EntryDescriptor) -> Result<Self> {
        let jump_partner = match &d.jump_partner {
            Some(p) => Some(JumpPartner {
                base: p.base.clone(),
                target: Interval::new(parse_rational(&p.target[0])?, parse_rational(&p.target[1])?)?,
            }),
            None => None,
        };
        Ok(CatalogEntry {
            name: d.name.clone(),
            description: d.description.clone(),
            map: d.map.build()?,
            branch_system: d.branch_system.build()?,
            invariant_density: d.invariant_density.as_ref().map(|x| x.build()).transpose()?,
            jump_partner,
            closed_form_jump: d.closed_form_jump.as_ref().map(|m| m.build()).transpose()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerDescriptor {
    pub base: String,
    pub target: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDescriptor {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub map: MapDescriptor,
    pub branch_system: SystemDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant_density: Option<DensityDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_partner: Option<PartnerDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_jump: Option<MapDescriptor>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::jump_family;
    use crate::scalar::Rational;

    #[test]
    fn names_round_trip() {
        assert_eq!(list_entries(), ["tent", "tent_jump", "farey", "gauss", "chan_sigma2", "chan_tau2"]);
        for name in list_entries() {
            let e = get_entry(name).unwrap();
            assert_eq!(e.name, name);
            assert!(e.map.validate().valid, "{name}");
            assert!(e.branch_system.validate().valid, "{name}");
        }
        assert!(matches!(get_entry("logistic"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn json_round_trip() {
        for name in list_entries() {
            let e = get_entry(name).unwrap();
            let text = serde_json::to_string_pretty(&e.to_descriptor()).unwrap();
            let back: EntryDescriptor = serde_json::from_str(&text).unwrap();
            assert_eq!(CatalogEntry::from_descriptor(&back).unwrap(), e, "{name}");
        }
    }

    #[test]
    fn bare_map_entry() {
        let farey = get_entry("farey").unwrap();
        let e = CatalogEntry::from_map("custom", farey.map.clone()).unwrap();
        assert_eq!(e.branch_system, farey.branch_system);
        assert!(e.invariant_density.is_none());
    }

    #[test]
    fn branch_formulas() {
        let farey = get_entry("farey").unwrap().branch_system;
        assert_eq!(farey.branch(1).unwrap(), Moebius::ints(0, 1, 1, 1));
        assert_eq!(farey.branch(2).unwrap(), Moebius::ints(1, 0, 1, 1));
        let chan = get_entry("chan_sigma2").unwrap().branch_system;
        assert_eq!(chan.branch(2).unwrap(), Moebius::ints(1, 0, 0, 2));
        // G(x) = 2 - 2^n x on (2^-n, 2^-(n-1)]
        let g = get_entry("tent_jump").unwrap().map;
        for n in 1..=6u32 {
            let x = Rational::new(3.into(), (1i64 << (n + 1)).into());
            assert_eq!(g.eval_map(&x).unwrap(), int(2) - Rational::from_integer((1i64 << n).into()) * &x);
        }
    }

    #[test]
    fn families_match_jump_families() {
        let gauss = get_entry("gauss").unwrap().branch_system;
        let farey_jumps = jump_family(&get_entry("farey").unwrap().branch_system, 32).unwrap();
        for n in 1..=32 {
            assert!(gauss.branch(n).unwrap().projectively_eq(&farey_jumps.branch(n).unwrap()));
        }
        let tau = get_entry("chan_tau2").unwrap().branch_system;
        let chan_jumps = jump_family(&get_entry("chan_sigma2").unwrap().branch_system, 32).unwrap();
        for n in 1..=32 {
            assert!(tau.branch(n).unwrap().projectively_eq(&chan_jumps.branch(n).unwrap()));
        }
    }

    #[test]
    fn partners() {
        let g = get_entry("gauss").unwrap();
        let p = g.jump_partner.unwrap();
        assert_eq!((p.base.as_str(), p.target.to_string()), ("farey", "[1/2, 1]".to_string()));
        assert_eq!(get_entry("farey").unwrap().closed_form_jump.unwrap(), g.map);
        assert!(density_by_name("theta").is_ok() && density_by_name("nope").is_err());
    }

    #[test]
    fn perturbed_branch_keeps_map() {
        let t = get_entry("tent").unwrap();
        let bad = t.with_branch(1, Moebius::new(rat(-3, 5), int(1), int(0), int(1)).unwrap()).unwrap();
        assert_eq!(bad.map, t.map);
        assert!(!bad.branch_system.validate().valid);
        assert!(get_entry("gauss").unwrap().with_branch(1, half()).is_err());
    }
}
