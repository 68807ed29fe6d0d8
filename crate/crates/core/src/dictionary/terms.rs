//! Candidate PDE terms and the named dictionary presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

const AXES: [char; 3] = ['x', 'y', 'z'];

/// A single-field spatial derivative along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Derivative {
    pub field: usize,
    pub axis: usize,
    pub order: usize,
}

/// One dictionary column: a monomial in the fields times at most one derivative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSpec {
    /// Power of each field in the monomial factor.
    pub powers: Vec<u32>,
    pub derivative: Option<Derivative>,
    pub label: String,
}

impl TermSpec {
    pub fn is_constant(&self) -> bool {
        self.derivative.is_none() && self.powers.iter().all(|&p| p == 0)
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    /// Widest stencil half-width needed to evaluate the term.
    pub fn margin(&self) -> usize {
        self.derivative.map_or(0, |d| super::fd::half_width(d.order))
    }
}

fn superscript(p: u32) -> String {
    const SUP: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    p.to_string()
        .chars()
        .map(|c| SUP[c.to_digit(10).unwrap() as usize])
        .collect()
}

fn monomial_label(names: &[&str], powers: &[u32]) -> Vec<String> {
    names
        .iter()
        .zip(powers)
        .filter(|(_, &p)| p > 0)
        .map(|(n, &p)| {
            if p == 1 {
                n.to_string()
            } else {
                format!("{n}{}", superscript(p))
            }
        })
        .collect()
}

fn derivative_label(names: &[&str], d: &Derivative) -> String {
    let axis: String = std::iter::repeat_n(AXES[d.axis], d.order).collect();
    format!("{}_{axis}", names[d.field])
}

/// Exponent vectors of total degree `degree` over `n` fields, in graded
/// lexicographic order (`u², u·v, v²`).
fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials(n - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Default field names: `u, v, w, ...`.
pub fn default_names(n_fields: usize) -> Vec<String> {
    const NAMES: [&str; 6] = ["u", "v", "w", "a", "b", "c"];
    (0..n_fields)
        .map(|i| NAMES.get(i).map_or_else(|| format!("f{i}"), |s| s.to_string()))
        .collect()
}

/// Enumerates the dictionary for the given fields.
///
/// Order: the constant; pure monomials of total degree `1..=pmax`; then each
/// monomial of degree `0..=pmax` times each single-field pure-axis derivative,
/// grouped by monomial, then field, then order, then axis.
pub fn enumerate_terms(names: &[&str], pmax: u32, dmax: usize, spatial_dims: usize) -> Result<Vec<TermSpec>> {
    if pmax < 1 || dmax < 1 {
        return arg("pmax and dmax must be at least 1");
    }
    if names.is_empty() || !(1..=3).contains(&spatial_dims) {
        return arg("need at least one field and 1 to 3 spatial dimensions");
    }
    let nf = names.len();
    let mut terms = vec![TermSpec {
        powers: vec![0; nf],
        derivative: None,
        label: "1".into(),
    }];
    for degree in 1..=pmax {
        for powers in monomials(nf, degree) {
            let label = monomial_label(names, &powers).join("·");
            terms.push(TermSpec {
                powers,
                derivative: None,
                label,
            });
        }
    }
    for degree in 0..=pmax {
        for powers in monomials(nf, degree) {
            for field in 0..nf {
                for order in 1..=dmax {
                    for axis in 0..spatial_dims {
                        let d = Derivative { field, axis, order };
                        let mut parts = monomial_label(names, &powers);
                        parts.push(derivative_label(names, &d));
                        terms.push(TermSpec {
                            powers: powers.clone(),
                            derivative: Some(d),
                            label: parts.join("·"),
                        });
                    }
                }
            }
        }
    }
    Ok(terms)
}

/// Fixed dictionaries of the published sizes.
///
/// Each preset is a prefix of [`enumerate_terms`] for its system, which
/// keeps the true terms of both benchmark equations in every size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    BurgersP11,
    BurgersP15,
    BurgersP19,
    GrayScottP26,
    GrayScottP53,
    GrayScottP69,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::BurgersP11,
        Preset::BurgersP15,
        Preset::BurgersP19,
        Preset::GrayScottP26,
        Preset::GrayScottP53,
        Preset::GrayScottP69,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::BurgersP11 => "burgers-p11",
            Preset::BurgersP15 => "burgers-p15",
            Preset::BurgersP19 => "burgers-p19",
            Preset::GrayScottP26 => "gray-scott-p26",
            Preset::GrayScottP53 => "gray-scott-p53",
            Preset::GrayScottP69 => "gray-scott-p69",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Preset::BurgersP11 => 11,
            Preset::BurgersP15 => 15,
            Preset::BurgersP19 => 19,
            Preset::GrayScottP26 => 26,
            Preset::GrayScottP53 => 53,
            Preset::GrayScottP69 => 69,
        }
    }

    /// (number of fields, spatial dims, pmax, dmax) of the parent enumeration.
    pub fn parent(self) -> (usize, usize, u32, usize) {
        match self {
            Preset::BurgersP11 | Preset::BurgersP15 | Preset::BurgersP19 => (1, 1, 3, 4),
            _ => (2, 3, 3, 2),
        }
    }

    /// Terms of the preset, labelled with `names` (one per field).
    pub fn terms_named(self, names: &[&str]) -> Result<Vec<TermSpec>> {
        let (nf, dims, pmax, dmax) = self.parent();
        if names.len() != nf {
            return arg(format!(
                "preset {} expects {nf} field(s), got {}",
                self.name(),
                names.len()
            ));
        }
        let mut terms = enumerate_terms(names, pmax, dmax, dims)?;
        terms.truncate(self.size());
        Ok(terms)
    }

    pub fn terms(self) -> Vec<TermSpec> {
        let names = default_names(self.parent().0);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        self.terms_named(&refs).expect("preset enumeration")
    }

    /// Short form used on the command line (`p19` for `burgers-p19`).
    pub fn short(self) -> String {
        format!("p{}", self.size())
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown dictionary preset '{s}'")))
    }
}
