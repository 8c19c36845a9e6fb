//! Chemical reaction networks with mass-action kinetics.
//!
//! A network is an ordered species list, an ordered reaction list, and the
//! integer stoichiometry matrix `Γ` whose column `j` is the net species change
//! of reaction `j` (products minus reactants). Reversible arrows are kept as a
//! single reaction with net rate `kf · Π s^reactants − kr · Π s^products`.
//!
//! Text format, one reaction per line (`#` starts a comment):
//!
//! ```text
//! <side> -> <side> ; k=<float>
//! <side> <-> <side> ; kf=<float>, kr=<float>
//! ```
//!
//! where `<side>` is `coeff Name + coeff Name + ...` with `coeff` defaulting
//! to 1. Species are numbered in order of first appearance.

use crate::linalg::RationalMatrix;
use nalgebra::{DMatrix, DVector};
use num::rational::BigRational;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// One (possibly reversible) mass-action reaction. Coefficient lists are
/// sorted by species index and never contain zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    reactants: Vec<(usize, u32)>,
    products: Vec<(usize, u32)>,
    k_forward: f64,
    k_reverse: f64,
}

impl Reaction {
    pub fn reactants(&self) -> &[(usize, u32)] {
        &self.reactants
    }
    pub fn products(&self) -> &[(usize, u32)] {
        &self.products
    }
    pub fn k_forward(&self) -> f64 {
        self.k_forward
    }
    pub fn k_reverse(&self) -> f64 {
        self.k_reverse
    }
    pub fn is_reversible(&self) -> bool {
        self.k_reverse > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    gamma: DMatrix<i64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BuildError {
    #[error("duplicate species name `{0}`")]
    DuplicateSpecies(String),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("zero stoichiometric coefficient for `{0}`")]
    ZeroCoefficient(String),
    #[error("reactant and product sides are both empty")]
    EmptySides,
    #[error("forward rate constant must be positive (got {0})")]
    NonPositiveForward(f64),
    #[error("reverse rate constant must be nonnegative (got {0})")]
    NegativeReverse(f64),
    #[error("reverse rate constant given for an irreversible reaction")]
    ReverseOnIrreversible,
    #[error("network has no reactions")]
    NoReactions,
    #[error("no such reaction index {0}")]
    UnknownReaction(usize),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("empty network")]
    EmptyNetwork,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate rate constant `{key}`")]
    DuplicateRate { line: usize, key: String },
    #[error("line {line}: forward rate constant must be positive (got {value})")]
    NonPositiveForward { line: usize, value: f64 },
    #[error("line {line}: reverse rate constant must be nonnegative (got {value})")]
    NegativeReverse { line: usize, value: f64 },
    #[error("line {line}: reverse rate constant on an irreversible arrow")]
    ReverseOnIrreversible { line: usize },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("state length {got} does not match species count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("negative concentration {value} at index {index}")]
    NegativeConcentration { index: usize, value: f64 },
}

/// Incremental constructor. Species may be preregistered to fix their order;
/// otherwise they are numbered by first appearance in the reaction list.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    reactions: Vec<Reaction>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn species(mut self, names: &[&str]) -> Result<Self, BuildError> {
        for &n in names {
            self.register(n)?;
        }
        Ok(self)
    }

    fn register(&mut self, name: &str) -> Result<usize, BuildError> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    fn side(&mut self, terms: &[(&str, u32)]) -> Result<Vec<(usize, u32)>, BuildError> {
        let mut acc: HashMap<usize, u32> = HashMap::new();
        for &(name, coeff) in terms {
            if coeff == 0 {
                return Err(BuildError::ZeroCoefficient(name.to_string()));
            }
            let i = self.register(name)?;
            *acc.entry(i).or_insert(0) += coeff;
        }
        let mut v: Vec<(usize, u32)> = acc.into_iter().collect();
        v.sort_unstable_by_key(|&(i, _)| i);
        Ok(v)
    }

    pub fn reaction(
        mut self,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        k_forward: f64,
        k_reverse: f64,
    ) -> Result<Self, BuildError> {
        if k_forward <= 0.0 || !k_forward.is_finite() {
            return Err(BuildError::NonPositiveForward(k_forward));
        }
        if k_reverse < 0.0 || !k_reverse.is_finite() {
            return Err(BuildError::NegativeReverse(k_reverse));
        }
        let r = self.side(reactants)?;
        let p = self.side(products)?;
        if r.is_empty() && p.is_empty() {
            return Err(BuildError::EmptySides);
        }
        self.reactions.push(Reaction { reactants: r, products: p, k_forward, k_reverse });
        Ok(self)
    }

    pub fn irreversible(
        self,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        k: f64,
    ) -> Result<Self, BuildError> {
        self.reaction(reactants, products, k, 0.0)
    }

    pub fn build(self) -> Result<ReactionNetwork, BuildError> {
        if self.reactions.is_empty() {
            return Err(BuildError::NoReactions);
        }
        let n = self.names.len();
        let m = self.reactions.len();
        let mut gamma = DMatrix::<i64>::zeros(n, m);
        for (j, rx) in self.reactions.iter().enumerate() {
            for &(i, c) in &rx.products {
                gamma[(i, j)] += c as i64;
            }
            for &(i, c) in &rx.reactants {
                gamma[(i, j)] -= c as i64;
            }
        }
        let species = self
            .names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Species { name, index })
            .collect();
        Ok(ReactionNetwork { species, reactions: self.reactions, gamma })
    }
}

impl ReactionNetwork {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().find(|s| s.name == name).map(|s| s.index)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn gamma(&self) -> &DMatrix<i64> {
        &self.gamma
    }

    pub fn gamma_f64(&self) -> DMatrix<f64> {
        self.gamma.map(|v| v as f64)
    }

    pub fn gamma_rational(&self) -> RationalMatrix {
        RationalMatrix::from_integer_matrix(&self.gamma)
    }

    /// Replaces rate constants of reaction `index` (0-based). Setting a
    /// positive reverse constant on an originally irreversible reaction is
    /// rejected, since that would change the network structure.
    pub fn override_rates(
        &mut self,
        index: usize,
        k_forward: Option<f64>,
        k_reverse: Option<f64>,
    ) -> Result<(), BuildError> {
        let m = self.reactions.len();
        let rx = self.reactions.get_mut(index).ok_or(BuildError::UnknownReaction(m))?;
        if let Some(kf) = k_forward {
            if kf <= 0.0 || !kf.is_finite() {
                return Err(BuildError::NonPositiveForward(kf));
            }
            rx.k_forward = kf;
        }
        if let Some(kr) = k_reverse {
            if kr < 0.0 || !kr.is_finite() {
                return Err(BuildError::NegativeReverse(kr));
            }
            if !rx.is_reversible() && kr > 0.0 {
                return Err(BuildError::ReverseOnIrreversible);
            }
            rx.k_reverse = kr;
        }
        Ok(())
    }

    /// Mass-action rate vector at a nonnegative concentration vector.
    pub fn mass_action_rates(&self, s: &DVector<f64>) -> Result<DVector<f64>, EvalError> {
        self.check_state(s)?;
        Ok(self.rates_raw(s))
    }

    /// Unchecked polynomial evaluation of the rate vector; total in `s`, used
    /// on integrator stage points that may graze the boundary.
    pub fn rates_raw(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.reactions.len(),
            self.reactions.iter().map(|rx| {
                rx.k_forward * monomial(s, &rx.reactants) - rx.k_reverse * monomial(s, &rx.products)
            }),
        )
    }

    /// Exact partial derivatives `∂R_j/∂s_i` of the polynomial rates (m×n).
    pub fn rate_jacobian(&self, s: &DVector<f64>) -> Result<DMatrix<f64>, EvalError> {
        self.check_state(s)?;
        Ok(self.rate_jacobian_raw(s))
    }

    pub fn rate_jacobian_raw(&self, s: &DVector<f64>) -> DMatrix<f64> {
        let m = self.reactions.len();
        let n = self.species.len();
        DMatrix::from_fn(m, n, |j, i| {
            let rx = &self.reactions[j];
            rx.k_forward * monomial_partial(s, &rx.reactants, i)
                - rx.k_reverse * monomial_partial(s, &rx.products, i)
        })
    }

    fn check_state(&self, s: &DVector<f64>) -> Result<(), EvalError> {
        if s.len() != self.species.len() {
            return Err(EvalError::LengthMismatch { expected: self.species.len(), got: s.len() });
        }
        for (i, &v) in s.iter().enumerate() {
            if v < 0.0 {
                return Err(EvalError::NegativeConcentration { index: i, value: v });
            }
        }
        Ok(())
    }

    /// Rational basis of the left kernel of `Γ`: every returned `c` satisfies
    /// `c'Γ = 0` exactly. Basis size equals `n − rank(Γ)`.
    pub fn conservation_laws(&self) -> Vec<Vec<BigRational>> {
        self.gamma_rational().left_kernel_basis()
    }

    /// Nonnegative conservation functionals that jointly cover every species,
    /// when such a cover can be assembled from the kernel basis and pairwise
    /// sums/differences of basis vectors. Returns the chosen functionals and
    /// the indices of species left uncovered. A full cover is a sufficient
    /// certificate that every species stays bounded along solutions.
    pub fn nonnegative_conservation_cover(&self) -> (Vec<Vec<BigRational>>, Vec<usize>) {
        use num::{Signed, Zero};
        let basis = self.conservation_laws();
        let mut candidates: Vec<Vec<BigRational>> = Vec::new();
        let mut push = |v: Vec<BigRational>| {
            let nonneg = v.iter().all(|q| !q.is_negative());
            let nonzero = v.iter().any(|q| !q.is_zero());
            if nonneg && nonzero && !candidates.contains(&v) {
                candidates.push(v);
            }
        };
        for b in &basis {
            push(b.clone());
            push(b.iter().map(|q| -q.clone()).collect());
        }
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                if i == j {
                    continue;
                }
                push(a.iter().zip(b).map(|(x, y)| x + y).collect());
                push(a.iter().zip(b).map(|(x, y)| x - y).collect());
            }
        }
        let n = self.n_species();
        let mut covered = vec![false; n];
        let mut chosen = Vec::new();
        for c in candidates {
            let adds_new = c
                .iter()
                .enumerate()
                .any(|(i, q)| q.is_positive() && !covered[i]);
            if adds_new {
                for (i, q) in c.iter().enumerate() {
                    if q.is_positive() {
                        covered[i] = true;
                    }
                }
                chosen.push(c);
            }
        }
        let uncovered = (0..n).filter(|&i| !covered[i]).collect();
        (chosen, uncovered)
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |terms: &[(usize, u32)]| -> String {
            terms
                .iter()
                .map(|&(i, c)| {
                    if c == 1 {
                        self.species[i].name.clone()
                    } else {
                        format!("{} {}", c, self.species[i].name)
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        for rx in &self.reactions {
            if rx.is_reversible() {
                writeln!(
                    f,
                    "{} <-> {} ; kf={}, kr={}",
                    side(&rx.reactants),
                    side(&rx.products),
                    rx.k_forward,
                    rx.k_reverse
                )?;
            } else {
                writeln!(f, "{} -> {} ; k={}", side(&rx.reactants), side(&rx.products), rx.k_forward)?;
            }
        }
        Ok(())
    }
}

fn monomial(s: &DVector<f64>, terms: &[(usize, u32)]) -> f64 {
    terms.iter().map(|&(i, c)| s[i].powi(c as i32)).product()
}

fn monomial_partial(s: &DVector<f64>, terms: &[(usize, u32)], wrt: usize) -> f64 {
    let mut acc = 1.0;
    let mut present = false;
    for &(i, c) in terms {
        if i == wrt {
            present = true;
            acc *= c as f64 * s[i].powi(c as i32 - 1);
        } else {
            acc *= s[i].powi(c as i32);
        }
    }
    if present {
        acc
    } else {
        0.0
    }
}

/// Parses the line-oriented network format described in the module docs.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut builder = NetworkBuilder::new();
    let mut any = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (lhs, rest, reversible) = if let Some(i) = content.find("<->") {
            (&content[..i], &content[i + 3..], true)
        } else if let Some(i) = content.find("->") {
            (&content[..i], &content[i + 2..], false)
        } else {
            return Err(ParseError::Syntax { line, msg: "missing reaction arrow".into() });
        };
        let (rhs, rates) = match rest.split_once(';') {
            Some((r, k)) => (r, k),
            None => {
                return Err(ParseError::Syntax {
                    line,
                    msg: "missing rate constants (expected `; k=...`)".into(),
                })
            }
        };
        let reactants = parse_side(lhs, line)?;
        let products = parse_side(rhs, line)?;
        let (kf, kr) = parse_rates(rates, reversible, line)?;
        let r_ref: Vec<(&str, u32)> = reactants.iter().map(|(n, c)| (n.as_str(), *c)).collect();
        let p_ref: Vec<(&str, u32)> = products.iter().map(|(n, c)| (n.as_str(), *c)).collect();
        builder = builder.reaction(&r_ref, &p_ref, kf, kr).map_err(|e| match e {
            BuildError::NonPositiveForward(v) => ParseError::NonPositiveForward { line, value: v },
            BuildError::NegativeReverse(v) => ParseError::NegativeReverse { line, value: v },
            other => ParseError::Syntax { line, msg: other.to_string() },
        })?;
        any = true;
    }
    if !any {
        return Err(ParseError::EmptyNetwork);
    }
    builder.build().map_err(|e| ParseError::Syntax { line: 0, msg: e.to_string() })
}

impl FromStr for ReactionNetwork {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_network(s)
    }
}

fn parse_side(side: &str, line: usize) -> Result<Vec<(String, u32)>, ParseError> {
    let side = side.trim();
    if side.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for term in side.split('+') {
        let tokens: Vec<&str> = term.split_whitespace().collect();
        let (coeff, name) = match tokens.as_slice() {
            [] => {
                return Err(ParseError::Syntax { line, msg: "empty species term".into() });
            }
            [name] => (1u32, *name),
            [coeff, name] => {
                let c: u32 = coeff.parse().map_err(|_| ParseError::Syntax {
                    line,
                    msg: format!("invalid stoichiometric coefficient `{coeff}`"),
                })?;
                (c, *name)
            }
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    msg: format!("cannot parse species term `{}`", term.trim()),
                });
            }
        };
        if coeff == 0 {
            return Err(ParseError::Syntax {
                line,
                msg: format!("zero stoichiometric coefficient for `{name}`"),
            });
        }
        if !valid_species_name(name) {
            return Err(ParseError::Syntax { line, msg: format!("invalid species name `{name}`") });
        }
        out.push((name.to_string(), coeff));
    }
    Ok(out)
}

fn valid_species_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn parse_rates(rates: &str, reversible: bool, line: usize) -> Result<(f64, f64), ParseError> {
    let mut kf: Option<f64> = None;
    let mut kr: Option<f64> = None;
    for entry in rates.split(',') {
        let entry = entry.trim();
        if entry.is_empty() {
            return Err(ParseError::Syntax { line, msg: "empty rate assignment".into() });
        }
        let (key, value) = entry.split_once('=').ok_or_else(|| ParseError::Syntax {
            line,
            msg: format!("expected `name=value` in rate list, got `{entry}`"),
        })?;
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|_| ParseError::Syntax {
            line,
            msg: format!("invalid rate constant value `{}`", value.trim()),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                line,
                msg: format!("rate constant must be finite, got {value}"),
            });
        }
        match (key, reversible) {
            ("k", false) => {
                if kf.replace(value).is_some() {
                    return Err(ParseError::DuplicateRate { line, key: "k".into() });
                }
            }
            ("kr", false) => return Err(ParseError::ReverseOnIrreversible { line }),
            ("kf", true) => {
                if kf.replace(value).is_some() {
                    return Err(ParseError::DuplicateRate { line, key: "kf".into() });
                }
            }
            ("kr", true) => {
                if kr.replace(value).is_some() {
                    return Err(ParseError::DuplicateRate { line, key: "kr".into() });
                }
            }
            ("k", true) => {
                return Err(ParseError::Syntax {
                    line,
                    msg: "reversible arrow takes `kf=` and `kr=`, not `k=`".into(),
                })
            }
            (other, _) => {
                return Err(ParseError::Syntax {
                    line,
                    msg: format!("unknown rate constant `{other}`"),
                })
            }
        }
    }
    let kf = kf.ok_or_else(|| ParseError::Syntax {
        line,
        msg: if reversible { "missing `kf=`".into() } else { "missing `k=`".into() },
    })?;
    let kr = if reversible {
        kr.ok_or_else(|| ParseError::Syntax { line, msg: "missing `kr=`".into() })?
    } else {
        0.0
    };
    if kf <= 0.0 {
        return Err(ParseError::NonPositiveForward { line, value: kf });
    }
    if kr < 0.0 {
        return Err(ParseError::NegativeReverse { line, value: kr });
    }
    Ok((kf, kr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::field::finite_difference_jacobian;
    use crate::linalg::RationalMatrix;
    use num::Zero;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_two_enzyme_cycle_source() {
        let net = parse_network(builtin::FUTILE_CYCLE_SOURCE).unwrap();
        assert_eq!(net.n_species(), 6);
        assert_eq!(net.n_reactions(), 4);
        // Net change per species per reaction, keyed by name so the assertion
        // is independent of the first-appearance numbering.
        let expected: &[(&str, [i64; 4])] = &[
            ("P", [-1, 0, 0, 1]),
            ("Q", [0, 1, -1, 0]),
            ("E", [-1, 1, 0, 0]),
            ("F", [0, 0, -1, 1]),
            ("C", [1, -1, 0, 0]),
            ("D", [0, 0, 1, -1]),
        ];
        for &(name, row) in expected {
            let i = net.species_index(name).unwrap();
            for (j, &entry) in row.iter().enumerate() {
                assert_eq!(net.gamma()[(i, j)], entry, "species {name}, reaction {j}");
            }
        }
    }

    #[test]
    fn builtin_cycle_matches_reference_gamma() {
        let net = builtin::futile_cycle();
        assert_eq!(net.species_names(), vec!["P", "Q", "E", "F", "C", "D"]);
        let expected = DMatrix::from_row_slice(
            6,
            4,
            &[
                -1, 0, 0, 1, //
                0, 1, -1, 0, //
                -1, 1, 0, 0, //
                0, 0, -1, 1, //
                1, -1, 0, 0, //
                0, 0, 1, -1,
            ],
        );
        assert_eq!(net.gamma(), &expected);
    }

    #[test]
    fn parses_single_irreversible_reaction() {
        let net = parse_network("A -> B ; k=2").unwrap();
        assert_eq!(net.n_species(), 2);
        assert_eq!(net.n_reactions(), 1);
        assert_eq!(net.gamma()[(0, 0)], -1);
        assert_eq!(net.gamma()[(1, 0)], 1);
        assert_eq!(net.reactions()[0].k_forward(), 2.0);
        assert!(!net.reactions()[0].is_reversible());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(parse_network(""), Err(ParseError::EmptyNetwork));
        assert_eq!(parse_network("# only a comment\n\n"), Err(ParseError::EmptyNetwork));
    }

    #[test]
    fn duplicate_rate_constant_is_an_error() {
        let err = parse_network("A -> B ; k=1, k=2").unwrap_err();
        assert_eq!(err, ParseError::DuplicateRate { line: 1, key: "k".into() });
    }

    #[test]
    fn nonpositive_forward_constant_is_an_error() {
        let err = parse_network("A -> B ; k=0").unwrap_err();
        assert_eq!(err, ParseError::NonPositiveForward { line: 1, value: 0.0 });
    }

    #[test]
    fn reverse_constant_on_irreversible_arrow_is_an_error() {
        let err = parse_network("A -> B ; k=1, kr=0.5").unwrap_err();
        assert_eq!(err, ParseError::ReverseOnIrreversible { line: 1 });
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_network("A -> B ; k=1\nB = C ; k=1").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rates_on_reference_state() {
        let net = builtin::futile_cycle();
        let s = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let r = net.mass_action_rates(&s).unwrap();
        assert_eq!(r, DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn rates_vanish_at_zero_state() {
        let net = builtin::futile_cycle();
        let r = net.mass_action_rates(&DVector::zeros(6)).unwrap();
        assert_eq!(r.amax(), 0.0);
    }

    #[test]
    fn reverse_monomial_contributes_negatively() {
        let net = builtin::futile_cycle();
        // E = 0, C = 1: first net rate is k1·E·P − k-1·C = −1.
        let s = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let r = net.mass_action_rates(&s).unwrap();
        assert_eq!(r[0], -1.0);
    }

    #[test]
    fn rates_check_length_and_sign() {
        let net = builtin::futile_cycle();
        assert!(matches!(
            net.mass_action_rates(&DVector::zeros(5)),
            Err(EvalError::LengthMismatch { expected: 6, got: 5 })
        ));
        let mut s = DVector::zeros(6);
        s[2] = -0.5;
        assert!(matches!(
            net.mass_action_rates(&s),
            Err(EvalError::NegativeConcentration { index: 2, .. })
        ));
    }

    #[test]
    fn jacobian_entries_on_reference_state() {
        let net = builtin::futile_cycle();
        let s = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let j = net.rate_jacobian(&s).unwrap();
        let e = net.species_index("E").unwrap();
        let c = net.species_index("C").unwrap();
        // ∂R1/∂E = P = 1, ∂R1/∂C = −k_{-1} = −1.
        assert_eq!(j[(0, e)], 1.0);
        assert_eq!(j[(0, c)], -1.0);
    }

    #[test]
    fn bilinear_rate_has_zero_jacobian_at_origin() {
        let net = parse_network("A + B -> C ; k=1").unwrap();
        let j = net.rate_jacobian(&DVector::zeros(3)).unwrap();
        assert_eq!(j.amax(), 0.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use crate::field::VectorField;
        struct RateField(ReactionNetwork);
        impl VectorField for RateField {
            fn dim(&self) -> usize {
                self.0.n_species()
            }
            fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
                // Pad to square by embedding the m rates in the first entries.
                let r = self.0.rates_raw(x);
                let mut out = DVector::zeros(self.0.n_species());
                for j in 0..r.len() {
                    out[j] = r[j];
                }
                out
            }
        }
        let net = builtin::futile_cycle();
        let m = net.n_reactions();
        let field = RateField(net.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let s = DVector::from_fn(6, |_, _| rng.gen_range(0.0..2.0f64));
            let analytic = net.rate_jacobian(&s).unwrap();
            let fd = finite_difference_jacobian(&field, &s, 1e-6);
            for j in 0..m {
                for i in 0..6 {
                    assert!(
                        (analytic[(j, i)] - fd[(j, i)]).abs() <= 1e-6,
                        "entry ({j},{i})"
                    );
                }
            }
        }
    }

    fn contains_in_span(basis: &[Vec<BigRational>], c: &[i64]) -> bool {
        let mut rows: Vec<Vec<BigRational>> = basis.to_vec();
        let dim = rows[0].len();
        let base = RationalMatrix::new(
            rows.len(),
            dim,
            rows.iter().flatten().cloned().collect(),
        );
        let r0 = base.rank();
        rows.push(c.iter().map(|&v| BigRational::from_integer(v.into())).collect());
        let ext = RationalMatrix::new(rows.len(), dim, rows.into_iter().flatten().collect());
        ext.rank() == r0
    }

    #[test]
    fn conservation_laws_of_cycle_span_reference_functionals() {
        let net = builtin::futile_cycle();
        let basis = net.conservation_laws();
        assert_eq!(basis.len(), 3);
        for c in [
            [1i64, 1, 0, 0, 1, 1],
            [0, 0, 1, 0, 1, 0],
            [0, 0, 0, 1, 0, 1],
        ] {
            assert!(contains_in_span(&basis, &c), "functional {c:?} not in span");
        }
    }

    #[test]
    fn conservation_law_of_a_to_b() {
        let net = parse_network("A -> B ; k=1").unwrap();
        let basis = net.conservation_laws();
        assert_eq!(basis.len(), 1);
        let ones: Vec<BigRational> =
            vec![BigRational::from_integer(1.into()), BigRational::from_integer(1.into())];
        assert_eq!(basis[0], ones);
    }

    #[test]
    fn full_row_rank_gamma_has_no_conservation_laws() {
        // Invertible 2x2 net change: A -> 2A and 2B -> B.
        let net = parse_network("A -> 2 A ; k=1\n2 B -> B ; k=1").unwrap();
        assert!(net.conservation_laws().is_empty());
    }

    #[test]
    fn cycle_boundedness_cover_reaches_every_species() {
        let net = builtin::futile_cycle();
        let (cover, uncovered) = net.nonnegative_conservation_cover();
        assert!(uncovered.is_empty(), "uncovered species {uncovered:?}");
        let gamma = net.gamma_rational();
        for c in &cover {
            let image = gamma.transpose().mul_vec(c);
            assert!(image.iter().all(|q| q.is_zero()));
        }
    }

    #[test]
    fn gamma_columns_match_reaction_deltas() {
        let net = builtin::futile_cycle();
        for (j, rx) in net.reactions().iter().enumerate() {
            let mut delta = vec![0i64; net.n_species()];
            for &(i, c) in rx.products() {
                delta[i] += c as i64;
            }
            for &(i, c) in rx.reactants() {
                delta[i] -= c as i64;
            }
            for (i, &d) in delta.iter().enumerate() {
                assert_eq!(net.gamma()[(i, j)], d);
            }
        }
    }

    proptest! {
        #[test]
        fn rates_are_homogeneous_in_the_rate_constants(
            lambda in 0.01..50.0f64,
            conc in prop::collection::vec(0.0..3.0f64, 6),
        ) {
            let base = builtin::futile_cycle();
            let mut scaled = base.clone();
            for j in 0..scaled.n_reactions() {
                let kf = scaled.reactions()[j].k_forward() * lambda;
                let kr = scaled.reactions()[j].k_reverse() * lambda;
                let kr = if scaled.reactions()[j].is_reversible() { Some(kr) } else { None };
                scaled.override_rates(j, Some(kf), kr).unwrap();
            }
            let s = DVector::from_vec(conc);
            let r0 = base.mass_action_rates(&s).unwrap();
            let r1 = scaled.mass_action_rates(&s).unwrap();
            let diff = (&r1 - &r0 * lambda).amax();
            prop_assert!(diff <= 1e-12 * (1.0 + lambda * r0.amax()));
        }

        #[test]
        fn random_networks_have_consistent_gamma_columns(
            n_species in 1usize..5,
            picks in prop::collection::vec((0usize..5, 0usize..5, 1u32..3, 1u32..3), 1..6),
        ) {
            let names: Vec<String> = (0..n_species).map(|i| format!("S{i}")).collect();
            let mut b = NetworkBuilder::new();
            for (r, p, cr, cp) in &picks {
                let rn = &names[r % n_species];
                let pn = &names[p % n_species];
                b = b.reaction(&[(rn.as_str(), *cr)], &[(pn.as_str(), *cp)], 1.0, 0.0).unwrap();
            }
            let net = b.build().unwrap();
            for (j, rx) in net.reactions().iter().enumerate() {
                let mut delta = vec![0i64; net.n_species()];
                for &(i, c) in rx.products() { delta[i] += c as i64; }
                for &(i, c) in rx.reactants() { delta[i] -= c as i64; }
                for (i, &d) in delta.iter().enumerate() {
                    prop_assert_eq!(net.gamma()[(i, j)], d);
                }
            }
        }
    }
}
