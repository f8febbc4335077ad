//! Classification tables as validated data: pair records for
//! `(G1 × G2)/ΔK` and principal isotropy rows.
//!
//! Records live in `data/pairs.txt` and `data/principal_isotropy.txt`; the
//! grammar is documented at the top of each file.

use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::algebra::{build_classical, Family};
use crate::error::{Error, Result};
use crate::isotropy::{classify_actions, classify_for_space, generic_stabilizer, PairCase, StabilizerReport, Structure};
use crate::representations::RepTree;
use crate::spaces::{killing_ratio, AlgebraSpec, FactorSpec, SpaceSpec};
use crate::weyl::{weyl_dimension, RootFamily, WeightVector};

pub const PAIRS_DATA: &str = include_str!("../data/pairs.txt");
pub const ISOTROPY_DATA: &str = include_str!("../data/principal_isotropy.txt");

/// Largest `dim g1 + dim g2` for which validation builds the space.
pub const BUILD_BUDGET: usize = 1200;
/// Number of admissible parameter values checked for a parametric record.
pub const PARAM_SAMPLES: usize = 3;
/// Largest parameter value searched for admissible values.
pub const PARAM_LIMIT: i64 = 64;

// ---------------------------------------------------------------------------
// integer expressions and conditions

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(i64),
    Var(String),
    Op(&'static str),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| Error::Parse(format!("number `{text}`")))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Var(chars[start..i].iter().collect()));
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let op = match two.as_str() {
                ">=" => Some(">="),
                "<=" => Some("<="),
                "==" => Some("=="),
                "!=" => Some("!="),
                _ => None,
            };
            if let Some(op) = op {
                out.push(Tok::Op(op));
                i += 2;
                continue;
            }
            let op = match c {
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '/' => "/",
                '%' => "%",
                '^' => "^",
                '<' => "<",
                '>' => ">",
                '&' => "&",
                _ => return Err(Error::Parse(format!("unexpected character `{c}` in `{src}`"))),
            };
            out.push(Tok::Op(op));
            i += 1;
        }
    }
    Ok(out)
}

/// Integer expression in one free variable.
#[derive(Debug, Clone, PartialEq)]
pub enum IntExpr {
    Num(i64),
    Var(String),
    Neg(Box<IntExpr>),
    Bin(&'static str, Box<IntExpr>, Box<IntExpr>),
}

struct ExprParser {
    toks: Vec<Tok>,
    pos: usize,
    src: String,
}

impl ExprParser {
    fn new(src: &str) -> Result<Self> {
        Ok(Self { toks: tokenize(src)?, pos: 0, src: src.to_string() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} in `{}`", self.src))
    }

    fn expr(&mut self, min_prec: u8) -> Result<IntExpr> {
        let mut lhs = self.atom()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(op)) => *op,
                _ => break,
            };
            let (prec, right_assoc) = match op {
                "+" | "-" => (1, false),
                "*" | "/" | "%" => (2, false),
                "^" => (3, true),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(if right_assoc { prec } else { prec + 1 })?;
            lhs = IntExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<IntExpr> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(IntExpr::Num(v))
            }
            Some(Tok::Var(name)) => {
                self.pos += 1;
                Ok(IntExpr::Var(name))
            }
            Some(Tok::Op("-")) => {
                self.pos += 1;
                Ok(IntExpr::Neg(Box::new(self.expr(3)?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr(0)?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("missing `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            _ => Err(self.err("expected a value")),
        }
    }

    fn done(&self) -> Result<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }
}

impl IntExpr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = ExprParser::new(src)?;
        let e = p.expr(0)?;
        p.done()?;
        Ok(e)
    }

    pub fn eval(&self, var: Option<i64>) -> Result<i64> {
        Ok(match self {
            IntExpr::Num(v) => *v,
            IntExpr::Var(name) => var.ok_or_else(|| Error::Parse(format!("`{name}` has no value")))?,
            IntExpr::Neg(e) => -e.eval(var)?,
            IntExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(var)?, b.eval(var)?);
                match *op {
                    "+" => a + b,
                    "-" => a - b,
                    "*" => a * b,
                    "/" | "%" if b == 0 => return Err(Error::Parse("division by zero".into())),
                    "/" => a.div_euclid(b),
                    "%" => a.rem_euclid(b),
                    "^" => {
                        let e = u32::try_from(b).map_err(|_| Error::Parse(format!("negative exponent {b}")))?;
                        a.checked_pow(e).ok_or_else(|| Error::Parse("overflow".into()))?
                    }
                    _ => unreachable!(),
                }
            }
        })
    }

    fn eval_usize(&self, var: Option<i64>) -> Result<usize> {
        let v = self.eval(var)?;
        usize::try_from(v).map_err(|_| Error::Parse(format!("negative value {v}")))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            IntExpr::Num(_) => true,
            IntExpr::Var(_) => false,
            IntExpr::Neg(e) => e.is_constant(),
            IntExpr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

/// Conjunction of comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct Cond {
    clauses: Vec<(IntExpr, &'static str, IntExpr)>,
}

impl Cond {
    pub fn always() -> Self {
        Self { clauses: Vec::new() }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut p = ExprParser::new(src)?;
        let mut clauses = Vec::new();
        loop {
            let lhs = p.expr(0)?;
            let op = match p.peek() {
                Some(Tok::Op(op)) if matches!(*op, "==" | "!=" | "<" | "<=" | ">" | ">=") => *op,
                _ => return Err(p.err("expected a comparison")),
            };
            p.pos += 1;
            let rhs = p.expr(0)?;
            clauses.push((lhs, op, rhs));
            match p.peek() {
                Some(Tok::Op("&")) => p.pos += 1,
                None => break,
                _ => return Err(p.err("expected `&`")),
            }
        }
        Ok(Self { clauses })
    }

    pub fn holds(&self, var: i64) -> Result<bool> {
        for (a, op, b) in &self.clauses {
            let (a, b) = (a.eval(Some(var))?, b.eval(Some(var))?);
            let ok = match *op {
                "==" => a == b,
                "!=" => a != b,
                "<" => a < b,
                "<=" => a <= b,
                ">" => a > b,
                ">=" => a >= b,
                _ => unreachable!(),
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First `count` values in `1..=limit` satisfying the condition.
    pub fn admissible(&self, count: usize, limit: i64) -> Result<Vec<i64>> {
        let mut out = Vec::new();
        for v in 1..=limit {
            if out.len() == count {
                break;
            }
            if self.holds(v)? {
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Value chosen by the first arm whose condition holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise<V> {
    arms: Vec<(Cond, V)>,
}

impl<V> Piecewise<V> {
    fn parse_with(src: &str, item: impl Fn(&str) -> Result<V>) -> Result<Self> {
        let mut arms = Vec::new();
        for part in src.split(';') {
            let part = part.trim();
            match part.split_once("=>") {
                Some((c, v)) => arms.push((Cond::parse(c.trim())?, item(v.trim())?)),
                None => arms.push((Cond::always(), item(part)?)),
            }
        }
        if arms.is_empty() {
            return Err(Error::Parse(format!("empty field `{src}`")));
        }
        Ok(Self { arms })
    }

    pub fn select(&self, var: Option<i64>) -> Result<&V> {
        for (cond, v) in &self.arms {
            if cond.clauses.is_empty() {
                return Ok(v);
            }
            let var = var.ok_or_else(|| Error::Parse("condition needs a parameter value".into()))?;
            if cond.holds(var)? {
                return Ok(v);
            }
        }
        Err(Error::Parse(format!("no alternative applies for n = {var:?}")))
    }

    pub fn values(&self) -> impl Iterator<Item = &V> {
        self.arms.iter().map(|(_, v)| v)
    }
}

// ---------------------------------------------------------------------------
// weights

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFactor {
    /// Root system override; `None` means the root system of `k`.
    pub root: Option<(RootFamily, usize)>,
    /// `(coefficient, fundamental index)` terms.
    pub terms: Vec<(u32, IntExpr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summand {
    pub factors: Vec<WeightFactor>,
    /// Counted by its realification (twice the complex dimension).
    pub realify: bool,
}

/// Isotropy representation: a direct sum of highest-weight summands.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSpec {
    pub text: String,
    pub summands: Vec<Summand>,
}

fn parse_root(src: &str) -> Result<(RootFamily, usize)> {
    let (fam, rank) = src.split_at(1);
    let rank: usize = rank.parse().map_err(|_| Error::Parse(format!("root system `{src}`")))?;
    Ok((fam.parse()?, rank))
}

fn parse_factor(src: &str) -> Result<WeightFactor> {
    let src = src.trim();
    let (root, body) = match src.split_once(':') {
        Some((r, b)) => (Some(parse_root(r.trim())?), b.trim()),
        None => (None, src),
    };
    let mut terms = Vec::new();
    for term in body.split('+') {
        let term = term.trim();
        let at = term.find("phi").ok_or_else(|| Error::Parse(format!("weight term `{term}`")))?;
        let coef = match term[..at].trim() {
            "" => 1,
            c => c.parse().map_err(|_| Error::Parse(format!("coefficient `{c}`")))?,
        };
        let idx = term[at + 3..].trim();
        let idx = if let Some(inner) = idx.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
            IntExpr::parse(inner)?
        } else {
            IntExpr::Num(idx.parse().map_err(|_| Error::Parse(format!("weight index `{idx}`")))?)
        };
        terms.push((coef, idx));
    }
    Ok(WeightFactor { root, terms })
}

fn parse_summand(src: &str) -> Result<Summand> {
    let src = src.trim();
    let (realify, body) = match src.strip_prefix("re(").and_then(|s| s.strip_suffix(')')) {
        Some(inner) => (true, inner),
        None => (false, src),
    };
    let body = body.trim();
    let body = if body.starts_with('(') && body.ends_with(')') && !body.contains("(x)") {
        &body[1..body.len() - 1]
    } else {
        body
    };
    let factors = body.split("(x)").map(parse_factor).collect::<Result<_>>()?;
    Ok(Summand { factors, realify })
}

impl RhoSpec {
    pub fn parse(src: &str) -> Result<Self> {
        let summands = src.split("(+)").map(parse_summand).collect::<Result<_>>()?;
        Ok(Self { text: src.trim().to_string(), summands })
    }

    /// Real dimension, with every factor in the root system `root` unless
    /// overridden.
    pub fn real_dim(&self, root: Option<(RootFamily, usize)>, n: Option<i64>) -> Result<u128> {
        let mut total = 0u128;
        for s in &self.summands {
            let mut d = 1u128;
            for f in &s.factors {
                let (fam, rank) = f
                    .root
                    .or(root)
                    .ok_or_else(|| Error::RepNotConstructible(format!("no root system for `{}`", self.text)))?;
                let mut coeffs = vec![0u32; rank];
                for (c, idx) in &f.terms {
                    let i = idx.eval(n)?;
                    if i < 1 || i as usize > rank {
                        return Err(Error::InvalidWeight(format!("index {i} out of range for {fam}{rank}")));
                    }
                    coeffs[i as usize - 1] += c;
                }
                d *= weyl_dimension(fam, rank, &WeightVector::new(coeffs))?;
            }
            total += if s.realify { 2 * d } else { d };
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// isotropy tags

#[derive(Debug, Clone, PartialEq)]
pub enum IsoExpr {
    Trivial,
    Finite,
    Torus(IntExpr),
    Subgroup(IntExpr),
}

/// Expected principal isotropy algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "dim", rename_all = "lowercase")]
pub enum IsoTag {
    Trivial,
    Finite,
    Torus(usize),
    Subgroup(usize),
}

impl IsoExpr {
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        let arg = |name: &str| src.strip_prefix(name).and_then(|s| s.strip_prefix('(')).and_then(|s| s.strip_suffix(')'));
        if src == "trivial" {
            Ok(IsoExpr::Trivial)
        } else if src == "finite" {
            Ok(IsoExpr::Finite)
        } else if let Some(a) = arg("torus") {
            Ok(IsoExpr::Torus(IntExpr::parse(a)?))
        } else if let Some(a) = arg("subgroup") {
            Ok(IsoExpr::Subgroup(IntExpr::parse(a)?))
        } else {
            Err(Error::Parse(format!("isotropy tag `{src}`")))
        }
    }

    pub fn eval(&self, var: Option<i64>) -> Result<IsoTag> {
        Ok(match self {
            IsoExpr::Trivial => IsoTag::Trivial,
            IsoExpr::Finite => IsoTag::Finite,
            IsoExpr::Torus(e) => IsoTag::Torus(e.eval_usize(var)?),
            IsoExpr::Subgroup(e) => IsoTag::Subgroup(e.eval_usize(var)?),
        })
    }
}

impl IsoTag {
    pub fn dim(self) -> usize {
        match self {
            IsoTag::Trivial | IsoTag::Finite => 0,
            IsoTag::Torus(d) | IsoTag::Subgroup(d) => d,
        }
    }

    pub fn structure(self) -> Structure {
        match self {
            IsoTag::Trivial | IsoTag::Finite => Structure::Trivial,
            IsoTag::Torus(0) | IsoTag::Subgroup(0) => Structure::Trivial,
            IsoTag::Torus(_) => Structure::Abelian,
            IsoTag::Subgroup(_) => Structure::Nonabelian,
        }
    }

    /// Whether a computed stabilizer agrees with the tag.
    pub fn matches(self, dim: usize, structure: Structure) -> bool {
        match self {
            IsoTag::Trivial | IsoTag::Finite => dim == 0,
            IsoTag::Torus(d) => dim == d && structure == Structure::Abelian,
            IsoTag::Subgroup(d) => dim == d,
        }
    }
}

impl fmt::Display for IsoTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoTag::Trivial => write!(f, "trivial"),
            IsoTag::Finite => write!(f, "finite"),
            IsoTag::Torus(d) => write!(f, "torus({d})"),
            IsoTag::Subgroup(d) => write!(f, "subgroup({d})"),
        }
    }
}

// ---------------------------------------------------------------------------
// algebras in records

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exceptional {
    G2,
    F4,
    E6,
    E7,
    E8,
}

impl Exceptional {
    pub fn dim(self) -> usize {
        match self {
            Exceptional::G2 => 14,
            Exceptional::F4 => 52,
            Exceptional::E6 => 78,
            Exceptional::E7 => 133,
            Exceptional::E8 => 248,
        }
    }

    fn parse(src: &str) -> Option<Self> {
        match src.trim() {
            "G2" => Some(Exceptional::G2),
            "F4" => Some(Exceptional::F4),
            "E6" => Some(Exceptional::E6),
            "E7" => Some(Exceptional::E7),
            "E8" => Some(Exceptional::E8),
            _ => None,
        }
    }
}

/// Simple algebra named in a record, with an unevaluated parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupRef {
    Classical { family: Family, n: IntExpr },
    Exceptional(Exceptional),
}

impl GroupRef {
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        if let Some(e) = Exceptional::parse(src) {
            return Ok(GroupRef::Exceptional(e));
        }
        let open = src.find('(').ok_or_else(|| Error::Parse(format!("algebra `{src}`")))?;
        let inner = src[open + 1..].strip_suffix(')').ok_or_else(|| Error::Parse(format!("algebra `{src}`")))?;
        Ok(GroupRef::Classical { family: src[..open].parse()?, n: IntExpr::parse(inner)? })
    }

    pub fn eval(&self, var: Option<i64>) -> Result<Algebra> {
        Ok(match self {
            GroupRef::Classical { family, n } => Algebra::Classical { family: *family, n: n.eval_usize(var)? },
            GroupRef::Exceptional(e) => Algebra::Exceptional(*e),
        })
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, GroupRef::Classical { .. })
    }
}

/// Simple algebra with a concrete parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Algebra {
    Classical { family: Family, n: usize },
    Exceptional(Exceptional),
}

impl Algebra {
    pub fn dim(self) -> usize {
        match self {
            Algebra::Classical { family, n } => family.dim(n),
            Algebra::Exceptional(e) => e.dim(),
        }
    }

    /// Root system used for weights of this algebra.
    pub fn root(self) -> Option<(RootFamily, usize)> {
        match self {
            Algebra::Classical { family, n } => Some(RootFamily::of_algebra(family, n)),
            Algebra::Exceptional(_) => None,
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algebra::Classical { family, n } => write!(f, "{family}({n})"),
            Algebra::Exceptional(e) => write!(f, "{e:?}"),
        }
    }
}

// ---------------------------------------------------------------------------
// records

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub needs_review: bool,
    pub src: Option<String>,
    pub note: Option<String>,
    pub build1: Option<String>,
    pub build2: Option<String>,
    pub rho1_dim: Option<u128>,
    pub rho2_dim: Option<u128>,
}

fn split_flags(src: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in src.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if quoted {
        return Err(Error::Parse(format!("unterminated quote in `{src}`")));
    }
    out.push(cur);
    Ok(out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
}

impl Flags {
    pub fn parse(src: &str) -> Result<Self> {
        let mut f = Flags::default();
        for item in split_flags(src)? {
            if item == "needs_review" {
                f.needs_review = true;
                continue;
            }
            let (key, value) = item.split_once('=').ok_or_else(|| Error::Parse(format!("flag `{item}`")))?;
            let value = value.trim().trim_matches('"').to_string();
            let num = || value.parse::<u128>().map_err(|_| Error::Parse(format!("flag `{item}`")));
            match key.trim() {
                "src" => f.src = Some(value),
                "note" => f.note = Some(value),
                "build1" => f.build1 = Some(value),
                "build2" => f.build2 = Some(value),
                "rho1_dim" => f.rho1_dim = Some(num()?),
                "rho2_dim" => f.rho2_dim = Some(num()?),
                other => return Err(Error::Parse(format!("unknown flag `{other}`"))),
            }
        }
        Ok(f)
    }
}

/// The subgroup `k`: a family with a fixed or constrained parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum KSpec {
    Classical { family: Family, n: Option<usize>, cond: Option<Cond> },
    Exceptional(Exceptional),
}

impl KSpec {
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        if let Some(e) = Exceptional::parse(src) {
            return Ok(KSpec::Exceptional(e));
        }
        let (head, cond) = match src.split_once('[') {
            Some((h, c)) => {
                let c = c.trim().strip_suffix(']').ok_or_else(|| Error::Parse(format!("condition in `{src}`")))?;
                (h.trim(), Some(Cond::parse(c)?))
            }
            None => (src, None),
        };
        match GroupRef::parse(head)? {
            GroupRef::Classical { family, n } if n.is_constant() => {
                if cond.is_some() {
                    return Err(Error::Parse(format!("condition on a fixed parameter in `{src}`")));
                }
                Ok(KSpec::Classical { family, n: Some(n.eval_usize(None)?), cond: None })
            }
            GroupRef::Classical { family, n: IntExpr::Var(_) } => {
                Ok(KSpec::Classical { family, n: None, cond: Some(cond.unwrap_or_else(Cond::always)) })
            }
            _ => Err(Error::Parse(format!("subgroup `{src}`"))),
        }
    }

    pub fn family(&self) -> Option<Family> {
        match self {
            KSpec::Classical { family, .. } => Some(*family),
            KSpec::Exceptional(_) => None,
        }
    }

    /// Fixed parameter, if the record is not a family.
    pub fn fixed_n(&self) -> Option<usize> {
        match self {
            KSpec::Classical { n, .. } => *n,
            KSpec::Exceptional(_) => None,
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, KSpec::Classical { n: None, .. })
    }
}

/// One classification record.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEntry {
    pub case_id: String,
    pub k: KSpec,
    pub g1: GroupRef,
    pub rho1: Piecewise<RhoSpec>,
    pub g2: GroupRef,
    pub rho2: Piecewise<RhoSpec>,
    pub expected_iso1: Piecewise<IsoExpr>,
    pub expected_iso2: Piecewise<IsoExpr>,
    pub flags: Flags,
    pub constructible: bool,
    /// Source line, verbatim.
    pub line: String,
}

/// A record at one parameter value.
#[derive(Debug, Clone, Serialize)]
pub struct PairInstance {
    pub case_id: String,
    pub n: Option<usize>,
    pub k: Algebra,
    pub g1: Algebra,
    pub g2: Algebra,
    pub rho1: String,
    pub rho2: String,
    pub iso1: IsoTag,
    pub iso2: IsoTag,
}

impl PairEntry {
    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(Error::Parse(format!("expected 9 fields, got {}: `{line}`", fields.len())));
        }
        let ctx = |e: Error| Error::Parse(format!("{}: {e}", fields[0]));
        let k = KSpec::parse(fields[1]).map_err(ctx)?;
        let g1 = GroupRef::parse(fields[2]).map_err(ctx)?;
        let rho1 = Piecewise::parse_with(fields[3], RhoSpec::parse).map_err(ctx)?;
        let g2 = GroupRef::parse(fields[4]).map_err(ctx)?;
        let rho2 = Piecewise::parse_with(fields[5], RhoSpec::parse).map_err(ctx)?;
        let expected_iso1 = Piecewise::parse_with(fields[6], IsoExpr::parse).map_err(ctx)?;
        let expected_iso2 = Piecewise::parse_with(fields[7], IsoExpr::parse).map_err(ctx)?;
        let flags = Flags::parse(fields[8]).map_err(ctx)?;
        let constructible = matches!(k, KSpec::Classical { .. })
            && g1.is_classical()
            && g2.is_classical()
            && flags.build1.is_some()
            && flags.build2.is_some();
        Ok(Self {
            case_id: fields[0].to_string(),
            k,
            g1,
            rho1,
            g2,
            rho2,
            expected_iso1,
            expected_iso2,
            flags,
            constructible,
            line: line.to_string(),
        })
    }

    /// Type letter of the case id.
    pub fn kind(&self) -> char {
        self.case_id.chars().next().unwrap_or('?')
    }

    /// Parameter values used for checks: the fixed value, or the first few
    /// admissible ones.
    pub fn sample_params(&self) -> Result<Vec<Option<usize>>> {
        match &self.k {
            KSpec::Exceptional(_) => Ok(vec![None]),
            KSpec::Classical { n: Some(n), .. } => Ok(vec![Some(*n)]),
            KSpec::Classical { family, n: None, cond } => {
                let cond = cond.clone().unwrap_or_else(Cond::always);
                let min = family.min_rank() as i64;
                let mut out = Vec::new();
                for v in cond.admissible(usize::MAX, PARAM_LIMIT)? {
                    if v >= min {
                        out.push(Some(v as usize));
                    }
                    if out.len() == PARAM_SAMPLES {
                        break;
                    }
                }
                if out.is_empty() {
                    return Err(Error::Parse(format!("{}: no admissible parameter", self.case_id)));
                }
                Ok(out)
            }
        }
    }

    pub fn instantiate(&self, n: Option<usize>) -> Result<PairInstance> {
        let (k, var) = match (&self.k, n) {
            (KSpec::Exceptional(e), _) => (Algebra::Exceptional(*e), None),
            (KSpec::Classical { family, n: Some(fixed), .. }, None) => (Algebra::Classical { family: *family, n: *fixed }, None),
            (KSpec::Classical { family, n: Some(fixed), .. }, Some(v)) => {
                if v != *fixed {
                    return Err(Error::Spec(format!("{} is fixed at n = {fixed}", self.case_id)));
                }
                (Algebra::Classical { family: *family, n: v }, None)
            }
            (KSpec::Classical { .. }, None) => {
                return Err(Error::Spec(format!("{} needs a parameter value", self.case_id)));
            }
            (KSpec::Classical { family, n: None, cond }, Some(v)) => {
                if v < family.min_rank() || !cond.as_ref().map_or(Ok(true), |c| c.holds(v as i64))? {
                    return Err(Error::Spec(format!("n = {v} is not admissible for {}", self.case_id)));
                }
                (Algebra::Classical { family: *family, n: v }, Some(v as i64))
            }
        };
        Ok(PairInstance {
            case_id: self.case_id.clone(),
            n: var.map(|v| v as usize),
            k,
            g1: self.g1.eval(var)?,
            g2: self.g2.eval(var)?,
            rho1: self.rho1.select(var)?.text.clone(),
            rho2: self.rho2.select(var)?.text.clone(),
            iso1: self.expected_iso1.select(var)?.eval(var)?,
            iso2: self.expected_iso2.select(var)?.eval(var)?,
        })
    }

    fn rho_dim(&self, factor: usize, n: Option<usize>) -> Result<u128> {
        let (rho, lit) = if factor == 1 { (&self.rho1, self.flags.rho1_dim) } else { (&self.rho2, self.flags.rho2_dim) };
        let var = n.map(|v| v as i64);
        match &self.k {
            KSpec::Exceptional(_) => lit.ok_or_else(|| Error::RepNotConstructible(format!("{}: no literature dimension", self.case_id))),
            KSpec::Classical { family, n: fixed, .. } => {
                let kn = n.or(*fixed).ok_or_else(|| Error::Spec("missing parameter".into()))?;
                rho.select(var)?.real_dim(Some(RootFamily::of_algebra(*family, kn)), var)
            }
        }
    }

    /// Space specification for the build recipe at parameter `n`.
    pub fn space_spec(&self, n: Option<usize>) -> Result<SpaceSpec> {
        if !self.constructible {
            return Err(Error::RepNotConstructible(format!("{} has no classical build recipe", self.case_id)));
        }
        let inst = self.instantiate(n)?;
        let factor = |g: Algebra, recipe: &str| -> Result<(FactorSpec, Option<String>)> {
            if let Some(tree) = recipe.strip_prefix("from_rep(").and_then(|s| s.strip_suffix(')')) {
                return Ok((FactorSpec::FromRep { from_rep: tree.to_string() }, None));
            }
            match g {
                Algebra::Classical { family, n } => {
                    Ok((FactorSpec::Classical { family: family.to_string(), n }, Some(recipe.to_string())))
                }
                Algebra::Exceptional(e) => Err(Error::RepNotConstructible(format!("{e:?}"))),
            }
        };
        let (g1, embedding1) = factor(inst.g1, self.flags.build1.as_deref().unwrap_or_default())?;
        let (g2, embedding2) = factor(inst.g2, self.flags.build2.as_deref().unwrap_or_default())?;
        let k = match inst.k {
            Algebra::Classical { family, n } => AlgebraSpec { family: family.to_string(), n },
            Algebra::Exceptional(e) => return Err(Error::RepNotConstructible(format!("{e:?}"))),
        };
        Ok(SpaceSpec { k, g1, embedding1, g2, embedding2, same_group: false })
    }
}

/// Principal isotropy table row.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyRow {
    pub table: String,
    pub rank: Cond,
    pub rank_text: String,
    pub rep: String,
    pub group: String,
    pub expected: IsoExpr,
    pub note: String,
    /// `(family, parameter in r, tree)` realizing the representation.
    pub check: Option<(Family, IntExpr, RepTree)>,
}

impl IsotropyRow {
    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!("expected 7 fields, got {}: `{line}`", fields.len())));
        }
        if !matches!(fields[0], "I" | "II" | "III" | "IV" | "V") {
            return Err(Error::Parse(format!("table `{}`", fields[0])));
        }
        let check = if fields[6].is_empty() {
            None
        } else {
            let (alg, tree) = fields[6].split_once(':').ok_or_else(|| Error::Parse(format!("check `{}`", fields[6])))?;
            match GroupRef::parse(alg)? {
                GroupRef::Classical { family, n } => Some((family, n, tree.trim().parse()?)),
                GroupRef::Exceptional(e) => return Err(Error::RepNotConstructible(format!("{e:?}"))),
            }
        };
        Ok(Self {
            table: fields[0].to_string(),
            rank: Cond::parse(fields[1])?,
            rank_text: fields[1].to_string(),
            rep: fields[2].to_string(),
            group: fields[3].to_string(),
            expected: IsoExpr::parse(fields[4])?,
            note: fields[5].to_string(),
            check,
        })
    }

    /// Expected dimension, present exactly for tori and subgroups.
    pub fn expected_dim(&self, r: usize) -> Result<Option<usize>> {
        Ok(match self.expected.eval(Some(r as i64))? {
            IsoTag::Torus(d) | IsoTag::Subgroup(d) => Some(d),
            IsoTag::Trivial | IsoTag::Finite => None,
        })
    }
}

// ---------------------------------------------------------------------------
// catalog

#[derive(Debug, Clone)]
pub struct Catalog {
    pub entries: Vec<PairEntry>,
    pub isotropy: Vec<IsotropyRow>,
}

fn records(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl Catalog {
    pub fn parse(pairs: &str, isotropy: &str) -> Result<Self> {
        let entries: Vec<PairEntry> = records(pairs).map(PairEntry::parse).collect::<Result<_>>()?;
        let isotropy = records(isotropy).map(IsotropyRow::parse).collect::<Result<_>>()?;
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.case_id == e.case_id) {
                return Err(Error::Parse(format!("duplicate case `{}`", e.case_id)));
            }
        }
        Ok(Self { entries, isotropy })
    }

    /// Shipped tables, parsed once.
    pub fn shipped() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::parse(PAIRS_DATA, ISOTROPY_DATA).expect("shipped catalog parses"))
    }

    /// Tables from `pairs.txt` and `principal_isotropy.txt` in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let pairs = std::fs::read_to_string(dir.join("pairs.txt"))?;
        let iso = std::fs::read_to_string(dir.join("principal_isotropy.txt"))?;
        Self::parse(&pairs, &iso)
    }

    pub fn lookup(&self, case_id: &str) -> Result<&PairEntry> {
        self.entries.iter().find(|e| e.case_id == case_id).ok_or_else(|| Error::UnknownCase(case_id.to_string()))
    }

    pub fn filter<F: Fn(&PairEntry) -> bool>(&self, pred: F) -> Vec<&PairEntry> {
        self.entries.iter().filter(|e| pred(e)).collect()
    }

    /// Records whose `k` is `family(n)` with a fixed parameter.
    pub fn with_k(&self, family: Family, n: usize) -> Vec<&PairEntry> {
        self.filter(|e| e.k.family() == Some(family) && e.k.fixed_n() == Some(n))
    }

    /// Number of records per type letter.
    pub fn counts(&self) -> Vec<(char, usize)> {
        let mut out: Vec<(char, usize)> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|(c, _)| *c == e.kind()) {
                Some((_, n)) => *n += 1,
                None => out.push((e.kind(), 1)),
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, Serialize)]
pub struct DimCheck {
    pub n: Option<usize>,
    pub k_dim: usize,
    pub g1_dim: usize,
    pub g2_dim: usize,
    pub rho1_dim: Option<u128>,
    pub rho2_dim: Option<u128>,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildCheck {
    pub n: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub p1_dim: Option<usize>,
    pub p2_dim: Option<usize>,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub case_id: String,
    pub constructible: bool,
    pub needs_review: bool,
    pub dims: Vec<DimCheck>,
    /// Present when the space was built.
    pub build: Option<BuildCheck>,
    /// Why the build was skipped, if it was.
    pub build_skipped: Option<String>,
    pub passed: bool,
}

fn dim_check(entry: &PairEntry, n: Option<usize>) -> DimCheck {
    let mut check = DimCheck { n, k_dim: 0, g1_dim: 0, g2_dim: 0, rho1_dim: None, rho2_dim: None, ok: false, error: None };
    let run = |c: &mut DimCheck| -> Result<()> {
        let inst = entry.instantiate(n)?;
        c.k_dim = inst.k.dim();
        c.g1_dim = inst.g1.dim();
        c.g2_dim = inst.g2.dim();
        let r1 = entry.rho_dim(1, inst.n)?;
        let r2 = entry.rho_dim(2, inst.n)?;
        c.rho1_dim = Some(r1);
        c.rho2_dim = Some(r2);
        let (k, g1, g2) = (c.k_dim as u128, c.g1_dim as u128, c.g2_dim as u128);
        if g1 != k + r1 || g2 != k + r2 {
            return Err(Error::Spec(format!(
                "dimension mismatch: {g1} vs {k}+{r1}, {g2} vs {k}+{r2}"
            )));
        }
        Ok(())
    };
    match run(&mut check) {
        Ok(()) => check.ok = true,
        Err(e) => check.error = Some(e.to_string()),
    }
    check
}

fn build_check(entry: &PairEntry, n: Option<usize>, expected: &DimCheck) -> BuildCheck {
    let mut check = BuildCheck { n, c1: None, c2: None, p1_dim: None, p2_dim: None, ok: false, error: None };
    let run = |c: &mut BuildCheck| -> Result<()> {
        let space = entry.space_spec(n)?.build::<f64>()?;
        c.c1 = Some(killing_ratio(&space.emb1)?);
        c.c2 = Some(killing_ratio(&space.emb2)?);
        c.p1_dim = Some(space.p1.ncols());
        c.p2_dim = Some(space.p2.ncols());
        if expected.rho1_dim != Some(space.p1.ncols() as u128) || expected.rho2_dim != Some(space.p2.ncols() as u128) {
            return Err(Error::Spec("built complements disagree with the recorded weights".into()));
        }
        Ok(())
    };
    match run(&mut check) {
        Ok(()) => check.ok = true,
        Err(e) => check.error = Some(e.to_string()),
    }
    check
}

/// Dimension identity at the sampled parameters and, for constructible
/// records within [`BUILD_BUDGET`], a build of the space at the first one.
pub fn validate_entry(entry: &PairEntry) -> ValidationReport {
    validate_entry_with(entry, BUILD_BUDGET)
}

pub fn validate_entry_with(entry: &PairEntry, budget: usize) -> ValidationReport {
    let params = match entry.sample_params() {
        Ok(p) => p,
        Err(e) => {
            return ValidationReport {
                case_id: entry.case_id.clone(),
                constructible: entry.constructible,
                needs_review: entry.flags.needs_review,
                dims: vec![DimCheck {
                    n: None,
                    k_dim: 0,
                    g1_dim: 0,
                    g2_dim: 0,
                    rho1_dim: None,
                    rho2_dim: None,
                    ok: false,
                    error: Some(e.to_string()),
                }],
                build: None,
                build_skipped: None,
                passed: false,
            }
        }
    };
    let dims: Vec<DimCheck> = params.iter().map(|&n| dim_check(entry, n)).collect();
    let (mut build, mut build_skipped) = (None, None);
    if !entry.constructible {
        build_skipped = Some("not constructible".into());
    } else if dims[0].g1_dim + dims[0].g2_dim > budget {
        build_skipped = Some(format!("dim g1 + dim g2 = {} exceeds {budget}", dims[0].g1_dim + dims[0].g2_dim));
    } else {
        build = Some(build_check(entry, params[0], &dims[0]));
    }
    let passed = dims.iter().all(|d| d.ok) && build.as_ref().map_or(true, |b| b.ok);
    ValidationReport {
        case_id: entry.case_id.clone(),
        constructible: entry.constructible,
        needs_review: entry.flags.needs_review,
        dims,
        build,
        build_skipped,
        passed,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub case_id: String,
    pub n: Option<usize>,
    pub expected_iso1: IsoTag,
    pub expected_iso2: IsoTag,
    pub iso1: StabilizerReport,
    pub iso2: StabilizerReport,
    pub match1: bool,
    pub match2: bool,
    pub case: PairCase,
    pub alarm: bool,
}

/// Generic stabilizers of both isotropy representations of the built space,
/// compared with the recorded tags.
pub fn cross_check_isotropy(entry: &PairEntry, n: Option<usize>, trials: usize, seed: u64) -> Result<CrossCheck> {
    if !entry.constructible {
        return Err(Error::RepNotConstructible(format!("{} is not constructible", entry.case_id)));
    }
    let n = match n {
        Some(v) => Some(v),
        None => entry.sample_params()?[0],
    };
    let inst = entry.instantiate(n)?;
    let space = entry.space_spec(n)?.build::<f64>()?;
    let cls = classify_for_space(&space, trials, seed)?;
    Ok(CrossCheck {
        case_id: entry.case_id.clone(),
        n: inst.n,
        expected_iso1: inst.iso1,
        expected_iso2: inst.iso2,
        match1: inst.iso1.matches(cls.iso1.dim, cls.iso1.structure),
        match2: inst.iso2.matches(cls.iso2.dim, cls.iso2.structure),
        alarm: cls.alarm(),
        case: cls.case,
        iso1: cls.iso1,
        iso2: cls.iso2,
    })
}

/// Alternative of the two recorded tags, without computation.
pub fn recorded_case(inst: &PairInstance) -> PairCase {
    crate::isotropy::classify_pair((inst.iso1.dim(), inst.iso1.structure()), (inst.iso2.dim(), inst.iso2.structure()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RowCheck {
    pub table: String,
    pub rep: String,
    pub r: usize,
    pub expected: IsoTag,
    pub report: StabilizerReport,
    pub matched: bool,
}

/// Recompute the stabilizer of an isotropy row at rank `r`.
pub fn check_isotropy_row(row: &IsotropyRow, r: usize, trials: usize, seed: u64) -> Result<RowCheck> {
    let (family, n, tree) =
        row.check.as_ref().ok_or_else(|| Error::RepNotConstructible(format!("{} {} has no realization", row.table, row.rep)))?;
    if !row.rank.holds(r as i64)? {
        return Err(Error::Spec(format!("rank {r} does not satisfy `{}`", row.rank_text)));
    }
    let alg = Arc::new(build_classical::<f64>(*family, n.eval_usize(Some(r as i64))?)?);
    let rep = tree.build(&alg)?;
    let report = generic_stabilizer(&rep, trials, seed)?;
    let expected = row.expected.eval(Some(r as i64))?;
    Ok(RowCheck {
        table: row.table.clone(),
        rep: row.rep.clone(),
        r,
        expected,
        matched: expected.matches(report.dim, report.structure),
        report,
    })
}

/// Classification from two representation trees of one algebra.
pub fn classify_trees(family: Family, n: usize, rho1: &RepTree, rho2: &RepTree, trials: usize, seed: u64) -> Result<PairCase> {
    let alg = Arc::new(build_classical::<f64>(family, n)?);
    Ok(classify_actions(&rho1.build(&alg)?, &rho2.build(&alg)?, trials, seed)?.case)
}
