//! SMILES reader.
//!
//! Supported: organic-subset atoms, bracket atoms (isotope, chirality,
//! hydrogen count, charge, atom class), bond symbols `- = # : / \`,
//! branches, ring closures including `%nn`, and dot-separated fragments.
//! Wildcards, quadruple bonds and reaction SMILES are rejected.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, Molecule, StereoMark};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    BadToken,
    UnclosedRing,
    UnclosedBranch,
    DanglingBond,
    EmptyInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::BadToken => "BadToken",
            ParseErrorKind::UnclosedRing => "UnclosedRing",
            ParseErrorKind::UnclosedBranch => "UnclosedBranch",
            ParseErrorKind::DanglingBond => "DanglingBond",
            ParseErrorKind::EmptyInput => "EmptyInput",
        };
        f.write_str(s)
    }
}

/// Parse failure with the byte offset (into the untrimmed input) it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind}@{offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl ParseError {
    fn new(kind: ParseErrorKind, offset: usize) -> Self {
        ParseError { kind, offset }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct AtomSpec {
    element: Element,
    aromatic: bool,
    bracket: bool,
    isotope: Option<u16>,
    chirality: Option<String>,
    hcount: Option<u8>,
    charge: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSym {
    fn order(self) -> BondOrder {
        match self {
            BondSym::Single | BondSym::Up | BondSym::Down => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }

    fn stereo(self) -> Option<StereoMark> {
        match self {
            BondSym::Up => Some(StereoMark::Up),
            BondSym::Down => Some(StereoMark::Down),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Atom(AtomSpec),
    Bond(BondSym),
    Open,
    Close,
    Ring(u16),
    Dot,
}

struct Lexer<'a> {
    bytes: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, at: usize) -> ParseError {
        ParseError::new(ParseErrorKind::BadToken, self.base + at)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn number(&mut self, max_digits: usize) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(c @ b'0'..=b'9') = self.peek() {
            if self.pos - start == max_digits {
                break;
            }
            value = value * 10 + (c - b'0') as u32;
            self.pos += 1;
        }
        (self.pos > start).then_some(value)
    }

    /// Returns `(token, start offset)` or `None` at end of input.
    fn next_token(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        self.pos += 1;
        let tok = match c {
            b'(' => Token::Open,
            b')' => Token::Close,
            b'.' => Token::Dot,
            b'-' => Token::Bond(BondSym::Single),
            b'=' => Token::Bond(BondSym::Double),
            b'#' => Token::Bond(BondSym::Triple),
            b':' => Token::Bond(BondSym::Aromatic),
            b'/' => Token::Bond(BondSym::Up),
            b'\\' => Token::Bond(BondSym::Down),
            b'0'..=b'9' => Token::Ring((c - b'0') as u16),
            b'%' => {
                let digits_start = self.pos;
                match self.number(2) {
                    Some(n) if self.pos - digits_start == 2 => Token::Ring(n as u16),
                    _ => return Err(self.err(start)),
                }
            }
            b'[' => Token::Atom(self.bracket_atom(start)?),
            _ => Token::Atom(self.organic_atom(c, start)?),
        };
        Ok(Some((tok, start)))
    }

    fn organic_atom(&mut self, c: u8, start: usize) -> Result<AtomSpec, ParseError> {
        let (element, aromatic) = match c {
            b'B' if self.peek() == Some(b'r') => {
                self.pos += 1;
                (Element::BR, false)
            }
            b'C' if self.peek() == Some(b'l') => {
                self.pos += 1;
                (Element::CL, false)
            }
            b'B' => (Element::B, false),
            b'C' => (Element::C, false),
            b'N' => (Element::N, false),
            b'O' => (Element::O, false),
            b'P' => (Element::P, false),
            b'S' => (Element::S, false),
            b'F' => (Element::F, false),
            b'I' => (Element::I, false),
            b'b' => (Element::B, true),
            b'c' => (Element::C, true),
            b'n' => (Element::N, true),
            b'o' => (Element::O, true),
            b'p' => (Element::P, true),
            b's' => (Element::S, true),
            _ => return Err(self.err(start)),
        };
        Ok(AtomSpec {
            element,
            aromatic,
            bracket: false,
            isotope: None,
            chirality: None,
            hcount: None,
            charge: 0,
        })
    }

    fn bracket_atom(&mut self, start: usize) -> Result<AtomSpec, ParseError> {
        let isotope = self.number(3).map(|n| n as u16);
        let (element, aromatic) = self.bracket_symbol().ok_or_else(|| self.err(start))?;

        let mut chirality = None;
        if self.peek() == Some(b'@') {
            let cstart = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if let Some(class) = self.bytes.get(self.pos..self.pos + 2) {
                if matches!(class, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    self.pos += 2;
                    if self.number(2).is_none() {
                        return Err(self.err(start));
                    }
                }
            }
            chirality = Some(String::from_utf8_lossy(&self.bytes[cstart..self.pos]).into_owned());
        }

        let mut hcount = None;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hcount = Some(self.number(1).unwrap_or(1) as u8);
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number(2) {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            if charge.abs() > 15 {
                return Err(self.err(start));
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.number(5).is_none() {
                return Err(self.err(start));
            }
        }

        if self.peek() != Some(b']') {
            return Err(self.err(start));
        }
        self.pos += 1;
        if aromatic && !element.can_be_aromatic() {
            return Err(self.err(start));
        }
        Ok(AtomSpec {
            element,
            aromatic,
            bracket: true,
            isotope,
            chirality,
            hcount,
            charge: charge as i8,
        })
    }

    fn bracket_symbol(&mut self) -> Option<(Element, bool)> {
        let first = self.peek()?;
        if first.is_ascii_lowercase() {
            // two-letter aromatic symbols (se, as) are outside the supported subset
            let el = match first {
                b'b' => Element::B,
                b'c' => Element::C,
                b'n' => Element::N,
                b'o' => Element::O,
                b'p' => Element::P,
                b's' => Element::S,
                _ => return None,
            };
            if matches!(self.bytes.get(self.pos + 1), Some(b'a'..=b'z')) {
                return None;
            }
            self.pos += 1;
            return Some((el, true));
        }
        if !first.is_ascii_uppercase() {
            return None;
        }
        if let Some(&second) = self.bytes.get(self.pos + 1) {
            if second.is_ascii_lowercase() {
                let sym = [first, second];
                let sym = std::str::from_utf8(&sym).ok()?;
                if let Some(el) = Element::from_symbol(sym) {
                    self.pos += 2;
                    return Some((el, false));
                }
            }
        }
        let sym = [first];
        let el = Element::from_symbol(std::str::from_utf8(&sym).ok()?)?;
        self.pos += 1;
        Some((el, false))
    }
}

/// Trims surrounding whitespace; returns the trimmed text and its byte offset.
fn trimmed(text: &str) -> (&str, usize) {
    let start = text.len() - text.trim_start().len();
    (text.trim(), start)
}

/// True when `text` consists solely of valid SMILES tokens (no structural
/// checks: rings, branches and bond placement are not verified).
pub fn lexes_as_smiles(text: &str) -> bool {
    let (body, base) = trimmed(text);
    if body.is_empty() {
        return false;
    }
    let mut lexer = Lexer {
        bytes: body.as_bytes(),
        pos: 0,
        base,
    };
    loop {
        match lexer.next_token() {
            Ok(Some(_)) => {}
            Ok(None) => return true,
            Err(_) => return false,
        }
    }
}

struct OpenRing {
    atom: usize,
    bond: Option<BondSym>,
    offset: usize,
}

/// Parses a SMILES string into a molecular graph.
///
/// Hydrogens of organic-subset atoms are derived from the default valences;
/// aromatic organic atoms reserve one valence unit for their pi bond when
/// their lowest valence allows it.
pub fn parse_smiles(text: &str) -> Result<Molecule, ParseError> {
    let (body, base) = trimmed(text);
    if body.is_empty() {
        return Err(ParseError::new(ParseErrorKind::EmptyInput, 0));
    }
    let mut lexer = Lexer {
        bytes: body.as_bytes(),
        pos: 0,
        base,
    };

    let mut specs: Vec<AtomSpec> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondSym, usize)> = None;
    let mut branches: Vec<(usize, usize)> = Vec::new();
    let mut rings: BTreeMap<u16, OpenRing> = BTreeMap::new();
    let mut last_was_open = false;
    let mut last_dot: Option<usize> = None;

    let bad = |at: usize| ParseError::new(ParseErrorKind::BadToken, base + at);
    let dangling = |at: usize| ParseError::new(ParseErrorKind::DanglingBond, base + at);

    let has_bond = |bonds: &[Bond], a: usize, b: usize| {
        bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
    };

    while let Some((tok, at)) = lexer.next_token()? {
        let was_open = std::mem::replace(&mut last_was_open, false);
        if !matches!(tok, Token::Dot) {
            last_dot = None;
        }
        match tok {
            Token::Atom(spec) => {
                let idx = specs.len();
                let aromatic = spec.aromatic;
                specs.push(spec);
                match (prev, pending.take()) {
                    (Some(p), sym) => {
                        let sym = sym.map(|(s, _)| s);
                        bonds.push(make_bond(p, idx, sym, specs[p].aromatic && aromatic));
                    }
                    (None, Some((_, bond_at))) => return Err(dangling(bond_at)),
                    (None, None) => {}
                }
                prev = Some(idx);
            }
            Token::Bond(sym) => {
                if pending.is_some() {
                    return Err(bad(at));
                }
                if prev.is_none() {
                    return Err(dangling(at));
                }
                pending = Some((sym, at));
            }
            Token::Open => {
                let Some(p) = prev else { return Err(bad(at)) };
                if let Some((_, bond_at)) = pending {
                    return Err(dangling(bond_at));
                }
                branches.push((p, at));
                last_was_open = true;
            }
            Token::Close => {
                if let Some((_, bond_at)) = pending {
                    return Err(dangling(bond_at));
                }
                if was_open {
                    return Err(bad(at));
                }
                let Some((p, _)) = branches.pop() else {
                    return Err(bad(at));
                };
                if prev.is_none() {
                    return Err(bad(at));
                }
                prev = Some(p);
            }
            Token::Ring(n) => {
                let Some(p) = prev else { return Err(bad(at)) };
                let sym = pending.take().map(|(s, _)| s);
                match rings.remove(&n) {
                    Some(open) => {
                        let resolved = match (open.bond, sym) {
                            (Some(a), Some(b)) if a.order() != b.order() => return Err(bad(at)),
                            (Some(a), _) => Some(a),
                            (None, b) => b,
                        };
                        if open.atom == p || has_bond(&bonds, open.atom, p) {
                            return Err(bad(at));
                        }
                        let both_aromatic = specs[open.atom].aromatic && specs[p].aromatic;
                        bonds.push(make_bond(open.atom, p, resolved, both_aromatic));
                    }
                    None => {
                        rings.insert(
                            n,
                            OpenRing {
                                atom: p,
                                bond: sym,
                                offset: base + at,
                            },
                        );
                    }
                }
            }
            Token::Dot => {
                if let Some((_, bond_at)) = pending {
                    return Err(dangling(bond_at));
                }
                if prev.is_none() || !branches.is_empty() {
                    return Err(bad(at));
                }
                prev = None;
                last_dot = Some(at);
            }
        }
    }

    if let Some((_, bond_at)) = pending {
        return Err(dangling(bond_at));
    }
    if let Some(&(_, open_at)) = branches.first() {
        return Err(ParseError::new(
            ParseErrorKind::UnclosedBranch,
            base + open_at,
        ));
    }
    if let Some(first) = rings.values().min_by_key(|r| r.offset) {
        return Err(ParseError::new(ParseErrorKind::UnclosedRing, first.offset));
    }
    if let Some(at) = last_dot {
        return Err(bad(at));
    }

    let atoms = specs
        .into_iter()
        .enumerate()
        .map(|(index, s)| Atom {
            element: s.element,
            aromatic: s.aromatic,
            formal_charge: s.charge,
            isotope: s.isotope,
            explicit_h: if s.bracket {
                Some(s.hcount.unwrap_or(0))
            } else {
                None
            },
            implicit_h: 0,
            chirality: s.chirality,
            bracket: s.bracket,
            index,
        })
        .collect();
    let mut mol = Molecule::new(atoms, bonds);
    for i in 0..mol.atom_count() {
        if !mol.atoms[i].bracket {
            mol.atoms[i].implicit_h = implicit_hydrogens(&mol, i);
        }
    }
    Ok(mol)
}

fn make_bond(a: usize, b: usize, sym: Option<BondSym>, both_aromatic: bool) -> Bond {
    let order = match sym {
        Some(s) => s.order(),
        None if both_aromatic => BondOrder::Aromatic,
        None => BondOrder::Single,
    };
    Bond {
        a,
        b,
        order,
        aromatic: order == BondOrder::Aromatic,
        stereo_mark: sym.and_then(BondSym::stereo),
    }
}

/// Hydrogens an organic-subset atom receives at its current bonding.
///
/// Aliphatic atoms fill up to the lowest allowed valence that accommodates
/// their bonds. Aromatic atoms whose lowest valence leaves room reserve one
/// unit for the pi bond assigned during kekulization.
pub fn implicit_hydrogens(mol: &Molecule, atom: usize) -> u8 {
    let a = &mol.atoms[atom];
    let sum = mol.bond_order_sum(atom);
    let allowed = a.element.allowed_valences(0);
    if a.aromatic && allowed[0] > sum {
        return allowed[0] - sum - 1;
    }
    allowed.iter().find(|&&v| v >= sum).map_or(0, |&v| v - sum)
}

/// True when an aromatic atom must receive one double bond from kekulization.
pub fn needs_pi_bond(mol: &Molecule, atom: usize) -> bool {
    let a = &mol.atoms[atom];
    if !a.aromatic {
        return false;
    }
    let sum = mol.bond_order_sum(atom);
    if a.bracket {
        let total = sum as u16 + a.total_h() as u16 + 1;
        a.element
            .allowed_valences(a.formal_charge)
            .iter()
            .any(|&v| v as u16 == total)
    } else {
        a.element.allowed_valences(0)[0] > sum
    }
}
