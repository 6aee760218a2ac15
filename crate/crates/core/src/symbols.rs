//! Symbol tables and ARPABET aliases.
//!
//! Labels on FST arcs are dense ids; id 0 is reserved for epsilon. A
//! [`SymbolTable`] maps ids to symbol strings and back. CMUDict-style
//! ARPABET tokens (stress digits stripped) are accepted anywhere an IPA
//! symbol is, via a fixed bidirectional alias table.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Label = u32;

/// Reserved epsilon label.
pub const EPSILON: Label = 0;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<String>,
    index: HashMap<String, Label>,
}

impl SymbolTable {
    /// New table containing only the epsilon symbol at id 0.
    pub fn new() -> Self {
        let mut t = SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        t.push("<eps>").unwrap();
        t
    }

    fn push(&mut self, symbol: &str) -> Result<Label> {
        if self.index.contains_key(symbol) {
            return Err(Error::validation(format!("duplicate symbol '{symbol}'")));
        }
        let id = self.symbols.len() as Label;
        self.symbols.push(symbol.to_string());
        self.index.insert(symbol.to_string(), id);
        Ok(id)
    }

    /// Adds a symbol, assigning the next id.
    pub fn add(&mut self, symbol: &str) -> Result<Label> {
        self.push(symbol)
    }

    pub fn id(&self, symbol: &str) -> Option<Label> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: Label) -> Option<&str> {
        self.symbols.get(id as usize).map(|s| s.as_str())
    }

    /// Number of entries including epsilon.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Non-epsilon symbols in id order.
    pub fn iter(&self) -> impl Iterator<Item = (Label, &str)> {
        self.symbols
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, s)| (i as Label, s.as_str()))
    }

    /// Sidecar text form: `id<TAB>symbol`, one line per entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.symbols.iter().enumerate() {
            writeln!(out, "{i}\t{s}").unwrap();
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut symbols: Vec<(Label, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let id = parts
                .next()
                .and_then(|p| p.parse::<Label>().ok())
                .ok_or_else(|| Error::parse(lineno + 1, "bad symbol id"))?;
            let sym = parts
                .next()
                .ok_or_else(|| Error::parse(lineno + 1, "missing symbol"))?;
            symbols.push((id, sym.to_string()));
        }
        symbols.sort_by_key(|(id, _)| *id);
        let mut table = SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        for (i, (id, sym)) in symbols.iter().enumerate() {
            if *id as usize != i {
                return Err(Error::validation(format!(
                    "symbol ids must be dense from 0, got {id} at position {i}"
                )));
            }
            table.symbols.push(sym.clone());
            table.index.insert(sym.clone(), *id);
        }
        if table.is_empty() {
            table.push("<eps>")?;
        }
        Ok(table)
    }
}

/// ARPABET alias, IPA symbol. Stress digits are stripped before lookup,
/// so `AE1` and `AE` both resolve to `æ`.
const ARPABET_IPA: &[(&str, &str)] = &[
    ("P", "p"),
    ("B", "b"),
    ("T", "t"),
    ("D", "d"),
    ("K", "k"),
    ("G", "g"),
    ("CH", "tʃ"),
    ("JH", "dʒ"),
    ("F", "f"),
    ("V", "v"),
    ("TH", "θ"),
    ("DH", "ð"),
    ("S", "s"),
    ("Z", "z"),
    ("SH", "ʃ"),
    ("ZH", "ʒ"),
    ("HH", "h"),
    ("M", "m"),
    ("N", "n"),
    ("NG", "ŋ"),
    ("L", "l"),
    ("R", "r"),
    ("W", "w"),
    ("Y", "j"),
    ("IY", "i"),
    ("IH", "ɪ"),
    ("EH", "e"),
    ("AE", "æ"),
    ("AH", "ʌ"),
    ("ER", "ɝ"),
    ("AA", "ɑ"),
    ("UW", "u"),
    ("UH", "ʊ"),
    ("AO", "ɔ"),
    ("EY", "eɪ"),
    ("AY", "aɪ"),
    ("OW", "oʊ"),
    ("AW", "aʊ"),
    ("OY", "ɔɪ"),
];

/// Strips a trailing CMUDict stress digit (0, 1, or 2).
pub fn strip_stress(token: &str) -> &str {
    token.strip_suffix(['0', '1', '2']).unwrap_or(token)
}

/// Resolves an ARPABET token (stress digits allowed) to its IPA symbol.
///
/// The bare schwa `ə` also resolves here: CMUDict writes it as unstressed
/// AH, so it folds into the `ʌ` class.
pub fn arpabet_to_ipa(token: &str) -> Option<&'static str> {
    let bare = strip_stress(token);
    if bare == "ə" {
        return Some("ʌ");
    }
    ARPABET_IPA
        .iter()
        .find(|(a, _)| *a == bare)
        .map(|(_, ipa)| *ipa)
}

/// Reverse lookup: IPA symbol to its ARPABET alias, if it has one.
pub fn ipa_to_arpabet(symbol: &str) -> Option<&'static str> {
    ARPABET_IPA
        .iter()
        .find(|(_, ipa)| *ipa == symbol)
        .map(|(a, _)| *a)
}

/// Resolves a token that may be either IPA or ARPABET into the canonical
/// symbol used by `resolve: &dyn Fn(&str) -> bool` style membership checks.
pub fn canonical_symbol<'a>(token: &'a str, known: impl Fn(&str) -> bool) -> Option<&'a str> {
    if known(token) {
        return Some(token);
    }
    if let Some(ipa) = arpabet_to_ipa(token) {
        if known(ipa) {
            // static table entries outlive everything
            return Some(ipa);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stress_digits_strip() {
        assert_eq!(strip_stress("AE1"), "AE");
        assert_eq!(strip_stress("AH0"), "AH");
        assert_eq!(strip_stress("NG"), "NG");
    }

    #[test]
    fn arpabet_round_trips() {
        for (arp, ipa) in ARPABET_IPA {
            assert_eq!(arpabet_to_ipa(arp), Some(*ipa));
            assert_eq!(ipa_to_arpabet(ipa), Some(*arp));
        }
    }

    #[test]
    fn schwa_folds_into_ah() {
        assert_eq!(arpabet_to_ipa("ə"), Some("ʌ"));
    }

    #[test]
    fn table_assigns_dense_ids_with_epsilon_zero() {
        let mut t = SymbolTable::new();
        assert_eq!(t.symbol(EPSILON), Some("<eps>"));
        let a = t.add("a").unwrap();
        let b = t.add("b").unwrap();
        assert_eq!((a, b), (1, 2));
        assert!(t.add("a").is_err());
        let round = SymbolTable::parse_text(&t.to_text()).unwrap();
        assert_eq!(round, t);
    }
}
