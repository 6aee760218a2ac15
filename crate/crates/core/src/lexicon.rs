//! Pronunciation lexicons and per-word / per-utterance variant acceptors.
//!
//! Lexicon input is CMUDict text: `WORD  PH1 PH2 ...` with `WORD(2)`
//! alternates and stress digits on vowels. Tokens resolve through the
//! ARPABET alias table onto unified-inventory symbols. A word acceptor
//! has one parallel-arc chain per canonical pronunciation whose path set
//! equals the rule expansion; utterance acceptors concatenate word
//! acceptors with optional silence in the gaps.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::inventory::UnifiedInventory;
use crate::num::Real;
use crate::rules::{self, RuleSet};
use crate::symbols::{Label, SymbolTable, EPSILON};
use crate::wfst::{self, Arc, Fst, Semiring};

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    /// Uppercased word to its canonical pronunciations, unified symbols.
    pub entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl Lexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries.get(&word.to_uppercase()).map(|v| v.as_slice())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|w| w.as_str())
    }
}

/// Parses CMUDict-format text against the unified inventory.
///
/// `;;;` and `#` lines are comments. `WORD(2)`-style alternates append to
/// the base word's pronunciation list; exact duplicates collapse.
pub fn parse_lexicon(text: &str, inventory: &UnifiedInventory) -> Result<Lexicon> {
    let mut lex = Lexicon::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(";;;") || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let word_field = tokens
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing word"))?;
        let word = match word_field.split_once('(') {
            Some((base, _)) => base,
            None => word_field,
        }
        .to_uppercase();
        if word.is_empty() {
            return Err(Error::parse(lineno, "empty word"));
        }
        let mut pron: Vec<String> = Vec::new();
        for token in tokens {
            match inventory.resolve(token) {
                Some(sym) => pron.push(sym.to_string()),
                None => {
                    return Err(Error::parse(
                        lineno,
                        format!("unknown phoneme '{token}' for word '{word}'"),
                    ))
                }
            }
        }
        if pron.is_empty() {
            return Err(Error::parse(lineno, format!("empty pronunciation for '{word}'")));
        }
        let entry = lex.entries.entry(word).or_default();
        if !entry.contains(&pron) {
            entry.push(pron);
        }
    }
    Ok(lex)
}

fn label_of(table: &SymbolTable, sym: &str) -> Result<Label> {
    table
        .id(sym)
        .ok_or_else(|| Error::validation(format!("symbol '{sym}' missing from table")))
}

/// Acceptor over one canonical pronunciation: a state chain where position
/// p carries one arc per variant option (deletions are epsilon arcs,
/// removed afterwards). All weights are one.
fn pronunciation_fst<F: Real>(
    pron: &[String],
    rules: &RuleSet,
    table: &SymbolTable,
) -> Result<Fst<F>> {
    let semiring = Semiring::Log;
    let one: F = semiring.one();
    let mut fst = Fst::new(semiring);
    let mut prev = fst.add_state();
    fst.set_start(prev);
    for sym in pron {
        let next = fst.add_state();
        let add_option = |fst: &mut Fst<F>, option: &[String]| -> Result<()> {
            match option.len() {
                0 => fst.add_arc(prev, Arc::new(EPSILON, EPSILON, one, next)),
                1 => {
                    let l = label_of(table, &option[0])?;
                    fst.add_arc(prev, Arc::new(l, l, one, next));
                }
                _ => {
                    // chain through fresh states for multi-symbol targets
                    let mut cur = prev;
                    for (i, s) in option.iter().enumerate() {
                        let l = label_of(table, s)?;
                        let dst = if i + 1 == option.len() {
                            next
                        } else {
                            fst.add_state()
                        };
                        fst.add_arc(cur, Arc::new(l, l, one, dst));
                        cur = dst;
                    }
                }
            }
            Ok(())
        };
        add_option(&mut fst, std::slice::from_ref(sym))?;
        if let Some(rule) = rules.get(sym) {
            for alt in &rule.alternatives {
                add_option(&mut fst, alt)?;
            }
        }
        prev = next;
    }
    fst.set_final(prev, one);
    Ok(fst)
}

/// Variant acceptor for a lexicon word: the union over its canonical
/// pronunciations of their expanded chains, epsilon-free and trimmed.
/// A path that would accept the empty string is dropped.
pub fn build_word_fst<F: Real>(
    word: &str,
    lexicon: &Lexicon,
    rules: &RuleSet,
    inventory: &UnifiedInventory,
) -> Result<Fst<F>> {
    let prons = lexicon
        .pronunciations(word)
        .ok_or_else(|| Error::validation(format!("word '{word}' not in lexicon")))?;
    // reuse the expansion cap so graph building and listing agree on limits
    for pron in prons {
        rules::expand_pronunciation(word, pron, rules, inventory)?;
    }
    let table = inventory.symbol_table();
    let mut acc: Option<Fst<F>> = None;
    for pron in prons {
        let fst = pronunciation_fst(pron, rules, &table)?;
        acc = Some(match acc {
            None => fst,
            Some(prev) => wfst::union(&prev, &fst)?,
        });
    }
    let fst = acc.ok_or_else(|| Error::validation(format!("word '{word}' has no pronunciations")))?;
    let mut fst = wfst::remove_epsilon(&fst)?;
    if let Some(start) = fst.start() {
        // an all-deletion route would accept the empty string
        fst.clear_final(start);
    }
    Ok(fst.connect())
}

#[derive(Debug, Clone)]
pub struct UtteranceFsa<F: Real> {
    pub fst: Fst<F>,
    pub transcript: Vec<String>,
    /// Distinct variant count per transcript word.
    pub variant_counts: Vec<usize>,
}

/// Acceptor accepting `{[], [sil]}`.
fn optional_silence_fst<F: Real>(sil: Label) -> Fst<F> {
    let semiring = Semiring::Log;
    let mut fst = Fst::new(semiring);
    let a = fst.add_state();
    let b = fst.add_state();
    fst.set_start(a);
    fst.set_final(a, semiring.one());
    fst.set_final(b, semiring.one());
    fst.add_arc(a, Arc::new(sil, sil, semiring.one(), b));
    fst
}

/// Concatenates word acceptors for a transcript. With `optional_silence`,
/// a skippable silence arc is inserted before the first word, between
/// words, and after the last. The result is epsilon-free and connected.
pub fn build_utterance_fsa<F: Real>(
    transcript: &[String],
    lexicon: &Lexicon,
    rules: &RuleSet,
    inventory: &UnifiedInventory,
    optional_silence: bool,
) -> Result<UtteranceFsa<F>> {
    if transcript.is_empty() {
        return Err(Error::validation("empty transcript"));
    }
    let table = inventory.symbol_table();
    let sil = label_of(&table, &inventory.silence_symbol)?;

    let mut variant_counts = Vec::with_capacity(transcript.len());
    let mut acc: Option<Fst<F>> = None;
    let append = |acc: &mut Option<Fst<F>>, fst: Fst<F>| -> Result<()> {
        *acc = Some(match acc.take() {
            None => fst,
            Some(prev) => wfst::concat(&prev, &fst)?,
        });
        Ok(())
    };
    for (pos, word) in transcript.iter().enumerate() {
        if lexicon.pronunciations(word).is_none() {
            return Err(Error::validation(format!(
                "word '{word}' at position {pos} not in lexicon"
            )));
        }
        if optional_silence {
            append(&mut acc, optional_silence_fst(sil))?;
        }
        let word_fst = build_word_fst(word, lexicon, rules, inventory)?;
        let mut count = 0usize;
        for pron in lexicon.pronunciations(word).unwrap() {
            count += rules::variant_count(pron, rules, inventory)?;
        }
        variant_counts.push(count);
        append(&mut acc, word_fst)?;
    }
    if optional_silence {
        append(&mut acc, optional_silence_fst(sil))?;
    }
    let fst = wfst::remove_epsilon(&acc.unwrap())?.connect();
    Ok(UtteranceFsa {
        fst,
        transcript: transcript.to_vec(),
        variant_counts,
    })
}
