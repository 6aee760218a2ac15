//! Phonological transfer rules and pronunciation-variant expansion.
//!
//! A rule maps one source phoneme to alternative realizations (sequences of
//! 0 to 2 phonemes; the empty sequence deletes the source). Expansion is a
//! position-wise cartesian product: every position with a rule contributes
//! the canonical phoneme plus each alternative, independently of the other
//! positions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::inventory::UnifiedInventory;

/// Longest replacement sequence a rule may produce.
pub const MAX_ALTERNATIVE_LEN: usize = 2;

/// Default per-word cap on expanded variants.
pub const DEFAULT_VARIANT_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferRule {
    pub source: String,
    /// Distinct replacement sequences; empty sequence means deletion. The
    /// identity sequence `[source]` is implicit and never stored.
    pub alternatives: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: BTreeMap<String, TransferRule>,
}

impl RuleSet {
    pub fn new() -> Self {
        RuleSet::default()
    }

    pub fn get(&self, source: &str) -> Option<&TransferRule> {
        self.rules.get(source)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TransferRule> {
        self.rules.values()
    }

    pub fn insert(&mut self, rule: TransferRule, inventory: &UnifiedInventory) -> Result<()> {
        validate_rule(&rule, inventory)?;
        if self.rules.contains_key(&rule.source) {
            return Err(Error::validation(format!(
                "duplicate rule for source '{}'",
                rule.source
            )));
        }
        self.rules.insert(rule.source.clone(), rule);
        Ok(())
    }
}

fn validate_rule(rule: &TransferRule, inventory: &UnifiedInventory) -> Result<()> {
    if !inventory.contains(&rule.source) {
        return Err(Error::validation(format!(
            "rule source '{}' not in the unified inventory",
            rule.source
        )));
    }
    if rule.alternatives.is_empty() {
        return Err(Error::validation(format!(
            "rule for '{}' has no alternatives",
            rule.source
        )));
    }
    let mut seen: Vec<&Vec<String>> = Vec::new();
    for alt in &rule.alternatives {
        if alt.len() > MAX_ALTERNATIVE_LEN {
            return Err(Error::validation(format!(
                "alternative for '{}' longer than {MAX_ALTERNATIVE_LEN} phonemes",
                rule.source
            )));
        }
        if alt.len() == 1 && alt[0] == rule.source {
            return Err(Error::validation(format!(
                "identity alternative for '{}' must stay implicit",
                rule.source
            )));
        }
        for sym in alt {
            if !inventory.contains(sym) {
                return Err(Error::validation(format!(
                    "alternative symbol '{sym}' for '{}' not in the unified inventory",
                    rule.source
                )));
            }
        }
        if seen.contains(&alt) {
            return Err(Error::validation(format!(
                "repeated alternative for '{}'",
                rule.source
            )));
        }
        seen.push(alt);
    }
    Ok(())
}

/// Parses a rule file: `#` comments, `source<TAB>alt1|alt2|...` lines, each
/// alt a space-separated symbol sequence or the literal `[del]`.
pub fn parse_rules(text: &str, inventory: &UnifiedInventory) -> Result<RuleSet> {
    let mut set = RuleSet::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (source, alts_field) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(lineno, "expected 'source<TAB>alternatives'"))?;
        let source = source.trim();
        let alts_field = alts_field.trim();
        if alts_field.is_empty() {
            return Err(Error::parse(lineno, "empty alternatives field"));
        }
        let mut alternatives = Vec::new();
        for alt in alts_field.split('|') {
            let alt = alt.trim();
            if alt == "[del]" {
                alternatives.push(Vec::new());
            } else {
                let seq: Vec<String> =
                    alt.split_whitespace().map(|s| s.to_string()).collect();
                if seq.is_empty() {
                    return Err(Error::parse(lineno, "empty alternative"));
                }
                alternatives.push(seq);
            }
        }
        let rule = TransferRule {
            source: source.to_string(),
            alternatives,
        };
        set.insert(rule, inventory)
            .map_err(|e| Error::parse(lineno, e.to_string()))?;
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantSet {
    pub word: String,
    pub canonical: Vec<String>,
    /// Deduplicated variants, canonical first, the rest ordered
    /// lexicographically by symbol id in the unified inventory.
    pub variants: Vec<Vec<String>>,
}

fn check_sequence(seq: &[String], inventory: &UnifiedInventory) -> Result<()> {
    for sym in seq {
        if !inventory.contains(sym) {
            return Err(Error::validation(format!(
                "unknown phoneme '{sym}' in sequence"
            )));
        }
    }
    Ok(())
}

/// Per-position option lists: canonical symbol first, then alternatives.
fn position_options<'a>(seq: &'a [String], rules: &'a RuleSet) -> Vec<Vec<&'a [String]>> {
    seq.iter()
        .map(|sym| {
            let mut options: Vec<&[String]> = vec![std::slice::from_ref(sym)];
            if let Some(rule) = rules.get(sym) {
                for alt in &rule.alternatives {
                    options.push(alt.as_slice());
                }
            }
            options
        })
        .collect()
}

/// Expands a canonical pronunciation into its variant set.
///
/// Variants that collapse to the empty sequence are dropped; a sequence
/// whose every variant would be empty is an error, as is blowing through
/// `cap`.
pub fn expand_pronunciation_with_cap(
    word: &str,
    seq: &[String],
    rules: &RuleSet,
    inventory: &UnifiedInventory,
    cap: usize,
) -> Result<VariantSet> {
    check_sequence(seq, inventory)?;
    let options = position_options(seq, rules);
    let raw_count: usize = options
        .iter()
        .map(|o| o.len())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .ok_or(Error::VariantCapExceeded { cap })?;
    if raw_count > cap {
        return Err(Error::VariantCapExceeded { cap });
    }

    let mut variants: Vec<Vec<String>> = vec![Vec::new()];
    for opts in &options {
        let mut next = Vec::with_capacity(variants.len() * opts.len());
        for prefix in &variants {
            for opt in opts {
                let mut v = prefix.clone();
                v.extend(opt.iter().cloned());
                next.push(v);
            }
        }
        variants = next;
    }

    let table = inventory.symbol_table();
    let key = |v: &[String]| -> Vec<u32> {
        v.iter().map(|s| table.id(s).unwrap_or(u32::MAX)).collect()
    };

    let canonical: Vec<String> = seq.to_vec();
    let mut uniq: Vec<Vec<String>> = Vec::new();
    for v in variants {
        if v.is_empty() {
            continue;
        }
        if !uniq.contains(&v) {
            uniq.push(v);
        }
    }
    if uniq.is_empty() {
        return Err(Error::validation(format!(
            "every variant of '{word}' deletes to the empty sequence"
        )));
    }
    uniq.sort_by_key(|v| key(v));
    let mut ordered = Vec::with_capacity(uniq.len());
    if let Some(pos) = uniq.iter().position(|v| *v == canonical) {
        ordered.push(uniq.remove(pos));
    }
    ordered.extend(uniq);

    Ok(VariantSet {
        word: word.to_string(),
        canonical,
        variants: ordered,
    })
}

pub fn expand_pronunciation(
    word: &str,
    seq: &[String],
    rules: &RuleSet,
    inventory: &UnifiedInventory,
) -> Result<VariantSet> {
    expand_pronunciation_with_cap(word, seq, rules, inventory, DEFAULT_VARIANT_CAP)
}

/// Number of distinct nonempty variants, without keeping the expansion.
pub fn variant_count(
    seq: &[String],
    rules: &RuleSet,
    inventory: &UnifiedInventory,
) -> Result<usize> {
    check_sequence(seq, inventory)?;
    let options = position_options(seq, rules);
    // Deletions or multi-symbol targets can merge distinct choices, so the
    // plain product is only an upper bound; walk the product with a seen-set
    // instead of materializing the ordered variant list.
    let mut seen: std::collections::BTreeSet<Vec<String>> =
        std::collections::BTreeSet::new();
    let mut stack: Vec<(usize, Vec<String>)> = vec![(0, Vec::new())];
    while let Some((pos, prefix)) = stack.pop() {
        if pos == options.len() {
            if !prefix.is_empty() {
                seen.insert(prefix);
            }
            continue;
        }
        for opt in &options[pos] {
            let mut v = prefix.clone();
            v.extend(opt.iter().cloned());
            stack.push((pos + 1, v));
        }
    }
    Ok(seen.len())
}
