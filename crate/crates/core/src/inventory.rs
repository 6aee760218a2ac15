//! Phoneme inventories, articulatory features, and L1/L2 tying.
//!
//! A phoneme carries a closed-set articulatory feature bundle. Two
//! inventories (here English and Korean) are merged by tying each L2
//! phoneme to the unique L1 phoneme with matching features; L2 phonemes
//! with no match are appended, producing the unified inventory that
//! downstream graph compilation labels arcs with.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::symbols::SymbolTable;

macro_rules! closed_enum {
    ($name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $(Self::$variant => $token),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($token => Ok(Self::$variant),)+
                    other => Err(format!(
                        "unknown {} '{}'", stringify!($name), other
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

closed_enum!(Place {
    Bilabial => "bilabial",
    Labiodental => "labiodental",
    Dental => "dental",
    Alveolar => "alveolar",
    Postalveolar => "postalveolar",
    Palatal => "palatal",
    Velar => "velar",
    Glottal => "glottal",
});

closed_enum!(Manner {
    Plosive => "plosive",
    Nasal => "nasal",
    Fricative => "fricative",
    Affricative => "affricative",
    Approximant => "approximant",
    Lateral => "lateral",
    Flap => "flap",
});

closed_enum!(Voicing {
    Voiced => "voiced",
    Voiceless => "voiceless",
});

closed_enum!(Aspiration {
    Aspirated => "aspirated",
    Neutral => "neutral",
    Tense => "tense",
});

closed_enum!(Height {
    High => "high",
    Mid => "mid",
    Low => "low",
});

closed_enum!(Frontness {
    Front => "front",
    Central => "central",
    Back => "back",
});

closed_enum!(Rounding {
    Rounded => "rounded",
    Unrounded => "unrounded",
});

closed_enum!(Tenseness {
    Tense => "tense",
    Lax => "lax",
    Unspecified => "unspecified",
});

/// Feature bundle; the enum shape guarantees exactly one of the consonant
/// or vowel groups is populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArticulatoryFeatures {
    Consonant {
        place: Place,
        manner: Manner,
        voicing: Voicing,
        aspiration: Aspiration,
    },
    Vowel {
        height: Height,
        frontness: Frontness,
        rounding: Rounding,
        tenseness: Tenseness,
    },
}

impl ArticulatoryFeatures {
    pub fn is_consonant(&self) -> bool {
        matches!(self, ArticulatoryFeatures::Consonant { .. })
    }

    pub fn is_vowel(&self) -> bool {
        matches!(self, ArticulatoryFeatures::Vowel { .. })
    }

    fn to_field_string(self) -> String {
        match self {
            ArticulatoryFeatures::Consonant {
                place,
                manner,
                voicing,
                aspiration,
            } => format!(
                "place={place};manner={manner};voicing={voicing};aspiration={aspiration}"
            ),
            ArticulatoryFeatures::Vowel {
                height,
                frontness,
                rounding,
                tenseness,
            } => {
                let mut s =
                    format!("height={height};frontness={frontness};rounding={rounding}");
                if tenseness != Tenseness::Unspecified {
                    write!(s, ";tenseness={tenseness}").unwrap();
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    English,
    Korean,
    Unified,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::English => "english",
            Language::Korean => "korean",
            Language::Unified => "unified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phoneme {
    pub symbol: String,
    pub language: Language,
    pub features: ArticulatoryFeatures,
    /// Free-text caveat, e.g. that aspiration applies in syllable onset.
    /// Metadata only; never consulted by tying.
    pub onset_note: Option<String>,
}

/// True iff the two phonemes count as the same sound for tying purposes:
/// same class, and all features in the class's group equal, except that
/// vowel tenseness matches when either side leaves it unspecified.
pub fn features_match(a: &Phoneme, b: &Phoneme) -> bool {
    match (&a.features, &b.features) {
        (
            ArticulatoryFeatures::Consonant {
                place: pa,
                manner: ma,
                voicing: va,
                aspiration: aa,
            },
            ArticulatoryFeatures::Consonant {
                place: pb,
                manner: mb,
                voicing: vb,
                aspiration: ab,
            },
        ) => pa == pb && ma == mb && va == vb && aa == ab,
        (
            ArticulatoryFeatures::Vowel {
                height: ha,
                frontness: fa,
                rounding: ra,
                tenseness: ta,
            },
            ArticulatoryFeatures::Vowel {
                height: hb,
                frontness: fb,
                rounding: rb,
                tenseness: tb,
            },
        ) => {
            let tense_ok = *ta == Tenseness::Unspecified
                || *tb == Tenseness::Unspecified
                || ta == tb;
            ha == hb && fa == fb && ra == rb && tense_ok
        }
        _ => false,
    }
}

#[derive(Debug, Clone)]
pub struct Inventory {
    pub language: Language,
    pub phonemes: Vec<Phoneme>,
}

impl Inventory {
    pub fn consonant_count(&self) -> usize {
        self.phonemes
            .iter()
            .filter(|p| p.features.is_consonant())
            .count()
    }

    pub fn vowel_count(&self) -> usize {
        self.phonemes.iter().filter(|p| p.features.is_vowel()).count()
    }

    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }

    pub fn get(&self, symbol: &str) -> Option<&Phoneme> {
        self.phonemes.iter().find(|p| p.symbol == symbol)
    }
}

fn parse_features(
    lineno: usize,
    class: &str,
    field: &str,
) -> Result<ArticulatoryFeatures> {
    let mut pairs: BTreeMap<&str, &str> = BTreeMap::new();
    for item in field.split(';').filter(|s| !s.trim().is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::parse(lineno, format!("bad feature item '{item}'")))?;
        if pairs.insert(key.trim(), value.trim()).is_some() {
            return Err(Error::parse(lineno, format!("repeated feature '{key}'")));
        }
    }

    let parse_one = |key: &str| -> Result<&str> {
        pairs
            .get(key)
            .copied()
            .ok_or_else(|| Error::parse(lineno, format!("missing feature '{key}'")))
    };
    let bad = |e: String| Error::parse(lineno, e);

    let feats = match class {
        "consonant" => {
            for key in pairs.keys() {
                if !matches!(*key, "place" | "manner" | "voicing" | "aspiration") {
                    return Err(Error::parse(
                        lineno,
                        format!("feature '{key}' does not belong to the consonant group"),
                    ));
                }
            }
            ArticulatoryFeatures::Consonant {
                place: parse_one("place")?.parse().map_err(bad)?,
                manner: parse_one("manner")?.parse().map_err(bad)?,
                voicing: parse_one("voicing")?.parse().map_err(bad)?,
                aspiration: parse_one("aspiration")?.parse().map_err(bad)?,
            }
        }
        "vowel" => {
            for key in pairs.keys() {
                if !matches!(*key, "height" | "frontness" | "rounding" | "tenseness") {
                    return Err(Error::parse(
                        lineno,
                        format!("feature '{key}' does not belong to the vowel group"),
                    ));
                }
            }
            let tenseness = match pairs.get("tenseness") {
                Some(v) => v.parse().map_err(bad)?,
                None => Tenseness::Unspecified,
            };
            ArticulatoryFeatures::Vowel {
                height: parse_one("height")?.parse().map_err(bad)?,
                frontness: parse_one("frontness")?.parse().map_err(bad)?,
                rounding: parse_one("rounding")?.parse().map_err(bad)?,
                tenseness,
            }
        }
        other => {
            return Err(Error::parse(lineno, format!("unknown class '{other}'")));
        }
    };
    Ok(feats)
}

/// Parses an inventory file: `#` comments, one phoneme per line as
/// `symbol<TAB>class<TAB>feature=value;...`. Text after an inline `#`
/// in the feature field is kept as the phoneme's onset note.
pub fn parse_inventory(text: &str, language: Language) -> Result<Inventory> {
    let mut phonemes: Vec<Phoneme> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (body, note) = match line.split_once('#') {
            Some((b, n)) => (b.trim_end(), Some(n.trim().to_string())),
            None => (line, None),
        };
        let fields: Vec<&str> = body.split('\t').filter(|f| !f.is_empty()).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 'symbol<TAB>class<TAB>features', got '{body}'"),
            ));
        }
        let symbol = fields[0].trim();
        if symbol.is_empty() {
            return Err(Error::parse(lineno, "empty symbol"));
        }
        if phonemes.iter().any(|p| p.symbol == symbol) {
            return Err(Error::parse(lineno, format!("duplicate symbol '{symbol}'")));
        }
        let features = parse_features(lineno, fields[1].trim(), fields[2])?;
        phonemes.push(Phoneme {
            symbol: symbol.to_string(),
            language,
            features,
            onset_note: note.filter(|n| !n.is_empty()),
        });
    }
    Ok(Inventory { language, phonemes })
}

pub fn serialize_inventory(inv: &Inventory) -> String {
    let mut out = String::new();
    for p in &inv.phonemes {
        let class = if p.features.is_consonant() {
            "consonant"
        } else {
            "vowel"
        };
        write!(out, "{}\t{}\t{}", p.symbol, class, p.features.to_field_string()).unwrap();
        if let Some(note) = &p.onset_note {
            write!(out, "\t# {note}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Default symbol for the non-speech phoneme appended to unified sets.
pub const SILENCE_SYMBOL: &str = "sil";

#[derive(Debug, Clone)]
pub struct UnifiedInventory {
    /// Speech phonemes: L1 order first, then untied L2 phonemes in input
    /// order. The silence symbol is not a member of this list.
    pub phonemes: Vec<Phoneme>,
    /// Every L2 symbol maps to the L1 symbol it tied to, or to itself.
    pub tie_map: BTreeMap<String, String>,
    pub silence_symbol: String,
}

impl UnifiedInventory {
    pub fn speech_count(&self) -> usize {
        self.phonemes.len()
    }

    /// Speech phonemes plus silence.
    pub fn num_phonemes(&self) -> usize {
        self.phonemes.len() + 1
    }

    pub fn consonant_count(&self) -> usize {
        self.phonemes
            .iter()
            .filter(|p| p.features.is_consonant())
            .count()
    }

    pub fn vowel_count(&self) -> usize {
        self.phonemes.iter().filter(|p| p.features.is_vowel()).count()
    }

    pub fn ties(&self) -> impl Iterator<Item = (&str, &str)> {
        self.tie_map
            .iter()
            .filter(|(k, v)| k != v)
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn contains(&self, symbol: &str) -> bool {
        symbol == self.silence_symbol || self.phonemes.iter().any(|p| p.symbol == symbol)
    }

    pub fn get(&self, symbol: &str) -> Option<&Phoneme> {
        self.phonemes.iter().find(|p| p.symbol == symbol)
    }

    /// Symbol table over the unified set: ids 1..=62 are speech phonemes in
    /// inventory order, the last id is silence, 0 is epsilon.
    pub fn symbol_table(&self) -> SymbolTable {
        let mut t = SymbolTable::new();
        for p in &self.phonemes {
            t.add(&p.symbol).unwrap();
        }
        t.add(&self.silence_symbol).unwrap();
        t
    }

    /// Resolves an IPA-or-ARPABET token to the unified symbol, following
    /// the tie map so a tied-away L2 symbol lands on its class
    /// representative.
    pub fn resolve<'a>(&'a self, token: &'a str) -> Option<&'a str> {
        let bare = crate::symbols::strip_stress(token);
        let direct = if self.contains(bare) {
            Some(bare)
        } else {
            crate::symbols::arpabet_to_ipa(bare).filter(|ipa| self.contains(ipa))
        };
        direct.or_else(|| {
            self.tie_map
                .get(bare)
                .map(|s| s.as_str())
                .filter(|s| self.contains(s))
        })
    }

    /// Whole-inventory view (language tag `unified`), without silence.
    pub fn as_inventory(&self) -> Inventory {
        Inventory {
            language: Language::Unified,
            phonemes: self.phonemes.clone(),
        }
    }
}

/// Ties the L2 inventory into the L1 inventory.
///
/// Each L2 phoneme either merges with the single L1 phoneme whose features
/// match, or is appended as a new phoneme. Two or more candidates abort the
/// build, except that an exact symbol match among them wins outright (so
/// re-tying a unified set against the same L2 input is a no-op).
pub fn tie_inventories(l1: &Inventory, l2: &Inventory) -> Result<UnifiedInventory> {
    let mut phonemes = l1.phonemes.clone();
    let mut tie_map = BTreeMap::new();

    for l2p in &l2.phonemes {
        let candidates: Vec<&Phoneme> = l1
            .phonemes
            .iter()
            .filter(|l1p| features_match(l1p, l2p))
            .collect();
        let target = match candidates.len() {
            0 => None,
            1 => Some(candidates[0].symbol.clone()),
            _ => {
                let exact = candidates.iter().find(|c| c.symbol == l2p.symbol);
                match exact {
                    Some(c) => Some(c.symbol.clone()),
                    None => {
                        return Err(Error::AmbiguousTie {
                            symbol: l2p.symbol.clone(),
                            candidates: candidates
                                .iter()
                                .map(|c| c.symbol.clone())
                                .collect(),
                        });
                    }
                }
            }
        };
        match target {
            Some(sym) => {
                tie_map.insert(l2p.symbol.clone(), sym);
            }
            None => {
                if phonemes.iter().any(|p| p.symbol == l2p.symbol) {
                    return Err(Error::validation(format!(
                        "untied phoneme '{}' collides with an existing symbol",
                        l2p.symbol
                    )));
                }
                tie_map.insert(l2p.symbol.clone(), l2p.symbol.clone());
                phonemes.push(l2p.clone());
            }
        }
    }

    Ok(UnifiedInventory {
        phonemes,
        tie_map,
        silence_symbol: SILENCE_SYMBOL.to_string(),
    })
}

/// Serializes a unified inventory: phoneme lines in the plain format, a
/// `#SILENCE` directive, and a trailing `#TIE l2 -> l1` comment block.
pub fn serialize_unified(u: &UnifiedInventory) -> String {
    let mut out = serialize_inventory(&u.as_inventory());
    writeln!(out, "#SILENCE {}", u.silence_symbol).unwrap();
    for (l2, l1) in u.ties() {
        writeln!(out, "#TIE {l2} -> {l1}").unwrap();
    }
    out
}

/// Parses the output of [`serialize_unified`].
pub fn parse_unified(text: &str) -> Result<UnifiedInventory> {
    let inv = parse_inventory(text, Language::Unified)?;
    let mut silence = SILENCE_SYMBOL.to_string();
    let mut tie_map = BTreeMap::new();
    for p in &inv.phonemes {
        tie_map.insert(p.symbol.clone(), p.symbol.clone());
    }
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("#SILENCE") {
            silence = rest.trim().to_string();
            if silence.is_empty() {
                return Err(Error::parse(i + 1, "empty silence symbol"));
            }
        } else if let Some(rest) = line.strip_prefix("#TIE") {
            let (l2, l1) = rest
                .split_once("->")
                .ok_or_else(|| Error::parse(i + 1, "bad tie line"))?;
            tie_map.insert(l2.trim().to_string(), l1.trim().to_string());
        }
    }
    Ok(UnifiedInventory {
        phonemes: inv.phonemes,
        tie_map,
        silence_symbol: silence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consonant(
        symbol: &str,
        language: Language,
        place: Place,
        manner: Manner,
        voicing: Voicing,
        aspiration: Aspiration,
    ) -> Phoneme {
        Phoneme {
            symbol: symbol.to_string(),
            language,
            features: ArticulatoryFeatures::Consonant {
                place,
                manner,
                voicing,
                aspiration,
            },
            onset_note: None,
        }
    }

    fn vowel(
        symbol: &str,
        language: Language,
        height: Height,
        frontness: Frontness,
        rounding: Rounding,
        tenseness: Tenseness,
    ) -> Phoneme {
        Phoneme {
            symbol: symbol.to_string(),
            language,
            features: ArticulatoryFeatures::Vowel {
                height,
                frontness,
                rounding,
                tenseness,
            },
            onset_note: None,
        }
    }

    #[test]
    fn parse_single_consonant_line() {
        let text = "k\tconsonant\tplace=velar;manner=plosive;voicing=voiceless;aspiration=aspirated";
        let inv = parse_inventory(text, Language::English).unwrap();
        assert_eq!(inv.len(), 1);
        let p = &inv.phonemes[0];
        assert_eq!(p.symbol, "k");
        assert_eq!(
            p.features,
            ArticulatoryFeatures::Consonant {
                place: Place::Velar,
                manner: Manner::Plosive,
                voicing: Voicing::Voiceless,
                aspiration: Aspiration::Aspirated,
            }
        );
    }

    #[test]
    fn empty_file_gives_empty_inventory() {
        let inv = parse_inventory("", Language::English).unwrap();
        assert_eq!(inv.len(), 0);
        assert_eq!(inv.consonant_count(), 0);
        assert_eq!(inv.vowel_count(), 0);
    }

    #[test]
    fn unknown_place_token_names_offender() {
        let text = "q\tconsonant\tplace=uvular;manner=plosive;voicing=voiceless;aspiration=neutral";
        let err = parse_inventory(text, Language::English).unwrap_err();
        assert!(err.to_string().contains("uvular"), "{err}");
    }

    #[test]
    fn duplicate_symbol_rejected() {
        let text = "m\tconsonant\tplace=bilabial;manner=nasal;voicing=voiced;aspiration=neutral\n\
                    m\tconsonant\tplace=bilabial;manner=nasal;voicing=voiced;aspiration=neutral";
        let err = parse_inventory(text, Language::English).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn class_feature_group_mismatch_rejected() {
        let text = "x\tconsonant\theight=high;frontness=front;rounding=unrounded";
        let err = parse_inventory(text, Language::English).unwrap_err();
        assert!(err.to_string().contains("consonant group"), "{err}");
    }

    #[test]
    fn inline_comment_becomes_onset_note() {
        let text = "k\tconsonant\tplace=velar;manner=plosive;voicing=voiceless;aspiration=aspirated\t# aspirated in syllable-onset";
        let inv = parse_inventory(text, Language::English).unwrap();
        assert_eq!(
            inv.phonemes[0].onset_note.as_deref(),
            Some("aspirated in syllable-onset")
        );
        // note survives a round trip
        let round = parse_inventory(&serialize_inventory(&inv), Language::English).unwrap();
        assert_eq!(round.phonemes, inv.phonemes);
    }

    #[test]
    fn matching_nasals_tie() {
        let en = consonant(
            "m",
            Language::English,
            Place::Bilabial,
            Manner::Nasal,
            Voicing::Voiced,
            Aspiration::Neutral,
        );
        let ko = consonant(
            "m",
            Language::Korean,
            Place::Bilabial,
            Manner::Nasal,
            Voicing::Voiced,
            Aspiration::Neutral,
        );
        assert!(features_match(&en, &ko));
        assert!(features_match(&en, &en), "reflexive");
    }

    #[test]
    fn place_mismatch_blocks_match() {
        let th = consonant(
            "θ",
            Language::English,
            Place::Dental,
            Manner::Fricative,
            Voicing::Voiceless,
            Aspiration::Neutral,
        );
        let s = consonant(
            "s",
            Language::Korean,
            Place::Alveolar,
            Manner::Fricative,
            Voicing::Voiceless,
            Aspiration::Neutral,
        );
        assert!(!features_match(&th, &s));
    }

    #[test]
    fn unspecified_tenseness_is_wildcard() {
        let en = vowel(
            "i",
            Language::English,
            Height::High,
            Frontness::Front,
            Rounding::Unrounded,
            Tenseness::Tense,
        );
        let ko = vowel(
            "i",
            Language::Korean,
            Height::High,
            Frontness::Front,
            Rounding::Unrounded,
            Tenseness::Unspecified,
        );
        assert!(features_match(&en, &ko));
        assert!(features_match(&ko, &en));
        let lax = vowel(
            "ɪ",
            Language::English,
            Height::High,
            Frontness::Front,
            Rounding::Unrounded,
            Tenseness::Lax,
        );
        assert!(!features_match(&en, &lax), "specified tenseness is exact");
    }

    #[test]
    fn consonant_never_matches_vowel() {
        let c = consonant(
            "m",
            Language::English,
            Place::Bilabial,
            Manner::Nasal,
            Voicing::Voiced,
            Aspiration::Neutral,
        );
        let v = vowel(
            "i",
            Language::English,
            Height::High,
            Frontness::Front,
            Rounding::Unrounded,
            Tenseness::Tense,
        );
        assert!(!features_match(&c, &v));
    }

    #[test]
    fn tie_self_ties_everything() {
        let inv = Inventory {
            language: Language::English,
            phonemes: vec![
                consonant(
                    "m",
                    Language::English,
                    Place::Bilabial,
                    Manner::Nasal,
                    Voicing::Voiced,
                    Aspiration::Neutral,
                ),
                vowel(
                    "i",
                    Language::English,
                    Height::High,
                    Frontness::Front,
                    Rounding::Unrounded,
                    Tenseness::Tense,
                ),
            ],
        };
        let u = tie_inventories(&inv, &inv).unwrap();
        assert_eq!(u.speech_count(), inv.len());
        assert_eq!(u.ties().count(), 0, "all ties are identity");
        assert_eq!(u.tie_map.len(), 2);
    }

    #[test]
    fn ambiguous_tie_reports_candidates() {
        let l1 = Inventory {
            language: Language::English,
            phonemes: vec![
                vowel(
                    "i",
                    Language::English,
                    Height::High,
                    Frontness::Front,
                    Rounding::Unrounded,
                    Tenseness::Tense,
                ),
                vowel(
                    "ɪ",
                    Language::English,
                    Height::High,
                    Frontness::Front,
                    Rounding::Unrounded,
                    Tenseness::Lax,
                ),
            ],
        };
        let l2 = Inventory {
            language: Language::Korean,
            phonemes: vec![vowel(
                "y",
                Language::Korean,
                Height::High,
                Frontness::Front,
                Rounding::Unrounded,
                Tenseness::Unspecified,
            )],
        };
        let err = tie_inventories(&l1, &l2).unwrap_err();
        match err {
            Error::AmbiguousTie { symbol, candidates } => {
                assert_eq!(symbol, "y");
                assert_eq!(candidates, vec!["i".to_string(), "ɪ".to_string()]);
            }
            other => panic!("expected ambiguous tie, got {other}"),
        }
    }

    #[test]
    fn untied_phoneme_appended_and_mapped_to_itself() {
        let l1 = Inventory {
            language: Language::English,
            phonemes: vec![consonant(
                "m",
                Language::English,
                Place::Bilabial,
                Manner::Nasal,
                Voicing::Voiced,
                Aspiration::Neutral,
            )],
        };
        let l2 = Inventory {
            language: Language::Korean,
            phonemes: vec![consonant(
                "ɾ",
                Language::Korean,
                Place::Alveolar,
                Manner::Flap,
                Voicing::Voiced,
                Aspiration::Neutral,
            )],
        };
        let u = tie_inventories(&l1, &l2).unwrap();
        assert_eq!(u.speech_count(), 2);
        assert_eq!(u.tie_map.get("ɾ").map(String::as_str), Some("ɾ"));
        assert!(u.phonemes[1].symbol == "ɾ", "L2 appended after L1");
    }
}
