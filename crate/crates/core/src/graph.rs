//! Numerator/denominator graph compilation over HMM state classes.
//!
//! Arc labels of a compiled graph are 1-based pdf-class ids (0 stays
//! reserved). In left-biphone mode a pdf is the pair (left context,
//! phone); contexts are the P phonemes plus a boundary context, giving
//! P × (P + 1) classes. Every non-start state carries a self-loop on its
//! arrival pdf, the 1-state HMM topology that lets alignment spread a
//! phone over any number of frames.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::symbols::Label;
use crate::wfst::{self, Arc, Fst, Semiring};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    Monophone,
    LeftBiphone,
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextMode::Monophone => "monophone",
            ContextMode::LeftBiphone => "left_biphone",
        })
    }
}

impl std::str::FromStr for ContextMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monophone" => Ok(ContextMode::Monophone),
            "left_biphone" => Ok(ContextMode::LeftBiphone),
            other => Err(Error::validation(format!("unknown context mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextConfig {
    pub mode: ContextMode,
    /// Number of phonemes including silence.
    pub num_phonemes: usize,
}

/// Left context of an arc: the utterance boundary or a phoneme index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LeftContext {
    Boundary,
    Phone(usize),
}

impl ContextConfig {
    pub fn new(mode: ContextMode, num_phonemes: usize) -> Self {
        ContextConfig {
            mode,
            num_phonemes,
        }
    }

    /// Total number of pdf classes.
    pub fn num_pdfs(&self) -> usize {
        match self.mode {
            ContextMode::Monophone => self.num_phonemes,
            ContextMode::LeftBiphone => self.num_phonemes * (self.num_phonemes + 1),
        }
    }

    /// 1-based pdf id of a phone in context; bijective over its domain.
    pub fn pdf_id(&self, left: LeftContext, phone: usize) -> Result<Label> {
        let p = self.num_phonemes;
        if phone >= p {
            return Err(Error::validation(format!(
                "phone index {phone} out of range (P = {p})"
            )));
        }
        let id = match self.mode {
            ContextMode::Monophone => phone + 1,
            ContextMode::LeftBiphone => {
                let left_index = match left {
                    LeftContext::Boundary => 0,
                    LeftContext::Phone(l) => {
                        if l >= p {
                            return Err(Error::validation(format!(
                                "left phone index {l} out of range (P = {p})"
                            )));
                        }
                        l + 1
                    }
                };
                left_index * p + phone + 1
            }
        };
        Ok(id as Label)
    }

    /// Right phone of a pdf id (inverse of the phone component).
    pub fn pdf_phone(&self, pdf: Label) -> Result<usize> {
        let id = pdf as usize;
        if id == 0 || id > self.num_pdfs() {
            return Err(Error::PdfOutOfRange {
                pdf,
                num_pdfs: self.num_pdfs(),
            });
        }
        Ok((id - 1) % self.num_phonemes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Numerator,
    Denominator,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Numerator => "numerator",
            GraphKind::Denominator => "denominator",
        })
    }
}

/// Epsilon-free time-synchronous graph with 1-based pdf arc labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGraph<F: Real> {
    pub fst: Fst<F>,
    pub kind: GraphKind,
    pub context: ContextConfig,
}

impl<F: Real> CompiledGraph<F> {
    /// Arcs whose source and destination coincide.
    pub fn num_self_loops(&self) -> usize {
        self.fst
            .states()
            .map(|q| {
                self.fst
                    .arcs(q)
                    .iter()
                    .filter(|a| a.nextstate == q)
                    .count()
            })
            .sum()
    }
}

/// Numerator compilation: relabels an epsilon-free acyclic phoneme
/// acceptor onto pdf ids, tracking left context by state splitting, and
/// adds a destination self-loop per arc with the arrival pdf.
pub fn compile_numerator<F: Real>(
    utterance: &Fst<F>,
    cfg: ContextConfig,
) -> Result<CompiledGraph<F>> {
    if utterance.has_epsilon() {
        return Err(Error::validation("numerator input must be epsilon-free"));
    }
    if !utterance.is_acyclic(false) {
        return Err(Error::Cyclic("numerator input must be acyclic".into()));
    }
    let semiring = utterance.semiring();
    let mut out = Fst::new(semiring);

    // split states on (source state, arrival pdf); the start has no arrival
    type Key = (usize, Option<Label>);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut queue: VecDeque<Key> = VecDeque::new();
    let start_key: Key = match utterance.start() {
        Some(s) => (s, None),
        None => return Err(Error::validation("numerator input has no start state")),
    };
    let start = out.add_state();
    out.set_start(start);
    index.insert(start_key, start);
    queue.push_back(start_key);

    while let Some(key) = queue.pop_front() {
        let (q, arrival) = key;
        let cur = index[&key];
        // self-loop on the arrival pdf
        if let Some(pdf) = arrival {
            out.add_arc(cur, Arc::new(pdf, pdf, semiring.one(), cur));
        }
        let left = match arrival {
            None => LeftContext::Boundary,
            Some(pdf) => LeftContext::Phone(cfg.pdf_phone(pdf)?),
        };
        for arc in utterance.arcs(q) {
            let phone = arc.ilabel as usize;
            if phone == 0 || phone > cfg.num_phonemes {
                return Err(Error::validation(format!(
                    "utterance label {phone} outside the phoneme id range"
                )));
            }
            let pdf = cfg.pdf_id(left, phone - 1)?;
            let next_key: Key = (arc.nextstate, Some(pdf));
            let dst = *index.entry(next_key).or_insert_with(|| {
                queue.push_back(next_key);
                out.add_state()
            });
            out.add_arc(cur, Arc::new(pdf, pdf, arc.weight, dst));
        }
        if let Some(w) = utterance.final_weight(q) {
            out.set_final(cur, w);
        }
    }

    Ok(CompiledGraph {
        fst: out.connect(),
        kind: GraphKind::Numerator,
        context: cfg,
    })
}

/// Add-k–smoothed phone bigram over phoneme indices `0..P`, with the
/// utterance boundary as history 0 and an explicit end-of-sequence event.
#[derive(Debug, Clone)]
pub struct PhoneBigramLm {
    pub num_phonemes: usize,
    pub add_k: f64,
    /// counts[h][e]: history 0 is the boundary, h = phone + 1 otherwise;
    /// event P is end-of-sequence, e < P is the next phone.
    counts: Vec<Vec<u64>>,
}

impl PhoneBigramLm {
    /// Uniform model (all counts zero, smoothing only).
    pub fn uniform(num_phonemes: usize, add_k: f64) -> Result<Self> {
        if add_k <= 0.0 {
            return Err(Error::validation("add_k must be positive"));
        }
        Ok(PhoneBigramLm {
            num_phonemes,
            add_k,
            counts: vec![vec![0; num_phonemes + 1]; num_phonemes + 1],
        })
    }

    /// log p(next | history); `next = P` is end-of-sequence.
    pub fn log_prob(&self, history: LeftContext, next: usize) -> f64 {
        let h = match history {
            LeftContext::Boundary => 0,
            LeftContext::Phone(l) => l + 1,
        };
        let p = self.num_phonemes;
        let row = &self.counts[h];
        let total: u64 = row.iter().sum();
        let num = row[next] as f64 + self.add_k;
        let den = total as f64 + self.add_k * (p as f64 + 1.0);
        (num / den).ln()
    }

    /// log probability of a whole sequence, boundary-to-end.
    pub fn sequence_log_prob(&self, seq: &[usize]) -> f64 {
        let mut history = LeftContext::Boundary;
        let mut lp = 0.0;
        for &phone in seq {
            lp += self.log_prob(history, phone);
            history = LeftContext::Phone(phone);
        }
        lp + self.log_prob(history, self.num_phonemes)
    }
}

/// Estimates the bigram from a corpus of phoneme-index sequences.
pub fn estimate_phone_bigram(
    corpus: &[Vec<usize>],
    num_phonemes: usize,
    add_k: f64,
) -> Result<PhoneBigramLm> {
    if corpus.is_empty() {
        return Err(Error::validation("empty bigram training corpus"));
    }
    let mut lm = PhoneBigramLm::uniform(num_phonemes, add_k)?;
    for seq in corpus {
        let mut h = 0usize;
        for &phone in seq {
            if phone >= num_phonemes {
                return Err(Error::validation(format!(
                    "phone index {phone} out of range (P = {num_phonemes})"
                )));
            }
            lm.counts[h][phone] += 1;
            h = phone + 1;
        }
        lm.counts[h][num_phonemes] += 1;
    }
    Ok(lm)
}

/// Shared state layout for the two denominator builders: an entry state
/// for the boundary, then one state per (left context, arrived phone).
///
/// An immediate phone repeat (context q, phone q) would land on its own
/// state and be indistinguishable from the HMM self-loop, so each diagonal
/// gets a twin state and repeats alternate between the two. Total states:
/// 1 + P·(P+1) + P = (P+1)².
fn denominator_skeleton<F: Real>(
    cfg: ContextConfig,
    arc_weight: impl Fn(LeftContext, usize) -> F,
    final_weight: impl Fn(Option<usize>) -> F,
) -> Result<Fst<F>> {
    let p = cfg.num_phonemes;
    let semiring = Semiring::Log;
    let mut fst: Fst<F> = Fst::new(semiring);
    let start = fst.add_state();
    fst.set_start(start);
    fst.set_final(start, final_weight(None));

    let pair = |left_index: usize, phone: usize| 1 + left_index * p + phone;
    let twin = |phone: usize| 1 + (p + 1) * p + phone;
    for _ in 0..(p + 1) * p + p {
        fst.add_state();
    }

    for q in 0..p {
        let pdf = cfg.pdf_id(LeftContext::Boundary, q)?;
        let w = arc_weight(LeftContext::Boundary, q);
        fst.add_arc(start, Arc::new(pdf, pdf, w, pair(0, q)));
    }
    // sources with arrival phone a: every pair(·, a) and the twin of a
    for a in 0..p {
        let mut sources: Vec<usize> = (0..=p).map(|l| pair(l, a)).collect();
        sources.push(twin(a));
        for src in sources {
            for q in 0..p {
                let pdf = cfg.pdf_id(LeftContext::Phone(a), q)?;
                let w = arc_weight(LeftContext::Phone(a), q);
                let dst = if q == a {
                    if src == pair(a + 1, a) {
                        twin(a)
                    } else {
                        pair(a + 1, a)
                    }
                } else {
                    pair(a + 1, q)
                };
                fst.add_arc(src, Arc::new(pdf, pdf, w, dst));
            }
        }
    }
    for left_index in 0..=p {
        let context = if left_index == 0 {
            LeftContext::Boundary
        } else {
            LeftContext::Phone(left_index - 1)
        };
        for q in 0..p {
            let state = pair(left_index, q);
            let pdf = cfg.pdf_id(context, q)?;
            fst.add_arc(state, Arc::new(pdf, pdf, semiring.one(), state));
            fst.set_final(state, final_weight(Some(q)));
        }
    }
    for q in 0..p {
        let state = twin(q);
        let pdf = cfg.pdf_id(LeftContext::Phone(q), q)?;
        fst.add_arc(state, Arc::new(pdf, pdf, semiring.one(), state));
        fst.set_final(state, final_weight(Some(q)));
    }
    Ok(fst)
}

/// Denominator graph: every phoneme sequence accepted with its bigram
/// probability as the self-loop-free path weight; end-of-sequence mass
/// sits on the final weights.
pub fn compile_denominator<F: Real>(
    lm: &PhoneBigramLm,
    cfg: ContextConfig,
) -> Result<CompiledGraph<F>> {
    if lm.num_phonemes != cfg.num_phonemes {
        return Err(Error::validation(format!(
            "bigram is over {} phonemes but the context config has {}",
            lm.num_phonemes, cfg.num_phonemes
        )));
    }
    let p = cfg.num_phonemes;
    let fst = denominator_skeleton(
        cfg,
        |context, phone| F::from_f64_lossy(lm.log_prob(context, phone)),
        |arrived| {
            let context = match arrived {
                None => LeftContext::Boundary,
                Some(phone) => LeftContext::Phone(phone),
            };
            F::from_f64_lossy(lm.log_prob(context, p))
        },
    )?;
    Ok(CompiledGraph {
        fst: fst.connect(),
        kind: GraphKind::Denominator,
        context: cfg,
    })
}

/// Unweighted full phone loop: every sequence accepted with weight one.
/// The oracle-friendly `uniform` denominator mode.
pub fn compile_uniform_denominator<F: Real>(cfg: ContextConfig) -> Result<CompiledGraph<F>> {
    let one: F = Semiring::Log.one();
    let fst = denominator_skeleton(cfg, |_, _| one, |_| one)?;
    Ok(CompiledGraph {
        fst: fst.connect(),
        kind: GraphKind::Denominator,
        context: cfg,
    })
}

/// Text form: `#kind`, `#context`, `#pdfs` headers, then the machine in
/// the AT&T format.
pub fn serialize_graph<F: Real>(graph: &CompiledGraph<F>) -> String {
    let mut out = String::new();
    writeln!(out, "#kind {}", graph.kind).unwrap();
    writeln!(out, "#context {}", graph.context.mode).unwrap();
    writeln!(out, "#pdfs {}", graph.context.num_pdfs()).unwrap();
    out.push_str(&wfst::to_text(&graph.fst));
    out
}

pub fn parse_graph<F: Real>(text: &str) -> Result<CompiledGraph<F>> {
    let mut kind = None;
    let mut mode = None;
    let mut pdfs: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("#kind") {
            kind = Some(match rest.trim() {
                "numerator" => GraphKind::Numerator,
                "denominator" => GraphKind::Denominator,
                other => return Err(Error::parse(i + 1, format!("unknown kind '{other}'"))),
            });
        } else if let Some(rest) = line.strip_prefix("#context") {
            mode = Some(rest.trim().parse::<ContextMode>()?);
        } else if let Some(rest) = line.strip_prefix("#pdfs") {
            pdfs = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| Error::parse(i + 1, "bad pdf count"))?,
            );
        }
    }
    let kind = kind.ok_or_else(|| Error::validation("missing #kind header"))?;
    let mode = mode.ok_or_else(|| Error::validation("missing #context header"))?;
    let pdfs = pdfs.ok_or_else(|| Error::validation("missing #pdfs header"))?;
    let num_phonemes = match mode {
        ContextMode::Monophone => pdfs,
        ContextMode::LeftBiphone => (0..=pdfs)
            .find(|p| p * (p + 1) == pdfs)
            .ok_or_else(|| {
                Error::validation(format!("pdf count {pdfs} is not P*(P+1) for any P"))
            })?,
    };
    let fst = wfst::parse_text(text, Semiring::Log)?;
    Ok(CompiledGraph {
        fst,
        kind,
        context: ContextConfig::new(mode, num_phonemes),
    })
}

/// Self-loop-free pdf label sequences of an acyclic-modulo-self-loops
/// graph, the view corresponding 1:1 with the source phoneme paths.
pub fn loop_free_paths<F: Real>(
    graph: &CompiledGraph<F>,
    max_paths: usize,
) -> Result<Vec<(Vec<Label>, F)>> {
    wfst::enumerate_paths(&graph.fst, max_paths, true)
}

/// Total self-loop-free weight a graph assigns to one pdf label sequence
/// (works on cyclic graphs; positions only move forward).
pub fn loop_free_sequence_weight<F: Real>(fst: &Fst<F>, labels: &[Label]) -> F {
    let semiring = fst.semiring();
    let zero: F = semiring.zero();
    let n = fst.num_states();
    let Some(start) = fst.start() else { return zero };
    let mut cur = vec![zero; n];
    cur[start] = semiring.one();
    for &label in labels {
        let mut next = vec![zero; n];
        for q in 0..n {
            if cur[q] == zero {
                continue;
            }
            for arc in fst.arcs(q) {
                if arc.nextstate == q || arc.ilabel != label {
                    continue;
                }
                next[arc.nextstate] = semiring.plus(
                    next[arc.nextstate],
                    semiring.times(cur[q], arc.weight),
                );
            }
        }
        cur = next;
    }
    let mut total = zero;
    for (q, w) in fst.final_states() {
        total = semiring.plus(total, semiring.times(cur[q], w));
    }
    total
}
