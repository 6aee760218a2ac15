//! Desk-scale training demonstration on synthetic Gaussian-cluster data.
//!
//! Each phoneme owns a fixed unit-norm mean direction; an utterance emits
//! noisy copies of its spoken variant's means for a few frames per phone.
//! A small log-softmax model is trained by gradient ascent on the mean
//! LF-MMI objective, once with multi-candidate numerator graphs and once
//! with canonical-only ones, and the two are compared by how often a
//! Viterbi decode against the variant graph recovers the variant that was
//! actually spoken.

use std::collections::BTreeMap;

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{self, CompiledGraph, ContextConfig, ContextMode};
use crate::inventory::UnifiedInventory;
use crate::lexicon::{self, Lexicon};
use crate::lfmmi::{self, AcousticScores};
use crate::num::Real;
use crate::rules::{self, RuleSet};
use crate::symbols::Label;
use crate::wfst::{Arc, Fst};

/// Deterministic stream derivation: one base seed, one label per consumer.
pub fn derive_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub feature_dim: usize,
    pub noise_sigma: f64,
    /// Inclusive frame range sampled uniformly per phone.
    pub frames_per_phone: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            feature_dim: 16,
            noise_sigma: 0.5,
            frames_per_phone: (3, 8),
            seed: 42,
        }
    }
}

/// Phone set of a toy task: the lexicon's symbols plus every rule target
/// reachable from them, ordered by unified-inventory id.
#[derive(Debug, Clone)]
pub struct ToySpace {
    pub phones: Vec<String>,
    pub context: ContextConfig,
    index: BTreeMap<String, usize>,
    /// unified symbol-table label -> local phone label (index + 1)
    relabel: BTreeMap<Label, Label>,
}

impl ToySpace {
    pub fn derive(
        lexicon: &Lexicon,
        rules: &RuleSet,
        inventory: &UnifiedInventory,
    ) -> Result<Self> {
        let table = inventory.symbol_table();
        let mut used: BTreeMap<Label, String> = BTreeMap::new();
        for word in lexicon.words() {
            for pron in lexicon.pronunciations(word).unwrap() {
                for sym in pron {
                    let id = table
                        .id(sym)
                        .ok_or_else(|| Error::validation(format!("unknown symbol '{sym}'")))?;
                    used.insert(id, sym.clone());
                    if let Some(rule) = rules.get(sym) {
                        for alt in &rule.alternatives {
                            for target in alt {
                                let tid = table.id(target).ok_or_else(|| {
                                    Error::validation(format!("unknown symbol '{target}'"))
                                })?;
                                used.insert(tid, target.clone());
                            }
                        }
                    }
                }
            }
        }
        if used.is_empty() {
            return Err(Error::validation("toy phone set is empty"));
        }
        let phones: Vec<String> = used.values().cloned().collect();
        let index: BTreeMap<String, usize> = phones
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let relabel: BTreeMap<Label, Label> = used
            .keys()
            .enumerate()
            .map(|(i, &unified)| (unified, (i + 1) as Label))
            .collect();
        Ok(ToySpace {
            context: ContextConfig::new(ContextMode::Monophone, phones.len()),
            phones,
            index,
            relabel,
        })
    }

    pub fn phone_index(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    /// Maps an acceptor over unified labels into the local label space.
    pub fn relabel_fst<F: Real>(&self, fst: &Fst<F>) -> Result<Fst<F>> {
        let mut out = Fst::new(fst.semiring());
        for _ in 0..fst.num_states() {
            out.add_state();
        }
        if let Some(s) = fst.start() {
            out.set_start(s);
        }
        for q in fst.states() {
            for arc in fst.arcs(q) {
                let label = self.relabel.get(&arc.ilabel).copied().ok_or_else(|| {
                    Error::validation(format!("label {} outside the toy phone set", arc.ilabel))
                })?;
                out.add_arc(q, Arc::new(label, label, arc.weight, arc.nextstate));
            }
            if let Some(w) = fst.final_weight(q) {
                out.set_final(q, w);
            }
        }
        Ok(out)
    }

    /// Unit-norm mean direction per phone, seeded by symbol.
    pub fn phone_means(&self, cfg: &SyntheticConfig) -> Vec<Vec<f64>> {
        let d = cfg.feature_dim;
        let normal = StandardNormal;
        let means: Vec<Vec<f64>> = self
            .phones
            .iter()
            .map(|sym| {
                let mut rng = derive_rng(cfg.seed, &format!("mean/{sym}"));
                let mut v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                for x in &mut v {
                    *x /= norm;
                }
                v
            })
            .collect();
        means
    }
}

// rand_distr is not pulled in; a Box-Muller draw off the uniform stream
// keeps the dependency surface small.
struct StandardNormal;

impl Distribution<f64> for StandardNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticUtterance {
    pub transcript: Vec<String>,
    /// The phoneme sequence actually realized.
    pub spoken: Vec<String>,
    /// T × D row-major features.
    pub features: Vec<f64>,
    pub num_frames: usize,
    /// Frame-level ground truth: index into `spoken`.
    pub alignment: Vec<usize>,
}

/// Samples one spoken variant of a canonical pronunciation: each position
/// keeps its canonical phone with probability `1 - variant_prob`,
/// otherwise one alternative is drawn uniformly.
fn sample_variant(
    pron: &[String],
    rules: &RuleSet,
    variant_prob: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<String> {
    let mut spoken = Vec::with_capacity(pron.len());
    for sym in pron {
        let alternatives = rules.get(sym).map(|r| r.alternatives.as_slice());
        match alternatives {
            Some(alts) if !alts.is_empty() && rng.gen_bool(variant_prob) => {
                let alt = &alts[rng.gen_range(0..alts.len())];
                spoken.extend(alt.iter().cloned());
            }
            _ => spoken.push(sym.clone()),
        }
    }
    if spoken.is_empty() {
        pron.to_vec()
    } else {
        spoken
    }
}

/// Deterministic synthetic corpus: `n` single-word utterances drawn
/// uniformly from the lexicon, with per-position variant sampling.
pub fn generate_corpus(
    lexicon: &Lexicon,
    rules: &RuleSet,
    space: &ToySpace,
    cfg: &SyntheticConfig,
    n: usize,
    variant_prob: f64,
    stream: &str,
) -> Result<Vec<SyntheticUtterance>> {
    if !(0.0..=1.0).contains(&variant_prob) {
        return Err(Error::validation("variant_prob must lie in [0, 1]"));
    }
    let words: Vec<&str> = lexicon.words().collect();
    if words.is_empty() {
        return Err(Error::validation("empty lexicon"));
    }
    let means = space.phone_means(cfg);
    let normal = StandardNormal;
    let mut rng = derive_rng(cfg.seed, stream);
    let (fmin, fmax) = cfg.frames_per_phone;
    if fmin < 1 || fmax < fmin {
        return Err(Error::validation("frames_per_phone range must satisfy 1 <= min <= max"));
    }

    let mut corpus = Vec::with_capacity(n);
    for _ in 0..n {
        let word = words[rng.gen_range(0..words.len())].to_string();
        let prons = lexicon.pronunciations(&word).unwrap();
        let pron = &prons[rng.gen_range(0..prons.len())];
        let spoken = sample_variant(pron, rules, variant_prob, &mut rng);
        let mut features = Vec::new();
        let mut alignment = Vec::new();
        for (pos, sym) in spoken.iter().enumerate() {
            let phone = space
                .phone_index(sym)
                .ok_or_else(|| Error::validation(format!("'{sym}' outside the toy phone set")))?;
            let frames = rng.gen_range(fmin..=fmax);
            for _ in 0..frames {
                for d in 0..cfg.feature_dim {
                    features.push(means[phone][d] + cfg.noise_sigma * normal.sample(&mut rng));
                }
                alignment.push(pos);
            }
        }
        let num_frames = alignment.len();
        corpus.push(SyntheticUtterance {
            transcript: vec![word],
            spoken,
            features,
            num_frames,
            alignment,
        });
    }
    Ok(corpus)
}

/// Log-softmax scorer from D features to C pdf classes: a linear map,
/// optionally through one tanh hidden layer. No output bias: class priors
/// live in the graphs, and a free bias would absorb the numerator/
/// denominator prior gap instead of the features.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel<F: Real> {
    pub input_dim: usize,
    pub num_classes: usize,
    pub hidden: Option<usize>,
    params: Vec<F>,
}

impl<F: Real> ToyModel<F> {
    pub fn new(input_dim: usize, num_classes: usize, hidden: Option<usize>, seed: u64) -> Self {
        let n = Self::param_count(input_dim, num_classes, hidden);
        let mut rng = derive_rng(seed, "model/init");
        let normal = StandardNormal;
        // zero-started output layer: the first updates then depend on the
        // data alone, not on which class won the initialization draw
        let params: Vec<F> = match hidden {
            None => vec![F::zero(); n],
            Some(h) => {
                let scale = 0.5 / (input_dim as f64).sqrt();
                let mut p: Vec<F> = (0..h * input_dim + h)
                    .map(|_| F::from_f64_lossy(scale * normal.sample(&mut rng)))
                    .collect();
                p.resize(n, F::zero());
                p
            }
        };
        ToyModel {
            input_dim,
            num_classes,
            hidden,
            params,
        }
    }

    fn param_count(d: usize, c: usize, hidden: Option<usize>) -> usize {
        match hidden {
            None => c * d,
            Some(h) => h * d + h + c * h,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    /// Log-softmax scores for a T × D feature matrix.
    pub fn score_frames(&self, features: &[f64], num_frames: usize) -> AcousticScores<F> {
        let d = self.input_dim;
        let c = self.num_classes;
        let mut data = Vec::with_capacity(num_frames * c);
        for t in 0..num_frames {
            let x = &features[t * d..(t + 1) * d];
            let logits = self.logits(x);
            let rowmax = logits
                .iter()
                .cloned()
                .fold(F::neg_infinity(), F::max);
            let logsum = rowmax
                + logits
                    .iter()
                    .map(|&z| (z - rowmax).exp())
                    .sum::<F>()
                    .ln();
            for &z in &logits {
                data.push(z - logsum);
            }
        }
        AcousticScores::new(num_frames, c, data).expect("model scores are finite")
    }

    fn logits(&self, x: &[f64]) -> Vec<F> {
        let d = self.input_dim;
        let c = self.num_classes;
        match self.hidden {
            None => {
                let w = &self.params;
                (0..c)
                    .map(|j| {
                        let mut z = F::zero();
                        for (k, &xv) in x.iter().enumerate() {
                            z = z + w[j * d + k] * F::from_f64_lossy(xv);
                        }
                        z
                    })
                    .collect()
            }
            Some(h) => {
                let (w1, b1, w2) = self.mlp_slices(h);
                let hid: Vec<F> = (0..h)
                    .map(|j| {
                        let mut z = b1[j];
                        for (k, &xv) in x.iter().enumerate() {
                            z = z + w1[j * d + k] * F::from_f64_lossy(xv);
                        }
                        z.tanh()
                    })
                    .collect();
                (0..c)
                    .map(|j| {
                        let mut z = F::zero();
                        for (k, &hv) in hid.iter().enumerate() {
                            z = z + w2[j * h + k] * hv;
                        }
                        z
                    })
                    .collect()
            }
        }
    }

    fn mlp_slices(&self, h: usize) -> (&[F], &[F], &[F]) {
        let d = self.input_dim;
        let c = self.num_classes;
        let mut off = 0;
        let w1 = &self.params[off..off + h * d];
        off += h * d;
        let b1 = &self.params[off..off + h];
        off += h;
        let w2 = &self.params[off..off + c * h];
        (w1, b1, w2)
    }

    /// Accumulates the parameter gradient of an objective whose gradient
    /// with respect to the log-softmax scores is `score_grad` (T × C).
    pub fn accumulate_param_grad(
        &self,
        features: &[f64],
        num_frames: usize,
        scores: &AcousticScores<F>,
        score_grad: &[F],
        out: &mut [F],
    ) {
        let d = self.input_dim;
        let c = self.num_classes;
        for t in 0..num_frames {
            let x = &features[t * d..(t + 1) * d];
            // d objective / d logit_j = g_j - softmax_j * sum(g)
            let g = &score_grad[t * c..(t + 1) * c];
            let gsum: F = g.iter().cloned().sum();
            let dz: Vec<F> = (0..c)
                .map(|j| g[j] - scores.get(t, j).exp() * gsum)
                .collect();
            match self.hidden {
                None => {
                    for j in 0..c {
                        for (k, &xv) in x.iter().enumerate() {
                            out[j * d + k] = out[j * d + k] + dz[j] * F::from_f64_lossy(xv);
                        }
                    }
                }
                Some(h) => {
                    let (w1, b1, w2) = self.mlp_slices(h);
                    let pre: Vec<F> = (0..h)
                        .map(|j| {
                            let mut z = b1[j];
                            for (k, &xv) in x.iter().enumerate() {
                                z = z + w1[j * d + k] * F::from_f64_lossy(xv);
                            }
                            z
                        })
                        .collect();
                    let hid: Vec<F> = pre.iter().map(|&z| z.tanh()).collect();
                    let mut dh = vec![F::zero(); h];
                    let w1_len = h * d;
                    for j in 0..c {
                        for k in 0..h {
                            out[w1_len + h + j * h + k] =
                                out[w1_len + h + j * h + k] + dz[j] * hid[k];
                            dh[k] = dh[k] + dz[j] * w2[j * h + k];
                        }
                    }
                    for k in 0..h {
                        let dpre = dh[k] * (F::one() - hid[k] * hid[k]);
                        for (m, &xv) in x.iter().enumerate() {
                            out[k * d + m] = out[k * d + m] + dpre * F::from_f64_lossy(xv);
                        }
                        out[w1_len + k] = out[w1_len + k] + dpre;
                    }
                }
            }
        }
    }

    /// Versioned little-endian dump, magic `XFLT1`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"XFLT1");
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&(self.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_classes as u32).to_le_bytes());
        out.extend_from_slice(&(self.hidden.unwrap_or(0) as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_f64_lossy().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::validation("malformed model dump");
        if bytes.len() < 5 + 4 * 4 + 8 || &bytes[..5] != b"XFLT1" {
            return Err(bad());
        }
        let u32_at = |off: usize| -> u32 {
            u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap())
        };
        if u32_at(5) != 1 {
            return Err(Error::validation("unsupported model version"));
        }
        let input_dim = u32_at(9) as usize;
        let num_classes = u32_at(13) as usize;
        let hidden = match u32_at(17) as usize {
            0 => None,
            h => Some(h),
        };
        let count = u64::from_le_bytes(bytes[21..29].try_into().map_err(|_| bad())?) as usize;
        if count != Self::param_count(input_dim, num_classes, hidden)
            || bytes.len() != 29 + 8 * count
        {
            return Err(bad());
        }
        let params: Vec<F> = (0..count)
            .map(|i| {
                let off = 29 + 8 * i;
                F::from_f64_lossy(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()))
            })
            .collect();
        Ok(ToyModel {
            input_dim,
            num_classes,
            hidden,
            params,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            learning_rate: 1.0,
            epochs: 40,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<F: Real> {
    pub model: ToyModel<F>,
    /// Mean −F on the training set: entry 0 from a full pass before any
    /// update, then one running mean per epoch (objectives as each batch
    /// saw them before its update).
    pub loss_trace: Vec<f64>,
    pub skipped: usize,
}

fn mean_objective<F: Real>(
    model: &ToyModel<F>,
    corpus: &[SyntheticUtterance],
    numerators: &[CompiledGraph<F>],
    den: &CompiledGraph<F>,
) -> (f64, usize) {
    let mut total = 0.0;
    let mut used = 0;
    for (utt, num) in corpus.iter().zip(numerators) {
        let scores = model.score_frames(&utt.features, utt.num_frames);
        match lfmmi::lfmmi(num, den, &scores) {
            Ok(r) => {
                total += r.objective.to_f64_lossy();
                used += 1;
            }
            Err(Error::NoAcceptingPath(_)) => {}
            Err(_) => {}
        }
    }
    if used == 0 {
        (f64::NAN, corpus.len())
    } else {
        (total / used as f64, corpus.len() - used)
    }
}

/// Gradient ascent on the mean LF-MMI objective. Utterances whose
/// numerator admits no length-T path are skipped and counted. Batch
/// accumulation follows utterance index order, so runs are reproducible.
pub fn train<F: Real>(
    mut model: ToyModel<F>,
    corpus: &[SyntheticUtterance],
    numerators: &[CompiledGraph<F>],
    den: &CompiledGraph<F>,
    opts: &TrainOptions,
) -> Result<TrainReport<F>> {
    if corpus.len() != numerators.len() {
        return Err(Error::validation(
            "corpus and numerator graphs must align one to one",
        ));
    }
    if opts.batch_size == 0 {
        return Err(Error::validation("batch size must be positive"));
    }
    let mut loss_trace = Vec::with_capacity(opts.epochs + 1);
    let (initial, mut skipped) = mean_objective(&model, corpus, numerators, den);
    loss_trace.push(-initial);

    let indices: Vec<usize> = (0..corpus.len()).collect();
    for _ in 0..opts.epochs {
        let mut epoch_obj = 0.0f64;
        let mut epoch_used = 0usize;
        let mut epoch_skipped = 0usize;
        for batch in indices.chunks(opts.batch_size) {
            let mut grad = vec![F::zero(); model.num_params()];
            let mut used = 0usize;
            for &i in batch {
                let utt = &corpus[i];
                let scores = model.score_frames(&utt.features, utt.num_frames);
                match lfmmi::lfmmi(&numerators[i], den, &scores) {
                    Ok(r) => {
                        model.accumulate_param_grad(
                            &utt.features,
                            utt.num_frames,
                            &scores,
                            &r.gradient,
                            &mut grad,
                        );
                        epoch_obj += r.objective.to_f64_lossy();
                        used += 1;
                    }
                    Err(Error::NoAcceptingPath(_)) => {
                        epoch_skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            epoch_used += used;
            if used == 0 {
                continue;
            }
            let step = F::from_f64_lossy(opts.learning_rate / used as f64);
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p = *p + step * *g;
            }
        }
        skipped = epoch_skipped;
        loss_trace.push(if epoch_used == 0 {
            f64::NAN
        } else {
            -epoch_obj / epoch_used as f64
        });
    }
    Ok(TrainReport {
        model,
        loss_trace,
        skipped,
    })
}

/// Viterbi decode of an utterance against a compiled graph: best
/// time-synchronous path, self-loops collapsed, pdfs mapped back to
/// phone symbols.
pub fn decode_viterbi<F: Real>(
    model: &ToyModel<F>,
    utterance: &SyntheticUtterance,
    graph: &CompiledGraph<F>,
    space: &ToySpace,
) -> Result<Vec<String>> {
    let scores = model.score_frames(&utterance.features, utterance.num_frames);
    let (steps, _) = lfmmi::viterbi_path(graph, &scores)?;
    let mut out = Vec::new();
    for step in steps {
        if step.is_self_loop {
            continue;
        }
        let phone = graph.context.pdf_phone(step.pdf)?;
        out.push(space.phones[phone].clone());
    }
    Ok(out)
}

/// Fraction of utterances whose decode equals the spoken variant.
pub fn variant_recovery_rate<F: Real>(
    model: &ToyModel<F>,
    corpus: &[SyntheticUtterance],
    numerators: &[CompiledGraph<F>],
    space: &ToySpace,
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::validation("empty evaluation corpus"));
    }
    let mut hits = 0usize;
    for (utt, num) in corpus.iter().zip(numerators) {
        let decoded = decode_viterbi(model, utt, num, space)?;
        if decoded == utt.spoken {
            hits += 1;
        }
    }
    Ok(hits as f64 / corpus.len() as f64)
}

/// Per-utterance numerator graphs over the toy space. With `multi` the
/// full variant acceptor is compiled; otherwise only the canonical paths.
pub fn build_numerators<F: Real>(
    corpus: &[SyntheticUtterance],
    lexicon: &Lexicon,
    rules: &RuleSet,
    inventory: &UnifiedInventory,
    space: &ToySpace,
    multi: bool,
) -> Result<Vec<CompiledGraph<F>>> {
    let empty = RuleSet::new();
    let effective: &RuleSet = if multi { rules } else { &empty };
    // cache per transcript; corpora repeat the same few words
    let mut cache: BTreeMap<Vec<String>, CompiledGraph<F>> = BTreeMap::new();
    let mut out = Vec::with_capacity(corpus.len());
    for utt in corpus {
        if let Some(g) = cache.get(&utt.transcript) {
            out.push(g.clone());
            continue;
        }
        let fsa = lexicon::build_utterance_fsa::<F>(
            &utt.transcript,
            lexicon,
            effective,
            inventory,
            false,
        )?;
        let local = space.relabel_fst(&fsa.fst)?;
        let g = graph::compile_numerator(&local, space.context)?;
        cache.insert(utt.transcript.clone(), g.clone());
        out.push(g);
    }
    Ok(out)
}

/// Shared denominator: add-k bigram over every variant sequence of every
/// lexicon word, compiled over the toy space.
pub fn build_denominator<F: Real>(
    lexicon: &Lexicon,
    rules: &RuleSet,
    inventory: &UnifiedInventory,
    space: &ToySpace,
    add_k: f64,
) -> Result<CompiledGraph<F>> {
    let mut seqs: Vec<Vec<usize>> = Vec::new();
    for word in lexicon.words() {
        for pron in lexicon.pronunciations(word).unwrap() {
            let vs = rules::expand_pronunciation(word, pron, rules, inventory)?;
            for v in vs.variants {
                let seq: Vec<usize> = v
                    .iter()
                    .map(|s| {
                        space
                            .phone_index(s)
                            .ok_or_else(|| Error::validation(format!("'{s}' outside toy space")))
                    })
                    .collect::<Result<_>>()?;
                seqs.push(seq);
            }
        }
    }
    let lm = graph::estimate_phone_bigram(&seqs, space.phones.len(), add_k)?;
    graph::compile_denominator(&lm, space.context)
}

#[derive(Debug, Clone)]
pub struct ToyOptions {
    pub seed: u64,
    pub variant_prob: f64,
    pub train_n: usize,
    pub test_n: usize,
    pub synth: SyntheticConfig,
    pub train: TrainOptions,
    pub hidden: Option<usize>,
    pub add_k: f64,
}

impl Default for ToyOptions {
    fn default() -> Self {
        ToyOptions {
            seed: 42,
            variant_prob: 0.7,
            train_n: 500,
            test_n: 200,
            synth: SyntheticConfig::default(),
            train: TrainOptions::default(),
            hidden: None,
            add_k: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionOutcome {
    pub loss_trace: Vec<f64>,
    pub recovery: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct ToyOutcome<F: Real> {
    pub multi: ConditionOutcome,
    pub canonical: ConditionOutcome,
    pub multi_model: ToyModel<F>,
    /// Mean over test utterances of 1 / |variant set|.
    pub chance_rate: f64,
    /// Binomial standard deviation of the chance rate estimate.
    pub chance_sigma: f64,
    pub phones: Vec<String>,
}

/// Full toy comparison: one corpus, one denominator, two training
/// conditions (multi-candidate vs canonical-only numerators), evaluated
/// by variant recovery on held-out data.
pub fn run_toy<F: Real>(
    lexicon: &Lexicon,
    rules: &RuleSet,
    inventory: &UnifiedInventory,
    opts: &ToyOptions,
) -> Result<ToyOutcome<F>> {
    let mut synth = opts.synth.clone();
    synth.seed = opts.seed;
    let space = ToySpace::derive(lexicon, rules, inventory)?;
    let train_corpus = generate_corpus(
        lexicon,
        rules,
        &space,
        &synth,
        opts.train_n,
        opts.variant_prob,
        "corpus/train",
    )?;
    let test_corpus = generate_corpus(
        lexicon,
        rules,
        &space,
        &synth,
        opts.test_n,
        opts.variant_prob,
        "corpus/test",
    )?;

    let den = build_denominator::<F>(lexicon, rules, inventory, &space, opts.add_k)?;
    let num_multi_train =
        build_numerators::<F>(&train_corpus, lexicon, rules, inventory, &space, true)?;
    let num_canon_train =
        build_numerators::<F>(&train_corpus, lexicon, rules, inventory, &space, false)?;
    let num_multi_test =
        build_numerators::<F>(&test_corpus, lexicon, rules, inventory, &space, true)?;

    let d = synth.feature_dim;
    let c = space.context.num_pdfs();
    let init = ToyModel::<F>::new(d, c, opts.hidden, opts.seed);

    let multi_report = train(init.clone(), &train_corpus, &num_multi_train, &den, &opts.train)?;
    let canon_report = train(init, &train_corpus, &num_canon_train, &den, &opts.train)?;

    let multi_recovery =
        variant_recovery_rate(&multi_report.model, &test_corpus, &num_multi_test, &space)?;
    let canon_recovery =
        variant_recovery_rate(&canon_report.model, &test_corpus, &num_multi_test, &space)?;

    let mut chance = 0.0;
    for utt in &test_corpus {
        let mut count = 0usize;
        let word = &utt.transcript[0];
        for pron in lexicon.pronunciations(word).unwrap() {
            count += rules::variant_count(pron, rules, inventory)?;
        }
        chance += 1.0 / count as f64;
    }
    let chance_rate = chance / test_corpus.len() as f64;
    let chance_sigma =
        (chance_rate * (1.0 - chance_rate) / test_corpus.len() as f64).sqrt();

    Ok(ToyOutcome {
        multi: ConditionOutcome {
            loss_trace: multi_report.loss_trace,
            recovery: multi_recovery,
            skipped: multi_report.skipped,
        },
        canonical: ConditionOutcome {
            loss_trace: canon_report.loss_trace,
            recovery: canon_recovery,
            skipped: canon_report.skipped,
        },
        multi_model: multi_report.model,
        chance_rate,
        chance_sigma,
        phones: space.phones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{parse_inventory, tie_inventories, Language};
    use crate::rules::parse_rules;

    fn load_unified() -> UnifiedInventory {
        let en = parse_inventory(include_str!("../../../data/english.inv"), Language::English)
            .unwrap();
        let ko = parse_inventory(include_str!("../../../data/korean.inv"), Language::Korean)
            .unwrap();
        tie_inventories(&en, &ko).unwrap()
    }

    fn toy_setup() -> (UnifiedInventory, Lexicon, RuleSet) {
        let inv = load_unified();
        let lex = lexicon::parse_lexicon("THANK  TH AE1 NG K\n", &inv).unwrap();
        let rules = parse_rules("θ\ts|t\næ\te\n", &inv).unwrap();
        (inv, lex, rules)
    }

    #[test]
    fn toy_space_covers_lexicon_and_targets() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        // θ æ ŋ k plus targets s t e
        assert_eq!(space.phones.len(), 7);
        for sym in ["θ", "æ", "ŋ", "k", "s", "t", "e"] {
            assert!(space.phone_index(sym).is_some(), "{sym}");
        }
    }

    #[test]
    fn phone_means_are_unit_norm_and_distinct() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig::default();
        let means = space.phone_means(&cfg);
        for (i, m) in means.iter().enumerate() {
            let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            for other in means.iter().skip(i + 1) {
                let dot: f64 = m.iter().zip(other).map(|(a, b)| a * b).sum();
                assert!(dot < 0.99, "means {i} nearly collinear");
            }
        }
    }

    #[test]
    fn zero_variant_prob_always_speaks_canonical() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            seed: 7,
            ..Default::default()
        };
        let corpus =
            generate_corpus(&lex, &rules, &space, &cfg, 50, 0.0, "corpus/test").unwrap();
        for utt in corpus {
            assert_eq!(utt.spoken, vec!["θ", "æ", "ŋ", "k"]);
        }
    }

    #[test]
    fn forced_variant_prob_never_speaks_rule_sources() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            seed: 8,
            ..Default::default()
        };
        let corpus =
            generate_corpus(&lex, &rules, &space, &cfg, 50, 1.0, "corpus/test").unwrap();
        for utt in corpus {
            assert!(["s", "t"].contains(&utt.spoken[0].as_str()), "{:?}", utt.spoken);
            assert_eq!(utt.spoken[1], "e");
            assert_eq!(&utt.spoken[2..], ["ŋ", "k"]);
        }
    }

    #[test]
    fn variant_frequencies_match_sampling_law() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            seed: 9,
            frames_per_phone: (1, 1),
            ..Default::default()
        };
        let n = 10_000;
        let vp = 0.4;
        let corpus = generate_corpus(&lex, &rules, &space, &cfg, n, vp, "corpus/law").unwrap();
        // at the θ position: canonical with p = 0.6, s and t at 0.2 each
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for utt in &corpus {
            *counts.entry(utt.spoken[0].as_str()).or_default() += 1;
        }
        let sigma = |p: f64| 3.0 * (p * (1.0 - p) * n as f64).sqrt();
        let near = |got: usize, p: f64| {
            let want = p * n as f64;
            (got as f64 - want).abs() <= sigma(p)
        };
        assert!(near(counts["θ"], 1.0 - vp), "{counts:?}");
        assert!(near(counts["s"], vp / 2.0), "{counts:?}");
        assert!(near(counts["t"], vp / 2.0), "{counts:?}");
    }

    #[test]
    fn corpus_generation_is_deterministic() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            seed: 10,
            ..Default::default()
        };
        let a = generate_corpus(&lex, &rules, &space, &cfg, 20, 0.5, "corpus/train").unwrap();
        let b = generate_corpus(&lex, &rules, &space, &cfg, 20, 0.5, "corpus/train").unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.spoken, y.spoken);
            assert_eq!(x.features, y.features);
            assert_eq!(x.alignment, y.alignment);
        }
    }

    #[test]
    fn model_rows_are_normalized_log_probs() {
        let model: ToyModel<f64> = ToyModel::new(4, 3, None, 1);
        let features: Vec<f64> = (0..8).map(|i| i as f64 * 0.3 - 1.0).collect();
        let scores = model.score_frames(&features, 2);
        for row in scores.rows() {
            let logsum = crate::num::log_sum(row);
            assert!(logsum.abs() < 1e-6);
        }
        let hidden: ToyModel<f64> = ToyModel::new(4, 3, Some(5), 1);
        let scores = hidden.score_frames(&features, 2);
        for row in scores.rows() {
            assert!(crate::num::log_sum(row).abs() < 1e-6);
        }
    }

    #[test]
    fn model_serialization_round_trips() {
        for hidden in [None, Some(6)] {
            let model: ToyModel<f64> = ToyModel::new(5, 4, hidden, 3);
            let bytes = model.to_bytes();
            assert_eq!(&bytes[..5], b"XFLT1");
            let back = ToyModel::<f64>::from_bytes(&bytes).unwrap();
            assert_eq!(back, model);
        }
        assert!(ToyModel::<f64>::from_bytes(b"nope").is_err());
    }

    /// Parameter-space finite differences on a tiny instance.
    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            feature_dim: 3,
            noise_sigma: 0.4,
            frames_per_phone: (1, 2),
            seed: 11,
        };
        let corpus =
            generate_corpus(&lex, &rules, &space, &cfg, 2, 0.5, "corpus/train").unwrap();
        let dens = build_denominator::<f64>(&lex, &rules, &inv, &space, 1.0).unwrap();
        let nums = build_numerators::<f64>(&corpus, &lex, &rules, &inv, &space, true).unwrap();

        for hidden in [None, Some(4)] {
            let model: ToyModel<f64> =
                ToyModel::new(cfg.feature_dim, space.context.num_pdfs(), hidden, 12);
            let objective = |m: &ToyModel<f64>| -> f64 {
                corpus
                    .iter()
                    .zip(&nums)
                    .map(|(u, n)| {
                        let s = m.score_frames(&u.features, u.num_frames);
                        lfmmi::lfmmi(n, &dens, &s).unwrap().objective
                    })
                    .sum()
            };
            let mut analytic = vec![0.0; model.num_params()];
            for (u, n) in corpus.iter().zip(&nums) {
                let s = model.score_frames(&u.features, u.num_frames);
                let r = lfmmi::lfmmi(n, &dens, &s).unwrap();
                model.accumulate_param_grad(
                    &u.features,
                    u.num_frames,
                    &s,
                    &r.gradient,
                    &mut analytic,
                );
            }
            let h = 1e-5;
            let mut max_rel = 0.0f64;
            for i in 0..model.num_params() {
                let mut up = model.clone();
                up.params_mut()[i] += h;
                let mut down = model.clone();
                down.params_mut()[i] -= h;
                let fd = (objective(&up) - objective(&down)) / (2.0 * h);
                let denom = analytic[i].abs().max(1e-3);
                max_rel = max_rel.max((fd - analytic[i]).abs() / denom);
            }
            assert!(max_rel < 1e-3, "hidden {hidden:?}: max rel err {max_rel}");
        }
    }

    #[test]
    fn training_with_identical_graphs_changes_nothing() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            feature_dim: 4,
            seed: 13,
            ..Default::default()
        };
        let corpus =
            generate_corpus(&lex, &rules, &space, &cfg, 4, 0.5, "corpus/train").unwrap();
        let nums = build_numerators::<f64>(&corpus, &lex, &rules, &inv, &space, true).unwrap();
        // numerator doubles as denominator: objective identically zero
        let model: ToyModel<f64> = ToyModel::new(4, space.context.num_pdfs(), None, 2);
        let before = model.params().to_vec();
        for (utt, num) in corpus.iter().zip(&nums) {
            let report = train(
                model.clone(),
                std::slice::from_ref(utt),
                std::slice::from_ref(num),
                num,
                &TrainOptions {
                    epochs: 3,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(report.model.params(), before.as_slice());
            for loss in report.loss_trace {
                assert!(loss.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_utterance_loss_decreases() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            feature_dim: 8,
            seed: 14,
            ..Default::default()
        };
        let corpus =
            generate_corpus(&lex, &rules, &space, &cfg, 1, 0.0, "corpus/train").unwrap();
        let den = build_denominator::<f64>(&lex, &rules, &inv, &space, 1.0).unwrap();
        let nums = build_numerators::<f64>(&corpus, &lex, &rules, &inv, &space, true).unwrap();
        let model: ToyModel<f64> = ToyModel::new(8, space.context.num_pdfs(), None, 3);
        let report = train(
            model,
            &corpus,
            &nums,
            &den,
            &TrainOptions {
                learning_rate: 0.2,
                epochs: 10,
                batch_size: 8,
            },
        )
        .unwrap();
        for w in report.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "loss went up: {:?}", report.loss_trace);
        }
        assert!(report.loss_trace.last().unwrap() < &report.loss_trace[0]);
    }

    #[test]
    fn oracle_scores_decode_to_spoken_variant() {
        let (inv, lex, rules) = toy_setup();
        let space = ToySpace::derive(&lex, &rules, &inv).unwrap();
        let cfg = SyntheticConfig {
            noise_sigma: 0.05,
            seed: 15,
            ..Default::default()
        };
        let corpus =
            generate_corpus(&lex, &rules, &space, &cfg, 10, 0.8, "corpus/test").unwrap();
        let nums = build_numerators::<f64>(&corpus, &lex, &rules, &inv, &space, true).unwrap();
        // hand-built "oracle" model: weight matrix = phone means scaled up,
        // so the true phone wins every frame by a wide margin
        let mut model: ToyModel<f64> =
            ToyModel::new(cfg.feature_dim, space.context.num_pdfs(), None, 16);
        let means = space.phone_means(&cfg);
        {
            let d = cfg.feature_dim;
            let params = model.params_mut();
            for (j, mean) in means.iter().enumerate() {
                for k in 0..d {
                    params[j * d + k] = 10.0 * mean[k];
                }
            }
            for b in params[means.len() * d..].iter_mut() {
                *b = 0.0;
            }
        }
        let rate = variant_recovery_rate(&model, &corpus, &nums, &space).unwrap();
        assert_eq!(rate, 1.0);
        // decoding against the numerator constrains output to the variant set
        for (utt, num) in corpus.iter().zip(&nums) {
            let decoded = decode_viterbi(&model, utt, num, &space).unwrap();
            let vs = rules::expand_pronunciation(
                "THANK",
                &lex.pronunciations("THANK").unwrap()[0],
                &rules,
                &inv,
            )
            .unwrap();
            assert!(vs.variants.contains(&decoded));
        }
    }

    #[test]
    fn untrained_model_recovers_near_chance() {
        let (inv, lex, rules) = toy_setup();
        // restrict to the two-option æ rule so chance is 1/2
        let rules2 = parse_rules("æ\te\n", &inv).unwrap();
        let _ = rules;
        let space = ToySpace::derive(&lex, &rules2, &inv).unwrap();
        let cfg = SyntheticConfig {
            seed: 17,
            ..Default::default()
        };
        let n = 300;
        let corpus =
            generate_corpus(&lex, &rules2, &space, &cfg, n, 0.5, "corpus/test").unwrap();
        let nums = build_numerators::<f64>(&corpus, &lex, &rules2, &inv, &space, true).unwrap();
        let model: ToyModel<f64> =
            ToyModel::new(cfg.feature_dim, space.context.num_pdfs(), None, 18);
        let rate = variant_recovery_rate(&model, &corpus, &nums, &space).unwrap();
        let p = 0.5;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (rate - p).abs() < 4.0 * sigma + 0.05,
            "rate {rate} too far from chance {p}"
        );
    }
}
