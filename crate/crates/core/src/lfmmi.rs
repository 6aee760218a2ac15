//! LF-MMI objective and exact gradients via forward–backward.
//!
//! The objective for one utterance is the log-ratio of the acoustic mass
//! the numerator graph accepts to the mass the denominator graph accepts.
//! Computation is time-synchronous: every frame consumes exactly one arc
//! (self-loops included), so a graph accepts a T-frame utterance through
//! its length-T arc paths. Everything stays in the log domain.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::CompiledGraph;
use crate::num::{log_add, Real};
use crate::symbols::Label;
use crate::wfst::Fst;

/// T × C matrix of per-frame log-scores, row-major; column c scores the
/// pdf with id c + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticScores<F: Real> {
    pub num_frames: usize,
    pub num_pdfs: usize,
    data: Vec<F>,
}

impl<F: Real> AcousticScores<F> {
    pub fn new(num_frames: usize, num_pdfs: usize, data: Vec<F>) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::validation("scores need at least one frame"));
        }
        if data.len() != num_frames * num_pdfs {
            return Err(Error::validation(format!(
                "scores length {} does not match {num_frames} x {num_pdfs}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("scores must be finite"));
        }
        Ok(AcousticScores {
            num_frames,
            num_pdfs,
            data,
        })
    }

    pub fn zeros(num_frames: usize, num_pdfs: usize) -> Self {
        AcousticScores {
            num_frames,
            num_pdfs,
            data: vec![F::zero(); num_frames * num_pdfs],
        }
    }

    #[inline]
    pub fn get(&self, frame: usize, pdf_column: usize) -> F {
        self.data[frame * self.num_pdfs + pdf_column]
    }

    #[inline]
    pub fn set(&mut self, frame: usize, pdf_column: usize, value: F) {
        self.data[frame * self.num_pdfs + pdf_column] = value;
    }

    /// Log-score of a 1-based pdf id at a frame.
    #[inline]
    pub fn score(&self, frame: usize, pdf: Label) -> F {
        self.get(frame, (pdf - 1) as usize)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks(self.num_pdfs)
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    /// TSV form: `T<TAB>C` header then T rows of C log-scores.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}\t{}", self.num_frames, self.num_pdfs).unwrap();
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join("\t")).unwrap();
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty scores file"))?;
        let mut parts = header.split_whitespace();
        let t: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::parse(lineno + 1, "bad frame count"))?;
        let c: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::parse(lineno + 1, "bad pdf count"))?;
        let mut data = Vec::with_capacity(t * c);
        for (lineno, line) in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(lineno + 1, format!("bad score '{tok}'")))?;
                data.push(F::from_f64_lossy(v));
            }
        }
        AcousticScores::new(t, c, data)
    }
}

fn check_pdf_range<F: Real>(fst: &Fst<F>, num_pdfs: usize) -> Result<()> {
    for q in fst.states() {
        for arc in fst.arcs(q) {
            if arc.ilabel == 0 || arc.ilabel as usize > num_pdfs {
                return Err(Error::PdfOutOfRange {
                    pdf: arc.ilabel,
                    num_pdfs,
                });
            }
        }
    }
    Ok(())
}

/// Forward pass: alphas[t][state] for t in 0..=T plus the total log mass
/// (negative infinity when no length-T accepting path exists).
fn forward_pass<F: Real>(fst: &Fst<F>, scores: &AcousticScores<F>) -> (Vec<Vec<F>>, F) {
    let n = fst.num_states();
    let t_max = scores.num_frames;
    let ninf = F::neg_infinity();
    let mut alphas = vec![vec![ninf; n]; t_max + 1];
    let Some(start) = fst.start() else {
        return (alphas, ninf);
    };
    alphas[0][start] = F::zero();
    for t in 0..t_max {
        for q in 0..n {
            let a = alphas[t][q];
            if a == ninf {
                continue;
            }
            for arc in fst.arcs(q) {
                let w = a + arc.weight + scores.score(t, arc.ilabel);
                let cell = &mut alphas[t + 1][arc.nextstate];
                *cell = log_add(*cell, w);
            }
        }
    }
    let mut total = ninf;
    for (q, fw) in fst.final_states() {
        total = log_add(total, alphas[t_max][q] + fw);
    }
    (alphas, total)
}

fn backward_pass<F: Real>(fst: &Fst<F>, scores: &AcousticScores<F>) -> (Vec<Vec<F>>, F) {
    let n = fst.num_states();
    let t_max = scores.num_frames;
    let ninf = F::neg_infinity();
    let mut betas = vec![vec![ninf; n]; t_max + 1];
    for (q, fw) in fst.final_states() {
        betas[t_max][q] = fw;
    }
    for t in (0..t_max).rev() {
        for q in 0..n {
            let mut acc = ninf;
            for arc in fst.arcs(q) {
                let b = betas[t + 1][arc.nextstate];
                if b == ninf {
                    continue;
                }
                acc = log_add(acc, arc.weight + scores.score(t, arc.ilabel) + b);
            }
            betas[t][q] = acc;
        }
    }
    let total = match fst.start() {
        Some(s) => betas[0][s],
        None => ninf,
    };
    (betas, total)
}

/// Log mass of all length-T accepting paths under the scores.
pub fn forward_score<F: Real>(
    graph: &CompiledGraph<F>,
    scores: &AcousticScores<F>,
) -> Result<F> {
    check_pdf_range(&graph.fst, scores.num_pdfs)?;
    let (_, total) = forward_pass(&graph.fst, scores);
    Ok(total)
}

/// T × C posterior occupation probabilities; rows sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancies<F: Real> {
    pub num_frames: usize,
    pub num_pdfs: usize,
    data: Vec<F>,
}

impl<F: Real> Occupancies<F> {
    #[inline]
    pub fn get(&self, frame: usize, pdf_column: usize) -> F {
        self.data[frame * self.num_pdfs + pdf_column]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks(self.num_pdfs)
    }
}

/// Forward–backward: total log mass plus per-frame pdf posteriors.
pub fn forward_backward<F: Real>(
    graph: &CompiledGraph<F>,
    scores: &AcousticScores<F>,
) -> Result<(F, Occupancies<F>)> {
    check_pdf_range(&graph.fst, scores.num_pdfs)?;
    let fst = &graph.fst;
    let t_max = scores.num_frames;
    let c = scores.num_pdfs;
    let ninf = F::neg_infinity();

    let (alphas, total) = forward_pass(fst, scores);
    if total == ninf {
        return Err(Error::NoAcceptingPath(format!(
            "graph accepts no {t_max}-frame path"
        )));
    }
    let (betas, back_total) = backward_pass(fst, scores);
    debug_assert!(
        (total.to_f64_lossy() - back_total.to_f64_lossy()).abs() < 1e-8,
        "forward {total} vs backward {back_total}"
    );

    let mut log_gamma = vec![ninf; t_max * c];
    for t in 0..t_max {
        for q in fst.states() {
            let a = alphas[t][q];
            if a == ninf {
                continue;
            }
            for arc in fst.arcs(q) {
                let b = betas[t + 1][arc.nextstate];
                if b == ninf {
                    continue;
                }
                let mass = a + arc.weight + scores.score(t, arc.ilabel) + b - total;
                let cell = &mut log_gamma[t * c + (arc.ilabel - 1) as usize];
                *cell = log_add(*cell, mass);
            }
        }
    }
    let data: Vec<F> = log_gamma.into_iter().map(|lg| lg.exp()).collect();
    Ok((
        total,
        Occupancies {
            num_frames: t_max,
            num_pdfs: c,
            data,
        },
    ))
}

/// Objective, components, and the exact gradient with respect to the
/// score matrix.
#[derive(Debug, Clone)]
pub struct MmiResult<F: Real> {
    pub objective: F,
    pub num_logprob: F,
    pub den_logprob: F,
    /// T × C row-major; entry (t, c) is ∂objective / ∂scores[t][c],
    /// i.e. numerator minus denominator occupancy.
    pub gradient: Vec<F>,
}

impl<F: Real> MmiResult<F> {
    pub fn gradient_rows(&self, num_pdfs: usize) -> impl Iterator<Item = &[F]> {
        self.gradient.chunks(num_pdfs)
    }
}

/// LF-MMI objective and gradient for one utterance.
pub fn lfmmi<F: Real>(
    num: &CompiledGraph<F>,
    den: &CompiledGraph<F>,
    scores: &AcousticScores<F>,
) -> Result<MmiResult<F>> {
    if num.context != den.context {
        return Err(Error::validation(
            "numerator and denominator must share one pdf space",
        ));
    }
    let (num_logprob, num_occ) = forward_backward(num, scores).map_err(|e| match e {
        Error::NoAcceptingPath(_) => Error::NoAcceptingPath(format!(
            "numerator infeasible: no {}-frame path (utterance too short?)",
            scores.num_frames
        )),
        other => other,
    })?;
    let (den_logprob, den_occ) = forward_backward(den, scores)?;
    let gradient: Vec<F> = num_occ
        .data
        .iter()
        .zip(den_occ.data.iter())
        .map(|(&n, &d)| n - d)
        .collect();
    Ok(MmiResult {
        objective: num_logprob - den_logprob,
        num_logprob,
        den_logprob,
        gradient,
    })
}

/// Central-finite-difference validation of the analytic gradient.
///
/// Entries with analytic magnitude below `abs_threshold` are compared
/// absolutely; the rest relatively. Returns the maximum error.
pub fn finite_diff_check<F: Real>(
    num: &CompiledGraph<F>,
    den: &CompiledGraph<F>,
    scores: &AcousticScores<F>,
    h: F,
    abs_threshold: F,
) -> Result<F> {
    if h <= F::zero() {
        return Err(Error::validation("finite-difference step must be positive"));
    }
    let base = lfmmi(num, den, scores)?;
    let mut max_err = F::zero();
    let t_max = scores.num_frames;
    let c = scores.num_pdfs;
    let mut perturbed = scores.clone();
    for t in 0..t_max {
        for j in 0..c {
            let orig = scores.get(t, j);
            perturbed.set(t, j, orig + h);
            let up = lfmmi(num, den, &perturbed)?.objective;
            perturbed.set(t, j, orig - h);
            let down = lfmmi(num, den, &perturbed)?.objective;
            perturbed.set(t, j, orig);
            let fd = (up - down) / (h + h);
            let analytic = base.gradient[t * c + j];
            let diff = (fd - analytic).abs();
            let err = if analytic.abs() < abs_threshold {
                diff
            } else {
                diff / analytic.abs()
            };
            max_err = max_err.max(err);
        }
    }
    Ok(max_err)
}

/// One frame of a Viterbi decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViterbiStep {
    pub pdf: Label,
    pub is_self_loop: bool,
}

/// Best length-T arc path under graph weight plus frame scores (the
/// tropical view of the forward recursion). Deterministic: on ties the
/// earliest-relaxed predecessor wins, scanning states and arcs in order.
pub fn viterbi_path<F: Real>(
    graph: &CompiledGraph<F>,
    scores: &AcousticScores<F>,
) -> Result<(Vec<ViterbiStep>, F)> {
    check_pdf_range(&graph.fst, scores.num_pdfs)?;
    let fst = &graph.fst;
    let n = fst.num_states();
    let t_max = scores.num_frames;
    let ninf = F::neg_infinity();
    let Some(start) = fst.start() else {
        return Err(Error::NoAcceptingPath("graph has no start state".into()));
    };

    let mut value = vec![ninf; n];
    value[start] = F::zero();
    // back[t][state] = (prev state, arc index)
    let mut back: Vec<Vec<Option<(usize, usize)>>> = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let mut next = vec![ninf; n];
        let mut bp: Vec<Option<(usize, usize)>> = vec![None; n];
        for q in 0..n {
            let v = value[q];
            if v == ninf {
                continue;
            }
            for (i, arc) in fst.arcs(q).iter().enumerate() {
                let w = v + arc.weight + scores.score(t, arc.ilabel);
                if w > next[arc.nextstate] {
                    next[arc.nextstate] = w;
                    bp[arc.nextstate] = Some((q, i));
                }
            }
        }
        value = next;
        back.push(bp);
    }

    let mut best: Option<(F, usize)> = None;
    for (q, fw) in fst.final_states() {
        if value[q] == ninf {
            continue;
        }
        let total = value[q] + fw;
        let better = match best {
            None => true,
            Some((b, _)) => total > b,
        };
        if better {
            best = Some((total, q));
        }
    }
    let (total, mut state) =
        best.ok_or_else(|| Error::NoAcceptingPath(format!("no {t_max}-frame path")))?;

    let mut steps = vec![
        ViterbiStep {
            pdf: 0,
            is_self_loop: false,
        };
        t_max
    ];
    for t in (0..t_max).rev() {
        let (prev, arc_idx) =
            back[t][state].expect("backpointer chain broken despite finite value");
        let arc = fst.arcs(prev)[arc_idx];
        steps[t] = ViterbiStep {
            pdf: arc.ilabel,
            is_self_loop: arc.nextstate == prev,
        };
        state = prev;
    }
    Ok((steps, total))
}
