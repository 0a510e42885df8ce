//! Vanilla speculative decoding over table-driven toy models.
//!
//! Position `j` of a step (0-based) is drafted and verified at the context
//! `c ++ d_0 .. d_{j-1}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::metrics::{acceptance_rate, total_variation};
use crate::prob::{draw_token, ProbVector};
use crate::rng::RandomSource;
use crate::scalar::Scalar;

/// Largest vocabulary a toy model may use.
pub const TOY_VOCAB_LIMIT: usize = 64;

/// Next-token distributions keyed by the last `context_len` tokens (or the
/// whole context while it is shorter than that).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyConditionalModel<S> {
    context_len: usize,
    vocab: usize,
    table: BTreeMap<Vec<usize>, ProbVector<S>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    context_len: usize,
    vocab: usize,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    context: Vec<usize>,
    probs: Vec<f64>,
}

impl<S: Scalar> ToyConditionalModel<S> {
    pub fn new<I>(context_len: usize, vocab: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, ProbVector<S>)>,
    {
        if vocab == 0 || vocab > TOY_VOCAB_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "toy vocabulary must lie in 1..={TOY_VOCAB_LIMIT}, got {vocab}"
            )));
        }
        let mut table = BTreeMap::new();
        for (ctx, p) in entries {
            if ctx.len() > context_len {
                return Err(Error::Model(format!(
                    "context {ctx:?} longer than context_len {context_len}"
                )));
            }
            if let Some(t) = ctx.iter().find(|&&t| t >= vocab) {
                return Err(Error::Model(format!("context token {t} outside vocabulary")));
            }
            check_dims(vocab, p.len())?;
            p.require_full("toy model entry")?;
            if table.insert(ctx.clone(), p).is_some() {
                return Err(Error::Model(format!("duplicate entry for context {ctx:?}")));
            }
        }
        if table.is_empty() {
            return Err(Error::Model("model has no entries".into()));
        }
        Ok(Self {
            context_len,
            vocab,
            table,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let vocab = doc.vocab;
        let entries = doc
            .entries
            .into_iter()
            .map(|e| {
                check_dims(vocab, e.probs.len())?;
                let p = ProbVector::new(e.probs.into_iter().map(S::lit).collect())?;
                Ok((e.context, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.context_len, vocab, entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc {
            context_len: self.context_len,
            vocab: self.vocab,
            entries: self
                .table
                .iter()
                .map(|(c, p)| EntryDoc {
                    context: c.clone(),
                    probs: p.iter().map(Scalar::as_f64).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn context_len(&self) -> usize {
        self.context_len
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize], &ProbVector<S>)> {
        self.table.iter().map(|(c, p)| (c.as_slice(), p))
    }

    /// Table key used for `context`.
    pub fn key<'a>(&self, context: &'a [usize]) -> &'a [usize] {
        &context[context.len().saturating_sub(self.context_len)..]
    }

    pub fn lookup(&self, context: &[usize]) -> Result<&ProbVector<S>> {
        let key = self.key(context);
        self.table
            .get(key)
            .ok_or_else(|| Error::Model(format!("no entry for context {key:?}")))
    }

    /// Same contexts with every entry replaced by `f(context, entry)`.
    pub fn map_entries<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &ProbVector<S>) -> Result<ProbVector<S>>,
    {
        let entries = self
            .table
            .iter()
            .map(|(c, p)| Ok((c.clone(), f(c, p)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.context_len, self.vocab, entries)
    }
}

/// `(p - min(p, q)) / (1 - alpha)`, the distribution sampled after a rejection.
pub fn residual_distribution<S: Scalar>(p: &ProbVector<S>, q: &ProbVector<S>) -> Result<ProbVector<S>> {
    let alpha = acceptance_rate(p, q)?;
    if alpha >= S::one() {
        return Err(Error::DegenerateResidual);
    }
    let weights = p.iter().zip(q.iter()).map(|(a, b)| a - a.min(b)).collect();
    ProbVector::from_weights(weights).map_err(|e| match e {
        Error::EmptyMass => Error::DegenerateResidual,
        e => e,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub accepted: Vec<usize>,
    pub corrective: usize,
    pub rejected_at: Option<usize>,
}

impl StepOutcome {
    /// Accepted drafts followed by the corrective token.
    pub fn emitted(&self) -> impl Iterator<Item = usize> + '_ {
        self.accepted.iter().copied().chain(std::iter::once(self.corrective))
    }
}

/// One round of draft, verify and correct.
pub fn speculative_decode_step<S: Scalar>(
    target: &ToyConditionalModel<S>,
    drafter: &ToyConditionalModel<S>,
    context: &[usize],
    lookahead: usize,
    rng: &mut RandomSource,
) -> Result<StepOutcome> {
    check_step(target, drafter, lookahead)?;
    let mut ctx = context.to_vec();
    let mut drafts = Vec::with_capacity(lookahead);
    for _ in 0..lookahead {
        let d = draw_token(drafter.lookup(&ctx)?, rng)?;
        drafts.push(d);
        ctx.push(d);
    }
    ctx.truncate(context.len());
    let mut accepted = Vec::with_capacity(lookahead);
    for (j, &d) in drafts.iter().enumerate() {
        let p = target.lookup(&ctx)?;
        let q = drafter.lookup(&ctx)?;
        let (pd, qd) = (p.get(d), q.get(d));
        if pd < qd && S::lit(rng.uniform()) >= pd / qd {
            let corrective = match residual_distribution(p, q) {
                Ok(r) => draw_token(&r, rng)?,
                Err(Error::DegenerateResidual) => draw_token(p, rng)?,
                Err(e) => return Err(e),
            };
            return Ok(StepOutcome {
                accepted,
                corrective,
                rejected_at: Some(j),
            });
        }
        accepted.push(d);
        ctx.push(d);
    }
    let corrective = draw_token(target.lookup(&ctx)?, rng)?;
    Ok(StepOutcome {
        accepted,
        corrective,
        rejected_at: None,
    })
}

fn check_step<S: Scalar>(
    target: &ToyConditionalModel<S>,
    drafter: &ToyConditionalModel<S>,
    lookahead: usize,
) -> Result<()> {
    if lookahead == 0 {
        return Err(Error::InvalidParameter("lookahead must be >= 1".into()));
    }
    check_dims(target.vocab_size(), drafter.vocab_size())
}

/// Verification and emission counts at one table context.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextStats {
    pub attempts: u64,
    pub accepts: u64,
    pub emitted: Vec<u64>,
}

impl ContextStats {
    pub fn emitted_total(&self) -> u64 {
        self.emitted.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionStats {
    pub steps: u64,
    pub lookahead: usize,
    /// Drafts verified at each position of a step.
    pub position_attempts: Vec<u64>,
    pub position_accepts: Vec<u64>,
    pub contexts: BTreeMap<Vec<usize>, ContextStats>,
}

impl SessionStats {
    pub fn attempts(&self) -> u64 {
        self.position_attempts.iter().sum()
    }

    pub fn accepts(&self) -> u64 {
        self.position_accepts.iter().sum()
    }

    /// Accepted drafts over verified drafts.
    pub fn acceptance(&self) -> f64 {
        self.accepts() as f64 / self.attempts().max(1) as f64
    }

    pub fn mean_accepted_per_step(&self) -> f64 {
        self.accepts() as f64 / self.steps.max(1) as f64
    }

    /// Total variation between the emitted histogram at `key` and the target entry there.
    pub fn context_tv<S: Scalar>(&self, target: &ToyConditionalModel<S>, key: &[usize]) -> Result<f64> {
        let stats = self
            .contexts
            .get(key)
            .ok_or_else(|| Error::Model(format!("context {key:?} never visited")))?;
        let n = stats.emitted_total();
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let emp = ProbVector::<f64>::from_weights(stats.emitted.iter().map(|&c| c as f64).collect())?;
        let p = target.lookup(key)?.cast::<f64>()?;
        total_variation(&emp, &p)
    }

    /// Largest per-context total variation among contexts with at least `min_count` emissions.
    pub fn max_tv<S: Scalar>(&self, target: &ToyConditionalModel<S>, min_count: u64) -> Result<f64> {
        let mut worst = 0.0f64;
        for (key, s) in &self.contexts {
            if s.emitted_total() >= min_count.max(1) {
                worst = worst.max(self.context_tv(target, key)?);
            }
        }
        Ok(worst)
    }
}

/// Runs `steps` rounds, each continuing from the tokens emitted so far.
pub fn run_session<S: Scalar>(
    target: &ToyConditionalModel<S>,
    drafter: &ToyConditionalModel<S>,
    prompt: &[usize],
    lookahead: usize,
    steps: u64,
    rng: &mut RandomSource,
) -> Result<SessionStats> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    check_step(target, drafter, lookahead)?;
    let vocab = target.vocab_size();
    // only the trailing window matters for lookups
    let window = target.context_len().max(drafter.context_len());
    let mut stats = SessionStats {
        steps,
        lookahead,
        position_attempts: vec![0; lookahead],
        position_accepts: vec![0; lookahead],
        contexts: BTreeMap::new(),
    };
    let mut ctx = prompt.to_vec();
    for _ in 0..steps {
        let out = speculative_decode_step(target, drafter, &ctx, lookahead, rng)?;
        let verified = out.rejected_at.map_or(lookahead, |j| j + 1);
        for j in 0..verified {
            stats.position_attempts[j] += 1;
            let key = target.key(&ctx).to_vec();
            let entry = stats.contexts.entry(key).or_insert_with(|| ContextStats {
                emitted: vec![0; vocab],
                ..Default::default()
            });
            entry.attempts += 1;
            let tok = if j < out.accepted.len() {
                stats.position_accepts[j] += 1;
                entry.accepts += 1;
                out.accepted[j]
            } else {
                out.corrective
            };
            entry.emitted[tok] += 1;
            ctx.push(tok);
        }
        if out.rejected_at.is_none() {
            let key = target.key(&ctx).to_vec();
            let entry = stats.contexts.entry(key).or_insert_with(|| ContextStats {
                emitted: vec![0; vocab],
                ..Default::default()
            });
            entry.emitted[out.corrective] += 1;
            ctx.push(out.corrective);
        }
        if ctx.len() > window {
            ctx.drain(..ctx.len() - window);
        }
    }
    Ok(stats)
}
