use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::artifact::CompiledArtifact;
use crate::error::DecodeError;
use crate::token::TokenId;

/// Next-token scorer: given the token history, one score per vocabulary
/// entry (higher is better).
pub trait Scorer {
    fn scores(&mut self, history: &[TokenId], vocab_len: usize) -> Vec<f64>;
}

/// Independent uniform random scores from a seeded generator.
#[derive(Clone, Debug)]
pub struct UniformScorer {
    rng: ChaCha8Rng,
}

impl UniformScorer {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scorer for UniformScorer {
    fn scores(&mut self, _history: &[TokenId], vocab_len: usize) -> Vec<f64> {
        (0..vocab_len).map(|_| self.rng.gen::<f64>()).collect()
    }
}

/// Fixed preference order: the first listed token scores highest; unlisted
/// tokens score below all listed ones, lower ids first.
#[derive(Clone, Debug)]
pub struct GreedyScorer {
    preference: Vec<TokenId>,
}

impl GreedyScorer {
    pub fn new(preference: Vec<TokenId>) -> Self {
        Self { preference }
    }
}

impl Scorer for GreedyScorer {
    fn scores(&mut self, _history: &[TokenId], vocab_len: usize) -> Vec<f64> {
        let mut s: Vec<f64> = (0..vocab_len).map(|t| -((vocab_len + t) as f64)).collect();
        for (rank, &t) in self.preference.iter().enumerate() {
            if (t as usize) < vocab_len {
                s[t as usize] = -(rank as f64);
            }
        }
        s
    }
}

/// `temperature == 0` selects the highest allowed score (lowest id on ties);
/// otherwise softmax sampling over the `top_k` best allowed tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_k: Option<usize>,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { temperature: 0.0, top_k: None, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutput {
    /// Prompt followed by the generated tokens.
    pub tokens: Vec<TokenId>,
    pub prompt_len: usize,
    /// True iff the sequence ended with an accepted EOS.
    pub complete: bool,
}

impl DecodeOutput {
    pub fn generated(&self) -> &[TokenId] {
        &self.tokens[self.prompt_len..]
    }
}

/// Constrained decoding loop: mask, score, select among allowed tokens,
/// advance; stops at EOS or after `max_len` generated tokens.
pub fn constrained_decode(
    a: &CompiledArtifact,
    scorer: &mut dyn Scorer,
    prompt: &[TokenId],
    max_len: usize,
    cfg: &SamplingConfig,
) -> Result<DecodeOutput, DecodeError> {
    let mut state = a.replay(prompt)?;
    let mut tokens = prompt.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = a.vocab.len();
    for step in 0..max_len {
        if state.finished {
            break;
        }
        let mask = a.compute_mask(&state);
        if mask.is_empty() {
            return Err(DecodeError::DeadEnd { step });
        }
        let scores = scorer.scores(&tokens, n);
        if scores.len() != n {
            return Err(DecodeError::ScoreLength { expected: n, got: scores.len() });
        }
        let t = select(&scores, mask.iter().map(|t| t as TokenId), cfg, &mut rng);
        state = a.advance(&state, t)?;
        tokens.push(t);
    }
    Ok(DecodeOutput { tokens, prompt_len: prompt.len(), complete: state.finished })
}

fn select(scores: &[f64], allowed: impl Iterator<Item = TokenId>, cfg: &SamplingConfig, rng: &mut ChaCha8Rng) -> TokenId {
    let mut cand: Vec<(TokenId, f64)> = allowed.map(|t| (t, scores[t as usize])).collect();
    cand.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    if cfg.temperature <= 0.0 {
        return cand[0].0;
    }
    if let Some(k) = cfg.top_k {
        cand.truncate(k.max(1));
    }
    let top = cand[0].1;
    let weights: Vec<f64> = cand.iter().map(|(_, s)| ((s - top) / cfg.temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return cand[i].0;
        }
        x -= w;
    }
    cand[cand.len() - 1].0
}
