mod artifact;
mod decode;
mod decoder;

pub use artifact::{compile_artifact, content_hash, CompileReport, CompiledArtifact, StageTimes};
pub use decode::{constrained_decode, DecodeOutput, GreedyScorer, SamplingConfig, Scorer, UniformScorer};
pub use decoder::{is_complete, DecoderState};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DecodeError;
    use crate::grammar::parse_grammar_spec;
    use crate::token::Vocabulary;

    const A: u32 = 0;
    const B: u32 = 1;
    const C: u32 = 2;
    const AB: u32 = 3;
    const AC: u32 = 4;
    const ABA: u32 = 5;
    const EOS: u32 = 6;

    fn bc() -> CompiledArtifact {
        let g = parse_grammar_spec("B: /ab+/ ; C: /ac+/ ; start: B C | B C start ;").unwrap();
        let v = Vocabulary::with_eos(["a", "b", "c", "ab", "ac", "aba"].map(|s| s.as_bytes().to_vec())).unwrap();
        compile_artifact(&g, &v).unwrap().0
    }

    fn mask_of(a: &CompiledArtifact, s: &DecoderState) -> Vec<u32> {
        a.compute_mask(s).iter().map(|t| t as u32).collect()
    }

    #[test]
    fn walk_ab_ac_eos() {
        let a = bc();
        let s0 = a.init_state();
        assert_eq!(s0, a.init_state());
        assert_eq!(a.replay(&[]).unwrap(), s0);
        assert!(!is_complete(&s0));
        assert_eq!(mask_of(&a, &s0), vec![A, AB, ABA]);

        let s1 = a.advance(&s0, AB).unwrap();
        assert_eq!((s1.lexer_state, s1.parser_state, s1.stack.len()), (2, s0.parser_state, 0));
        assert_eq!(mask_of(&a, &s1), vec![A, B, AC]);

        let s2 = a.advance(&s1, AC).unwrap();
        assert_eq!(s2.lexer_state, 3);
        assert_eq!(s2.stack, vec![s0.parser_state]);
        assert_eq!(mask_of(&a, &s2), vec![A, C, AB, ABA, EOS]);

        let s3 = a.advance(&s2, EOS).unwrap();
        assert!(is_complete(&s3));
        assert_eq!(a.advance(&s3, A), Err(DecodeError::Finished));
        assert!(a.compute_mask(&s3).is_empty());
    }

    #[test]
    fn masked_token_is_rejected() {
        let a = bc();
        let s = a.advance(&a.init_state(), AB).unwrap();
        assert_eq!(a.advance(&s, AB), Err(DecodeError::MaskedToken(AB)));
        assert_eq!(a.advance(&s, 99), Err(DecodeError::UnknownToken(99)));
        assert_eq!(a.replay(&[AB, AB]), Err(DecodeError::InvalidPrompt { index: 1, token: AB }));
    }

    #[test]
    fn greedy_eos_run() {
        let a = bc();
        let mut g = GreedyScorer::new(vec![EOS, AB, AC]);
        let out = constrained_decode(&a, &mut g, &[], 8, &SamplingConfig::default()).unwrap();
        assert_eq!(out.tokens, vec![AB, AC, EOS]);
        assert!(out.complete);
    }

    #[test]
    fn length_cap_is_incomplete() {
        let a = bc();
        let out = constrained_decode(&a, &mut UniformScorer::new(0), &[], 1, &SamplingConfig::default()).unwrap();
        assert_eq!(out.tokens.len(), 1);
        assert!(!out.complete);
    }

    #[test]
    fn compile_is_deterministic() {
        assert_eq!(bc(), bc());
        assert!(bc().hash_matches());
    }

    #[test]
    fn conflicting_grammar_fails() {
        let g = parse_grammar_spec("A: /a/ ; start: start start | A ;").unwrap();
        let v = Vocabulary::with_eos([b"a".to_vec()]).unwrap();
        assert!(matches!(compile_artifact(&g, &v), Err(crate::Error::Conflict(_))));
    }
}
