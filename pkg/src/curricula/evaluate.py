"""Corpus-level evaluation: test perplexity and corpus BLEU of greedy output.

Corpus BLEU aggregates clipped n-gram counts and lengths over the whole test
set before combining them — no per-sentence smoothing, so a zero precision
at any order zeroes the score. Perplexity is token-weighted, i.e. two to
the corpus-level cross-entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .checkpoint import ModelCheckpoint
from .errors import ConfigError, FingerprintError, PairingError
from .metrics import (
    BLEU_ORDER,
    clipped_ngram_matches,
    corpus_cross_entropy,
    default_decode_len,
)
from .seq2seq import greedy_decode


@dataclass(frozen=True)
class EvalResult:
    perplexity: float
    bleu: float  # fraction in [0, 1]; multiply by 100 for the percent scale
    pairs: int

    def to_line(self) -> str:
        return f"ppl={self.perplexity:.9g} bleu={self.bleu:.9g} pairs={self.pairs}"


def corpus_bleu(candidates, references) -> float:
    """BLEU-4 from n-gram counts pooled over the whole corpus."""
    if len(candidates) != len(references):
        raise PairingError(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if len(candidates) == 0:
        raise ConfigError("corpus_bleu requires at least one pair")
    candidates = [list(c) for c in candidates]
    references = [list(r) for r in references]
    if any(not r for r in references):
        raise ConfigError("corpus_bleu references must be non-empty")
    cand_tokens = sum(len(c) for c in candidates)
    ref_tokens = sum(len(r) for r in references)
    if cand_tokens == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, BLEU_ORDER + 1):
        matches = 0
        total = 0
        for cand, ref in zip(candidates, references):
            m, t = clipped_ngram_matches(cand, ref, n)
            matches += m
            total += t
        if matches == 0 or total == 0:
            return 0.0
        log_sum += math.log(matches / total) / BLEU_ORDER
    brevity = min(1.0, math.exp(1.0 - ref_tokens / cand_tokens))
    return brevity * math.exp(log_sum)


def evaluate_model(
    ckpt: ModelCheckpoint, test_pairs, max_decode_len: int | None = None
) -> EvalResult:
    """Test perplexity and corpus BLEU of greedy translations."""
    test_pairs = list(test_pairs)
    if not test_pairs:
        raise ConfigError("evaluate_model requires a non-empty test set")
    for pair in test_pairs:
        if (
            pair.src_vocab_fingerprint != ckpt.src_vocab_fingerprint
            or pair.tgt_vocab_fingerprint != ckpt.tgt_vocab_fingerprint
        ):
            raise FingerprintError(
                f"test pair {pair.index} encoded with different vocabularies "
                "than the checkpoint"
            )
    entropies, tokens = corpus_cross_entropy(ckpt.params, ckpt.config, test_pairs)
    perplexity = 2.0 ** float((entropies * tokens).sum() / tokens.sum())
    candidates = []
    references = []
    for pair in test_pairs:
        budget = (
            max_decode_len
            if max_decode_len is not None
            else default_decode_len(len(pair.src_ids))
        )
        candidates.append(greedy_decode(ckpt.params, ckpt.config, pair.src_ids, budget))
        references.append(list(pair.tgt_out_ids[:-1]))
    return EvalResult(
        perplexity=perplexity,
        bleu=corpus_bleu(candidates, references),
        pairs=len(test_pairs),
    )
