"""Per-pair difficulty metrics: length, cross-entropy/perplexity, BLEU.

Cross-entropy is the teacher-forced mean negative log2-probability per
target token, so perplexity `2 ** H` lands in the familiar per-token range.
Sentence BLEU is BLEU-4 with add-one smoothing on the order >= 2 precisions
(numerator and denominator), an unsmoothed unigram precision, and brevity
penalty min(1, exp(1 - |ref|/|cand|)). Scoring never mutates the model.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import ModelCheckpoint
from .corpus import EncodedPair, ParallelCorpus, SentencePair
from .errors import ConfigError, DataError, FingerprintError
from .seq2seq import forward_teacher_forced, greedy_decode, make_batch

SCORES_HEADER = "CURRICULA-SCORES v1"

BLEU_ORDER = 4


@dataclass(frozen=True)
class PairScore:
    index: int
    value: float


@dataclass
class ScoreTable:
    """One metric value per corpus pair, tagged with the scoring model."""

    metric: str
    scorer_fingerprint: str
    scores: tuple[PairScore, ...]

    def __post_init__(self):
        seen = set()
        for s in self.scores:
            if s.index in seen:
                raise DataError(f"duplicate index {s.index} in score table")
            seen.add(s.index)
            if not math.isfinite(s.value):
                raise DataError(f"non-finite score at index {s.index}")
        self.scores = tuple(sorted(self.scores, key=lambda s: s.index))

    def __len__(self) -> int:
        return len(self.scores)

    def indices(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.scores)

    def value_map(self) -> dict[int, float]:
        return {s.index: s.value for s in self.scores}

    def to_text(self) -> str:
        lines = [f"{SCORES_HEADER} {self.metric} {self.scorer_fingerprint}"]
        for s in self.scores:
            lines.append(f"{s.index}\t{s.value:.9g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScoreTable":
        lines = text.splitlines()
        if not lines:
            raise DataError("empty score table")
        head = lines[0].split(" ")
        if len(head) != 4 or " ".join(head[:2]) != SCORES_HEADER:
            raise DataError(f"bad score table header: {lines[0]!r}")
        scores = []
        for ln in lines[1:]:
            if not ln:
                continue
            idx, val = ln.split("\t")
            scores.append(PairScore(int(idx), float(val)))
        return cls(metric=head[2], scorer_fingerprint=head[3], scores=tuple(scores))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ScoreTable":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _check_fingerprints(model: ModelCheckpoint, pair: EncodedPair) -> None:
    if (
        model.src_vocab_fingerprint != pair.src_vocab_fingerprint
        or model.tgt_vocab_fingerprint != pair.tgt_vocab_fingerprint
    ):
        raise FingerprintError(
            f"pair {pair.index} was encoded with different vocabularies "
            "than the scoring model was trained on"
        )


def pair_cross_entropy(model: ModelCheckpoint, pair: EncodedPair) -> float:
    """Teacher-forced cross-entropy of one pair, in bits per target token."""
    _check_fingerprints(model, pair)
    batch = make_batch([pair])
    result = forward_teacher_forced(
        model.params, model.config, batch, dropout_on=False, seed=0
    )
    return float(result.mean_loss)


def pair_perplexity(model: ModelCheckpoint, pair: EncodedPair) -> float:
    return 2.0 ** pair_cross_entropy(model, pair)


def pair_length(pair: SentencePair, side: str) -> int:
    """Token count on one side, specials excluded (pairs store raw tokens)."""
    if side == "source":
        return len(pair.src_tokens)
    if side == "target":
        return len(pair.tgt_tokens)
    raise ConfigError(f"side must be 'source' or 'target', got {side!r}")


def _ngram_counts(seq, n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def clipped_ngram_matches(candidate, reference, n: int) -> tuple[int, int]:
    """(clipped matches, candidate n-gram total) for one order n."""
    total = max(len(candidate) - n + 1, 0)
    if total == 0:
        return 0, 0
    ref_counts = _ngram_counts(reference, n)
    matches = 0
    for gram, count in _ngram_counts(candidate, n).items():
        matches += min(count, ref_counts.get(gram, 0))
    return matches, total


def sentence_bleu(candidate, reference) -> float:
    """Smoothed sentence-level BLEU-4 in [0, 1]."""
    candidate = list(candidate)
    reference = list(reference)
    if not reference:
        raise ConfigError("sentence_bleu requires a non-empty reference")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, BLEU_ORDER + 1):
        matches, total = clipped_ngram_matches(candidate, reference, n)
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        else:
            precision = (matches + 1) / (total + 1)
        log_sum += math.log(precision) / BLEU_ORDER
    brevity = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    return brevity * math.exp(log_sum)


def default_decode_len(source_length: int) -> int:
    """Decode budget for BLEU scoring: generous but bounded."""
    return max(2 * source_length, 80)


def pair_bleu(
    model: ModelCheckpoint, pair: EncodedPair, max_decode_len: int | None = None
) -> float:
    """Sentence BLEU of the model's greedy translation against the reference."""
    _check_fingerprints(model, pair)
    if max_decode_len is None:
        max_decode_len = default_decode_len(len(pair.src_ids))
    decoded = greedy_decode(model.params, model.config, pair.src_ids, max_decode_len)
    reference = list(pair.tgt_out_ids[:-1])  # strip EOS
    if not decoded:
        return 0.0
    return sentence_bleu(decoded, reference)


def length_scores(corpus: ParallelCorpus, side: str) -> ScoreTable:
    return ScoreTable(
        metric=f"length:{side}",
        scorer_fingerprint="none",
        scores=tuple(
            PairScore(p.index, float(pair_length(p, side))) for p in corpus.pairs
        ),
    )


def score_corpus(
    model: ModelCheckpoint,
    pairs,
    metric: str,
    max_decode_len: int | None = None,
) -> ScoreTable:
    """Score every encoded pair with one model-based metric.

    Pairs are independent of each other; results are emitted in corpus-index
    order whatever order they were supplied in.
    """
    if metric not in ("xent", "ppl", "bleu"):
        raise ConfigError(f"unknown model metric {metric!r}; use xent, ppl or bleu")
    scores = []
    for pair in pairs:
        if metric == "xent":
            value = pair_cross_entropy(model, pair)
        elif metric == "ppl":
            value = pair_perplexity(model, pair)
        else:
            value = pair_bleu(model, pair, max_decode_len)
        scores.append(PairScore(pair.index, value))
    return ScoreTable(
        metric=metric, scorer_fingerprint=model.fingerprint, scores=tuple(scores)
    )


def corpus_cross_entropy(params, config, pairs) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair (cross-entropy, token count) arrays, scored one pair at a time.

    Single-pair scoring is the canonical path: it is exactly what
    `pair_cross_entropy` computes, so corpus-level aggregates built from it
    agree bit-for-bit with the per-pair metric.
    """
    entropies = np.empty(len(pairs))
    token_counts = np.empty(len(pairs))
    for i, pair in enumerate(pairs):
        batch = make_batch([pair])
        result = forward_teacher_forced(params, config, batch, dropout_on=False, seed=0)
        entropies[i] = result.mean_loss
        token_counts[i] = len(pair.tgt_out_ids)
    return entropies, token_counts
