"""The cheap-scorer pipeline: rank pairs with a small model, train on the
ranked order, and compare against a one-shot random shuffle.

Label noise is injected into a fifth of the training targets; a perplexity
scorer pushes the corrupted pairs to the end of an ascending ordering. The
run reports the mean test-BLEU delta over three seeds with full provenance.

Run:  python demos/04_small_scorer_pipeline.py   (takes a few minutes)
"""

from curricula import run_directional_sanity
from curricula.trainer import TrainConfig

summary = run_directional_sanity(
    "runs/demo_pipeline",
    seeds=(1, 2, 3),
    size=400,
    vocab=12,
    min_len=3,
    max_len=7,
    noise=0.2,
    preset="tiny",
    train=TrainConfig(learning_rate=3e-3, batch_size=16, max_epochs=40, patience=40, seed=0),
)

print("mean test BLEU, ascending-perplexity order:", round(summary["mean_bleu_ppl_asc"], 4))
print("mean test BLEU, shuffle once:              ", round(summary["mean_bleu_shuffle_once"], 4))
print("delta:                                     ", round(summary["delta"], 4))
print("per-seed details:", summary["summary_path"])
