"""Encoder-decoder LSTM with optional additive attention, on plain numpy.

Everything is float64 and hand-rolled: parameter initialization, the
teacher-forced forward pass, exact reverse-mode gradients, and greedy
decoding. The point is full determinism for a fixed seed and gradients
that can be checked against finite differences.

Layout of one LSTM layer: gate pre-activations are `x @ Wx + h_prev @ Wh + b`
with the 4H columns ordered [input, forget, output, candidate]. Encoder
layers carry their state through PAD positions unchanged (masked update), so
per-pair results do not depend on how much padding a batch happens to have.

Attention is additive: score(q, k) = v . tanh(q @ Wq + k @ Wk), softmaxed
over the non-PAD source positions of each pair. The query is the previous
hidden state of the first decoder layer, and the resulting context vector is
concatenated to that layer's input embedding — the same layer both asks and
consumes, which keeps the recurrence self-contained.

Dropout (inverted, rate p) is applied to every layer's output sequence where
it is consumed from above: as the next layer's input, as attention keys
(encoder top layer), and as the projection input (decoder top layer).
Recurrent connections, state copies and attention queries see raw states.
Masks depend only on (seed, shapes), never on parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import BOS_ID, EOS_ID, PAD_ID, EncodedPair
from .errors import CapabilityError, ConfigError, EncodingError, NumericalError
from .rng import derive_seed

LN2 = float(np.log(2.0))

_PRESETS = {
    # name: (embed, hidden, enc_layers, dec_layers, attention, dropout)
    "base": (512, 512, 2, 2, True, 0.2),
    "small": (128, 128, 1, 2, False, 0.2),
    "tiny": (32, 32, 1, 1, True, 0.2),
}


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int
    hidden_dim: int
    encoder_layers: int
    decoder_layers: int
    use_attention: bool
    dropout_p: float
    src_vocab_size: int
    tgt_vocab_size: int

    def __post_init__(self):
        dims = (
            self.embed_dim,
            self.hidden_dim,
            self.encoder_layers,
            self.decoder_layers,
            self.src_vocab_size,
            self.tgt_vocab_size,
        )
        if any(d < 1 for d in dims):
            raise ConfigError(f"all model dimensions must be >= 1: {self}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")

    @classmethod
    def preset(
        cls, name: str, src_vocab_size: int, tgt_vocab_size: int
    ) -> "ModelConfig":
        if name not in _PRESETS:
            raise ConfigError(
                f"unknown preset {name!r}; available: {sorted(_PRESETS)}"
            )
        embed, hidden, enc, dec, attn, drop = _PRESETS[name]
        return cls(embed, hidden, enc, dec, attn, drop, src_vocab_size, tgt_vocab_size)


def preset_names() -> tuple[str, ...]:
    return tuple(_PRESETS)


def parameter_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Every tensor name and shape, in the fixed canonical order."""
    e, h = config.embed_dim, config.hidden_dim
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("src_embed", (config.src_vocab_size, e)),
        ("tgt_embed", (config.tgt_vocab_size, e)),
    ]
    din = e
    for layer in range(config.encoder_layers):
        shapes += [
            (f"enc{layer}_Wx", (din, 4 * h)),
            (f"enc{layer}_Wh", (h, 4 * h)),
            (f"enc{layer}_b", (4 * h,)),
        ]
        din = h
    dec0_in = e + (h if config.use_attention else 0)
    for layer in range(config.decoder_layers):
        din = dec0_in if layer == 0 else h
        shapes += [
            (f"dec{layer}_Wx", (din, 4 * h)),
            (f"dec{layer}_Wh", (h, 4 * h)),
            (f"dec{layer}_b", (4 * h,)),
        ]
    if config.use_attention:
        shapes += [
            ("attn_Wq", (h, h)),
            ("attn_Wk", (h, h)),
            ("attn_v", (h,)),
        ]
    shapes += [
        ("out_W", (h, config.tgt_vocab_size)),
        ("out_b", (config.tgt_vocab_size,)),
    ]
    return shapes


def parameter_count(config: ModelConfig) -> int:
    return sum(int(np.prod(shape)) for _, shape in parameter_shapes(config))


def init_params(config: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Uniform init in [-0.08, 0.08]; forget-gate biases start at 1.0."""
    rng = np.random.Generator(np.random.Philox(key=derive_seed("init", seed)))
    params: dict[str, np.ndarray] = {}
    h = config.hidden_dim
    for name, shape in parameter_shapes(config):
        params[name] = rng.uniform(-0.08, 0.08, size=shape)
    for name in params:
        if name.endswith("_b") and name != "out_b":
            params[name][h : 2 * h] = 1.0
    return params


@dataclass
class Batch:
    """Padded id matrices for a group of encoded pairs."""

    src: np.ndarray  # (B, S) int64, PAD beyond each row's length
    src_lengths: np.ndarray  # (B,)
    tgt_in: np.ndarray  # (B, T)
    tgt_out: np.ndarray  # (B, T)
    tgt_lengths: np.ndarray  # (B,)
    indices: np.ndarray  # (B,) corpus indices

    @property
    def size(self) -> int:
        return self.src.shape[0]


def make_batch(pairs: list[EncodedPair] | tuple[EncodedPair, ...]) -> Batch:
    if not pairs:
        raise ConfigError("cannot build an empty batch")
    b = len(pairs)
    s = max(len(p.src_ids) for p in pairs)
    t = max(len(p.tgt_out_ids) for p in pairs)
    src = np.full((b, max(s, 1)), PAD_ID, dtype=np.int64)
    tgt_in = np.full((b, t), PAD_ID, dtype=np.int64)
    tgt_out = np.full((b, t), PAD_ID, dtype=np.int64)
    src_lengths = np.zeros(b, dtype=np.int64)
    tgt_lengths = np.zeros(b, dtype=np.int64)
    indices = np.zeros(b, dtype=np.int64)
    for i, p in enumerate(pairs):
        src[i, : len(p.src_ids)] = p.src_ids
        tgt_in[i, : len(p.tgt_in_ids)] = p.tgt_in_ids
        tgt_out[i, : len(p.tgt_out_ids)] = p.tgt_out_ids
        src_lengths[i] = len(p.src_ids)
        tgt_lengths[i] = len(p.tgt_out_ids)
        indices[i] = p.index
    return Batch(src, src_lengths, tgt_in, tgt_out, tgt_lengths, indices)


@dataclass
class ForwardResult:
    mean_loss: float  # bits/token, masked token-weighted mean
    pair_losses: np.ndarray  # (B,) masked per-pair means, bits/token
    log_probs: np.ndarray  # (B, T, V) base-2 log-probabilities


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _lstm_forward(Wx, Wh, b, X, h0, c0, mask=None):
    """Run one LSTM layer over a full (B, T, Din) input sequence.

    With `mask` (B, T), state updates at masked-off steps are skipped
    (carried through), so trailing PAD never alters a row's state.
    Returns (outputs (B, T, H), (hT, cT), cache).
    """
    bsz, tlen, _ = X.shape
    hdim = Wh.shape[0]
    xw = (X.reshape(bsz * tlen, -1) @ Wx).reshape(bsz, tlen, 4 * hdim) + b
    gi = np.empty((bsz, tlen, hdim))
    gf = np.empty((bsz, tlen, hdim))
    go = np.empty((bsz, tlen, hdim))
    gg = np.empty((bsz, tlen, hdim))
    tc = np.empty((bsz, tlen, hdim))
    cs = np.empty((bsz, tlen, hdim))  # post-carry cell states
    hs = np.empty((bsz, tlen, hdim))  # post-carry hidden states
    h, c = h0, c0
    for t in range(tlen):
        a = xw[:, t] + h @ Wh
        i = _sigmoid(a[:, :hdim])
        f = _sigmoid(a[:, hdim : 2 * hdim])
        o = _sigmoid(a[:, 2 * hdim : 3 * hdim])
        g = np.tanh(a[:, 3 * hdim :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        if mask is not None:
            m = mask[:, t : t + 1]
            h = m * h_new + (1.0 - m) * h
            c = m * c_new + (1.0 - m) * c
        else:
            h, c = h_new, c_new
        gi[:, t], gf[:, t], go[:, t], gg[:, t] = i, f, o, g
        tc[:, t] = tanh_c
        cs[:, t] = c
        hs[:, t] = h
    cache = {
        "X": X, "I": gi, "F": gf, "O": go, "G": gg, "TC": tc,
        "C": cs, "H": hs, "h0": h0, "c0": c0, "mask": mask,
    }
    return hs, (h, c), cache


def _lstm_backward(Wx, Wh, cache, dH, dhT, dcT):
    """Reverse-mode pass for `_lstm_forward`.

    dH carries the gradient every consumer put on the output sequence;
    dhT/dcT the gradient on the final state. Returns
    (dX, dWx, dWh, db, dh0, dc0).
    """
    X, mask = cache["X"], cache["mask"]
    gi, gf, go, gg = cache["I"], cache["F"], cache["O"], cache["G"]
    tc, cs, hs = cache["TC"], cache["C"], cache["H"]
    h0, c0 = cache["h0"], cache["c0"]
    bsz, tlen, hdim = hs.shape
    d_gates = np.zeros((bsz, tlen, 4 * hdim))
    dh_next = np.array(dhT, copy=True)
    dc_next = np.array(dcT, copy=True)
    for t in reversed(range(tlen)):
        dh = dH[:, t] + dh_next
        dc = dc_next
        if mask is not None:
            m = mask[:, t : t + 1]
            dh_new = dh * m
            dh_carry = dh * (1.0 - m)
            dc_new = dc * m
            dc_carry = dc * (1.0 - m)
        else:
            dh_new, dc_new = dh, dc
            dh_carry = dc_carry = 0.0
        i, f, o, g = gi[:, t], gf[:, t], go[:, t], gg[:, t]
        tanh_c = tc[:, t]
        c_prev = cs[:, t - 1] if t > 0 else c0
        d_o = dh_new * tanh_c
        d_c = dc_new + dh_new * o * (1.0 - tanh_c * tanh_c)
        d_i = d_c * g
        d_g = d_c * i
        d_f = d_c * c_prev
        dc_prev = d_c * f + dc_carry
        da = d_gates[:, t]
        da[:, :hdim] = d_i * i * (1.0 - i)
        da[:, hdim : 2 * hdim] = d_f * f * (1.0 - f)
        da[:, 2 * hdim : 3 * hdim] = d_o * o * (1.0 - o)
        da[:, 3 * hdim :] = d_g * (1.0 - g * g)
        dh_next = da @ Wh.T + dh_carry
        dc_next = dc_prev
    h_prev = np.concatenate([h0[:, None, :], hs[:, :-1]], axis=1)
    flat = d_gates.reshape(bsz * tlen, 4 * hdim)
    dWx = X.reshape(bsz * tlen, -1).T @ flat
    dWh = h_prev.reshape(bsz * tlen, hdim).T @ flat
    db = flat.sum(axis=0)
    dX = (flat @ Wx.T).reshape(X.shape)
    return dX, dWx, dWh, db, dh_next, dc_next


def _attention_alpha(qs, kwk, v, mask):
    """Masked additive-attention weights; PAD positions are exactly zero."""
    u = np.tanh(qs[:, None, :] + kwk)
    e = u @ v
    neg = np.where(mask, e, -np.inf)
    peak = neg.max(axis=1, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)  # rows with no valid position
    ex = np.where(mask, np.exp(e - peak), 0.0)
    denom = ex.sum(axis=1, keepdims=True)
    return np.divide(ex, denom, out=np.zeros_like(ex), where=denom > 0)


def _attn_lstm_forward(Wx, Wh, b, Wq, Wk, v, Y, K, src_mask, h0, c0):
    """First decoder layer with additive attention over encoder outputs K.

    Input at step t is [y_t ; context_t] where the context is attended with
    the layer's own previous hidden state as query.
    """
    bsz, tlen, edim = Y.shape
    hdim = Wh.shape[0]
    kwk = np.matmul(K, Wk)
    yw = (Y.reshape(bsz * tlen, edim) @ Wx[:edim]).reshape(bsz, tlen, 4 * hdim) + b
    wx_ctx = Wx[edim:]
    gi = np.empty((bsz, tlen, hdim))
    gf = np.empty((bsz, tlen, hdim))
    go = np.empty((bsz, tlen, hdim))
    gg = np.empty((bsz, tlen, hdim))
    tc = np.empty((bsz, tlen, hdim))
    cs = np.empty((bsz, tlen, hdim))
    hs = np.empty((bsz, tlen, hdim))
    queries = np.empty((bsz, tlen, hdim))
    alphas = np.empty((bsz, tlen, K.shape[1]))
    contexts = np.empty((bsz, tlen, K.shape[2]))
    h, c = h0, c0
    for t in range(tlen):
        queries[:, t] = h
        alpha = _attention_alpha(h @ Wq, kwk, v, src_mask)
        ctx = np.einsum("bs,bsh->bh", alpha, K)
        alphas[:, t] = alpha
        contexts[:, t] = ctx
        a = yw[:, t] + ctx @ wx_ctx + h @ Wh
        i = _sigmoid(a[:, :hdim])
        f = _sigmoid(a[:, hdim : 2 * hdim])
        o = _sigmoid(a[:, 2 * hdim : 3 * hdim])
        g = np.tanh(a[:, 3 * hdim :])
        c = f * c + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        gi[:, t], gf[:, t], go[:, t], gg[:, t] = i, f, o, g
        tc[:, t] = tanh_c
        cs[:, t] = c
        hs[:, t] = h
    cache = {
        "Y": Y, "K": K, "KWK": kwk, "src_mask": src_mask,
        "I": gi, "F": gf, "O": go, "G": gg, "TC": tc, "C": cs, "H": hs,
        "Q": queries, "A": alphas, "CTX": contexts, "h0": h0, "c0": c0,
        "edim": edim,
    }
    return hs, (h, c), cache


def _attn_lstm_backward(Wx, Wh, Wq, Wk, v, cache, dH, dhT, dcT):
    """Reverse-mode pass for `_attn_lstm_forward`.

    Returns (dY, dK, dWx, dWh, db, dWq, dWk, dv, dh0, dc0). The attention
    query gradient lands on the previous step's hidden state, which is why
    this loop cannot be collapsed across time.
    """
    Y, K, kwk, src_mask = cache["Y"], cache["K"], cache["KWK"], cache["src_mask"]
    gi, gf, go, gg = cache["I"], cache["F"], cache["O"], cache["G"]
    tc, cs, hs = cache["TC"], cache["C"], cache["H"]
    queries, alphas, contexts = cache["Q"], cache["A"], cache["CTX"]
    h0, c0 = cache["h0"], cache["c0"]
    edim = cache["edim"]
    bsz, tlen, hdim = hs.shape
    wx_ctx = Wx[edim:]
    d_gates = np.zeros((bsz, tlen, 4 * hdim))
    dK = np.zeros_like(K)
    d_kwk = np.zeros_like(kwk)
    dWq = np.zeros_like(Wq)
    dv = np.zeros_like(v)
    dh_next = np.array(dhT, copy=True)
    dc_next = np.array(dcT, copy=True)
    for t in reversed(range(tlen)):
        dh = dH[:, t] + dh_next
        dc = dc_next
        i, f, o, g = gi[:, t], gf[:, t], go[:, t], gg[:, t]
        tanh_c = tc[:, t]
        c_prev = cs[:, t - 1] if t > 0 else c0
        d_o = dh * tanh_c
        d_c = dc + dh * o * (1.0 - tanh_c * tanh_c)
        d_i = d_c * g
        d_g = d_c * i
        d_f = d_c * c_prev
        dc_next = d_c * f
        da = d_gates[:, t]
        da[:, :hdim] = d_i * i * (1.0 - i)
        da[:, hdim : 2 * hdim] = d_f * f * (1.0 - f)
        da[:, 2 * hdim : 3 * hdim] = d_o * o * (1.0 - o)
        da[:, 3 * hdim :] = d_g * (1.0 - g * g)
        # context path back through the attention read
        dctx = da @ wx_ctx.T
        alpha = alphas[:, t]
        dalpha = np.einsum("bh,bsh->bs", dctx, K)
        dK += alpha[:, :, None] * dctx[:, None, :]
        inner = (alpha * dalpha).sum(axis=1, keepdims=True)
        de = alpha * (dalpha - inner)
        q = queries[:, t]
        u = np.tanh((q @ Wq)[:, None, :] + kwk)
        dv += np.einsum("bs,bsa->a", de, u)
        dz = de[:, :, None] * (1.0 - u * u) * v
        dqs = dz.sum(axis=1)
        d_kwk += dz
        dWq += q.T @ dqs
        dh_next = da @ Wh.T + dqs @ Wq.T
    dWk = np.einsum("bsh,bsa->ha", K, d_kwk)
    dK += np.matmul(d_kwk, Wk.T)
    h_prev = np.concatenate([h0[:, None, :], hs[:, :-1]], axis=1)
    flat = d_gates.reshape(bsz * tlen, 4 * hdim)
    dWx = np.empty_like(Wx)
    dWx[:edim] = Y.reshape(bsz * tlen, edim).T @ flat
    dWx[edim:] = contexts.reshape(bsz * tlen, -1).T @ flat
    dWh = h_prev.reshape(bsz * tlen, hdim).T @ flat
    db = flat.sum(axis=0)
    dY = (flat @ Wx[:edim].T).reshape(Y.shape)
    return dY, dK, dWx, dWh, db, dWq, dWk, dv, dh_next, dc_next


def _dropout_mask(rng, shape, p):
    return (rng.random(size=shape) >= p) / (1.0 - p)


def _check_batch_ids(config: ModelConfig, batch: Batch) -> None:
    if batch.src.min() < 0 or batch.src.max() >= config.src_vocab_size:
        raise EncodingError("source ids outside the model's source vocabulary")
    hi = max(batch.tgt_in.max(), batch.tgt_out.max())
    lo = min(batch.tgt_in.min(), batch.tgt_out.min())
    if lo < 0 or hi >= config.tgt_vocab_size:
        raise EncodingError("target ids outside the model's target vocabulary")


def _run_forward(params, config, batch, dropout_on, seed):
    """Full teacher-forced pass. Returns (ForwardResult, cache-for-backward)."""
    _check_batch_ids(config, batch)
    bsz, slen = batch.src.shape
    tlen = batch.tgt_in.shape[1]
    hdim = config.hidden_dim
    p = config.dropout_p if dropout_on else 0.0
    rng = (
        np.random.Generator(np.random.Philox(key=derive_seed("dropout", seed)))
        if p > 0.0
        else None
    )

    src_mask = (batch.src != PAD_ID).astype(np.float64)
    src_bool = batch.src != PAD_ID

    x = params["src_embed"][batch.src]
    zeros = np.zeros((bsz, hdim))
    enc_caches = []
    enc_masks = []
    enc_finals = []
    inp = x
    for layer in range(config.encoder_layers):
        hs, final, cache = _lstm_forward(
            params[f"enc{layer}_Wx"],
            params[f"enc{layer}_Wh"],
            params[f"enc{layer}_b"],
            inp,
            zeros,
            zeros,
            mask=src_mask,
        )
        enc_finals.append(final)
        drop = _dropout_mask(rng, hs.shape, p) if rng is not None else None
        enc_caches.append(cache)
        enc_masks.append(drop)
        inp = hs * drop if drop is not None else hs
    enc_top = inp  # post-dropout outputs of the top encoder layer

    y = params["tgt_embed"][batch.tgt_in]
    dec_init = [
        enc_finals[min(layer, config.encoder_layers - 1)]
        for layer in range(config.decoder_layers)
    ]
    dec_caches = []
    dec_masks = []
    if config.use_attention:
        hs, _, cache0 = _attn_lstm_forward(
            params["dec0_Wx"], params["dec0_Wh"], params["dec0_b"],
            params["attn_Wq"], params["attn_Wk"], params["attn_v"],
            y, enc_top, src_bool, dec_init[0][0], dec_init[0][1],
        )
    else:
        hs, _, cache0 = _lstm_forward(
            params["dec0_Wx"], params["dec0_Wh"], params["dec0_b"],
            y, dec_init[0][0], dec_init[0][1],
        )
    drop = _dropout_mask(rng, hs.shape, p) if rng is not None else None
    dec_caches.append(cache0)
    dec_masks.append(drop)
    inp = hs * drop if drop is not None else hs
    for layer in range(1, config.decoder_layers):
        hs, _, cache = _lstm_forward(
            params[f"dec{layer}_Wx"],
            params[f"dec{layer}_Wh"],
            params[f"dec{layer}_b"],
            inp,
            dec_init[layer][0],
            dec_init[layer][1],
        )
        drop = _dropout_mask(rng, hs.shape, p) if rng is not None else None
        dec_caches.append(cache)
        dec_masks.append(drop)
        inp = hs * drop if drop is not None else hs
    top = inp  # post-dropout outputs of the top decoder layer

    logits = (
        top.reshape(bsz * tlen, hdim) @ params["out_W"] + params["out_b"]
    ).reshape(bsz, tlen, -1)
    peak = logits.max(axis=2, keepdims=True)
    expl = np.exp(logits - peak)
    logz = np.log(expl.sum(axis=2, keepdims=True)) + peak
    log_probs = (logits - logz) / LN2

    tgt_mask = (np.arange(tlen)[None, :] < batch.tgt_lengths[:, None]).astype(
        np.float64
    )
    picked = np.take_along_axis(log_probs, batch.tgt_out[:, :, None], axis=2)[:, :, 0]
    neg = -picked * tgt_mask
    token_counts = batch.tgt_lengths.astype(np.float64)
    pair_losses = neg.sum(axis=1) / token_counts
    total_tokens = tgt_mask.sum()
    mean_loss = float(neg.sum() / total_tokens)

    result = ForwardResult(mean_loss, pair_losses, log_probs)
    cache = {
        "batch": batch,
        "softmax": expl / expl.sum(axis=2, keepdims=True),
        "top": top,
        "tgt_mask": tgt_mask,
        "total_tokens": total_tokens,
        "enc_caches": enc_caches,
        "enc_masks": enc_masks,
        "dec_caches": dec_caches,
        "dec_masks": dec_masks,
        "src_mask_bool": src_bool,
        "enc_top": enc_top,
    }
    return result, cache


def forward_teacher_forced(
    params, config: ModelConfig, batch: Batch, dropout_on: bool = False, seed: int = 0
) -> ForwardResult:
    result, _ = _run_forward(params, config, batch, dropout_on, seed)
    return result


def loss_and_gradients(
    params, config: ModelConfig, batch: Batch, dropout_on: bool = False, seed: int = 0
):
    """Forward pass plus exact gradients of the mean loss w.r.t. every tensor."""
    result, cache = _run_forward(params, config, batch, dropout_on, seed)
    batch = cache["batch"]
    bsz, tlen = batch.tgt_in.shape
    hdim = config.hidden_dim

    dlogits = cache["softmax"].copy()
    rows = np.arange(bsz)[:, None]
    cols = np.arange(tlen)[None, :]
    dlogits[rows, cols, batch.tgt_out] -= 1.0
    dlogits *= cache["tgt_mask"][:, :, None] / (cache["total_tokens"] * LN2)

    grads = {name: np.zeros_like(arr) for name, arr in params.items()}
    flat = dlogits.reshape(bsz * tlen, -1)
    top = cache["top"]
    grads["out_W"] += top.reshape(bsz * tlen, hdim).T @ flat
    grads["out_b"] += flat.sum(axis=0)
    d_top = (flat @ params["out_W"].T).reshape(bsz, tlen, hdim)

    dec_masks = cache["dec_masks"]
    dec_caches = cache["dec_caches"]
    d_out = d_top
    if dec_masks[-1] is not None:
        d_out = d_out * dec_masks[-1]
    d_enc_final = [
        [np.zeros((bsz, hdim)), np.zeros((bsz, hdim))]
        for _ in range(config.encoder_layers)
    ]
    zeros = np.zeros((bsz, hdim))

    def _credit_init(layer, dh0, dc0):
        src_layer = min(layer, config.encoder_layers - 1)
        d_enc_final[src_layer][0] += dh0
        d_enc_final[src_layer][1] += dc0

    for layer in range(config.decoder_layers - 1, 0, -1):
        dX, dWx, dWh, db, dh0, dc0 = _lstm_backward(
            params[f"dec{layer}_Wx"],
            params[f"dec{layer}_Wh"],
            dec_caches[layer],
            d_out,
            zeros,
            zeros,
        )
        grads[f"dec{layer}_Wx"] += dWx
        grads[f"dec{layer}_Wh"] += dWh
        grads[f"dec{layer}_b"] += db
        _credit_init(layer, dh0, dc0)
        d_out = dX
        if dec_masks[layer - 1] is not None:
            d_out = d_out * dec_masks[layer - 1]

    d_enc_top = np.zeros_like(cache["enc_top"])
    if config.use_attention:
        dY, dK, dWx, dWh, db, dWq, dWk, dv, dh0, dc0 = _attn_lstm_backward(
            params["dec0_Wx"], params["dec0_Wh"],
            params["attn_Wq"], params["attn_Wk"], params["attn_v"],
            dec_caches[0], d_out, zeros, zeros,
        )
        grads["attn_Wq"] += dWq
        grads["attn_Wk"] += dWk
        grads["attn_v"] += dv
        d_enc_top += dK
    else:
        dY, dWx, dWh, db, dh0, dc0 = _lstm_backward(
            params["dec0_Wx"], params["dec0_Wh"], dec_caches[0], d_out, zeros, zeros
        )
    grads["dec0_Wx"] += dWx
    grads["dec0_Wh"] += dWh
    grads["dec0_b"] += db
    _credit_init(0, dh0, dc0)
    np.add.at(grads["tgt_embed"], batch.tgt_in, dY)

    enc_masks = cache["enc_masks"]
    enc_caches = cache["enc_caches"]
    d_out = d_enc_top
    if enc_masks[-1] is not None:
        d_out = d_out * enc_masks[-1]
    for layer in range(config.encoder_layers - 1, -1, -1):
        dX, dWx, dWh, db, _, _ = _lstm_backward(
            params[f"enc{layer}_Wx"],
            params[f"enc{layer}_Wh"],
            enc_caches[layer],
            d_out,
            d_enc_final[layer][0],
            d_enc_final[layer][1],
        )
        grads[f"enc{layer}_Wx"] += dWx
        grads[f"enc{layer}_Wh"] += dWh
        grads[f"enc{layer}_b"] += db
        d_out = dX
        if layer > 0 and enc_masks[layer - 1] is not None:
            d_out = d_out * enc_masks[layer - 1]
    np.add.at(grads["src_embed"], batch.src, d_out)

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in tensor {name}")
    return result, grads


def backward_gradients(
    params, config: ModelConfig, batch: Batch, dropout_on: bool = False, seed: int = 0
) -> dict[str, np.ndarray]:
    """Gradients only; recomputes the forward pass with the same dropout masks."""
    _, grads = loss_and_gradients(params, config, batch, dropout_on, seed)
    return grads


def attention_weights(
    params, config: ModelConfig, decoder_state, encoder_states, source_lengths
) -> np.ndarray:
    """Attention distribution of a decoder state over encoder positions.

    Rows sum to one over each pair's real positions; PAD columns are exactly
    zero after the masked softmax.
    """
    if not config.use_attention:
        raise CapabilityError("model configuration has attention disabled")
    q = np.asarray(decoder_state, dtype=np.float64)
    K = np.asarray(encoder_states, dtype=np.float64)
    lengths = np.asarray(source_lengths)
    mask = np.arange(K.shape[1])[None, :] < lengths[:, None]
    return _attention_alpha(q @ params["attn_Wq"], np.matmul(K, params["attn_Wk"]),
                            params["attn_v"], mask)


def greedy_decode(
    params, config: ModelConfig, src_ids, max_len: int
) -> list[int]:
    """Argmax decoding from BOS until EOS or max_len; deterministic, no dropout.

    PAD and BOS are never emitted (their logits are excluded from the argmax);
    ties resolve to the smallest id. EOS terminates and is not returned.
    """
    src = np.asarray(list(src_ids), dtype=np.int64).reshape(1, -1)
    if src.size and (src.min() < 0 or src.max() >= config.src_vocab_size):
        raise EncodingError("source ids outside the model's source vocabulary")
    hdim = config.hidden_dim
    zeros = np.zeros((1, hdim))
    enc_finals = []
    inp = params["src_embed"][src] if src.size else np.zeros((1, 0, config.embed_dim))
    ones = np.ones(src.shape, dtype=np.float64)
    for layer in range(config.encoder_layers):
        hs, final, _ = _lstm_forward(
            params[f"enc{layer}_Wx"],
            params[f"enc{layer}_Wh"],
            params[f"enc{layer}_b"],
            inp,
            zeros,
            zeros,
            mask=ones,
        )
        enc_finals.append(final)
        inp = hs
    enc_top = inp
    kwk = np.matmul(enc_top, params["attn_Wk"]) if config.use_attention else None
    src_mask = np.ones((1, src.shape[1]), dtype=bool)

    states = [
        [enc_finals[min(layer, config.encoder_layers - 1)][0].copy(),
         enc_finals[min(layer, config.encoder_layers - 1)][1].copy()]
        for layer in range(config.decoder_layers)
    ]
    out: list[int] = []
    token = BOS_ID
    for _ in range(max_len):
        x = params["tgt_embed"][np.array([[token]])][:, 0, :]
        if config.use_attention:
            h_prev = states[0][0]
            if src.shape[1] > 0:
                alpha = _attention_alpha(
                    h_prev @ params["attn_Wq"], kwk, params["attn_v"], src_mask
                )
                ctx = np.einsum("bs,bsh->bh", alpha, enc_top)
            else:
                ctx = np.zeros((1, hdim))
            x = np.concatenate([x, ctx], axis=1)
        for layer in range(config.decoder_layers):
            h, c = states[layer]
            a = (
                x @ params[f"dec{layer}_Wx"]
                + h @ params[f"dec{layer}_Wh"]
                + params[f"dec{layer}_b"]
            )
            i = _sigmoid(a[:, :hdim])
            f = _sigmoid(a[:, hdim : 2 * hdim])
            o = _sigmoid(a[:, 2 * hdim : 3 * hdim])
            g = np.tanh(a[:, 3 * hdim :])
            c = f * c + i * g
            h = o * np.tanh(c)
            states[layer] = [h, c]
            x = h
        logits = (x @ params["out_W"] + params["out_b"])[0]
        logits = logits.copy()
        logits[PAD_ID] = -np.inf
        logits[BOS_ID] = -np.inf
        token = int(np.argmax(logits))
        if token == EOS_ID:
            break
        out.append(token)
    return out
