"""The learnable network and its exact gradients.

Architecture: source/target embeddings, a stacked bidirectional LSTM
encoder, a stacked LSTM decoder initialized through a linear bridge from
the encoder's final states, bilinear ("general") global attention over the
encoder states, a tanh combination layer, and a projection to the target
vocabulary.  Everything is plain numpy with hand-written backpropagation;
gradients are exact for the realized dropout masks and are checked against
finite differences in the test suite.

Weights are computed with in float64 but kept on the float32 grid (snapped
after init and after every update) so that the float32 checkpoint format
round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict, dataclass

import numpy as np

from .snippets import PAD_ID, Vocab

CHECKPOINT_MAGIC = b"LMTG"
CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    """Unreadable, corrupt or incompatible checkpoint file."""


@dataclass(frozen=True)
class ModelConfig:
    source_vocab_size: int
    target_vocab_size: int
    embedding_size: int = 700
    hidden_units: int = 500
    layers: int = 2
    dropout_p: float = 0.3
    attention: str = "general"
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("source_vocab_size", "target_vocab_size", "embedding_size",
                     "hidden_units", "layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")
        if self.attention != "general":
            raise ValueError(f"unsupported attention score {self.attention!r}")


def _param_shapes(cfg: ModelConfig):
    """Parameter names and shapes in declared (checkpoint) order."""
    e, h, g = cfg.embedding_size, cfg.hidden_units, 4 * cfg.hidden_units
    shapes: dict[str, tuple[int, ...]] = {}
    shapes["src_embed"] = (cfg.source_vocab_size, e)
    shapes["tgt_embed"] = (cfg.target_vocab_size, e)
    for layer in range(cfg.layers):
        din = e if layer == 0 else 2 * h
        for direction in ("fwd", "bwd"):
            shapes[f"enc{layer}_{direction}_Wx"] = (din, g)
            shapes[f"enc{layer}_{direction}_Wh"] = (h, g)
            shapes[f"enc{layer}_{direction}_b"] = (g,)
    for layer in range(cfg.layers):
        din = e if layer == 0 else h
        shapes[f"dec{layer}_Wx"] = (din, g)
        shapes[f"dec{layer}_Wh"] = (h, g)
        shapes[f"dec{layer}_b"] = (g,)
    for layer in range(cfg.layers):
        shapes[f"bridge{layer}_h"] = (2 * h, h)
        shapes[f"bridge{layer}_c"] = (2 * h, h)
    shapes["attn_W"] = (h, 2 * h)
    shapes["combo_W"] = (3 * h, h)
    shapes["out_W"] = (h, cfg.target_vocab_size)
    shapes["out_b"] = (cfg.target_vocab_size,)
    return shapes


def _snap32(arr):
    # restrict values to the float32 grid; computation stays float64
    return arr.astype(np.float32).astype(np.float64)


class Model:
    """Configuration plus named parameter tensors in declared order."""

    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params

    def copy(self) -> "Model":
        return Model(self.config, {k: v.copy() for k, v in self.params.items()})


Gradients = dict  # name -> array, mirroring Model.params


def init_model(cfg: ModelConfig) -> Model:
    """Uniform [-0.1, 0.1] init from cfg.rng_seed; LSTM forget biases set to 1."""
    rng = np.random.default_rng(cfg.rng_seed)
    params = {}
    for name, shape in _param_shapes(cfg).items():
        params[name] = _snap32(rng.uniform(-0.1, 0.1, size=shape))
    h = cfg.hidden_units
    for name in params:
        if name.endswith("_b") and name != "out_b":
            params[name][h:2 * h] = 1.0
    return Model(cfg, params)


def zero_gradients(model: Model) -> Gradients:
    return {k: np.zeros_like(v) for k, v in model.params.items()}


@dataclass
class Batch:
    """Padded id matrices with lengths and masks.

    ``src`` is (B, S) and ``tgt`` (B, T) with targets already framed by the
    start/end ids; ``loss_mask`` is (B, T-1) and zero exactly on padding.
    """

    src: np.ndarray
    src_lengths: np.ndarray
    src_mask: np.ndarray
    tgt: np.ndarray | None = None
    tgt_lengths: np.ndarray | None = None
    loss_mask: np.ndarray | None = None

    @property
    def size(self):
        return self.src.shape[0]


def make_batch(pairs) -> Batch:
    """Pad a list of (source ids, optional framed target ids) into a Batch."""
    if not pairs:
        raise ValueError("empty batch")
    srcs = [p[0] for p in pairs]
    tgts = [p[1] for p in pairs]
    s_max = max(len(s) for s in srcs)
    src = np.full((len(pairs), s_max), PAD_ID, dtype=np.int64)
    src_lengths = np.array([len(s) for s in srcs], dtype=np.int64)
    for i, s in enumerate(srcs):
        src[i, : len(s)] = s
    src_mask = (np.arange(s_max)[None, :] < src_lengths[:, None]).astype(np.float64)
    if all(t is None for t in tgts):
        return Batch(src, src_lengths, src_mask)
    if any(t is None for t in tgts):
        raise ValueError("mixed batch: some examples lack targets")
    t_max = max(len(t) for t in tgts)
    tgt = np.full((len(pairs), t_max), PAD_ID, dtype=np.int64)
    tgt_lengths = np.array([len(t) for t in tgts], dtype=np.int64)
    for i, t in enumerate(tgts):
        tgt[i, : len(t)] = t
    loss_mask = (np.arange(t_max - 1)[None, :] < tgt_lengths[:, None] - 1).astype(np.float64)
    return Batch(src, src_lengths, src_mask, tgt, tgt_lengths, loss_mask)


# ---------------------------------------------------------------------------
# primitives


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _log_softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    return logits - m - np.log(np.exp(logits - m).sum(axis=-1, keepdims=True))


def _softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)


def _lstm_step(Wx, Wh, b, x, h, c):
    hid = Wh.shape[0]
    z = x @ Wx + h @ Wh + b
    i = _sigmoid(z[:, :hid])
    f = _sigmoid(z[:, hid:2 * hid])
    g = np.tanh(z[:, 2 * hid:3 * hid])
    o = _sigmoid(z[:, 3 * hid:])
    c_new = f * c + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    return h_new, c_new, (i, f, g, o, tanh_c)


def _lstm_forward(Wx, Wh, b, inputs, mask=None, reverse=False, h0=None, c0=None):
    """Run one LSTM layer over (B, T, Din) inputs.

    ``mask`` freezes the state at padded positions so the final state is the
    state at each row's last real position; ``reverse`` processes time back
    to front.  Returns outputs (B, T, H), the final (h, c), and a cache for
    the backward pass.
    """
    bsz, steps, _ = inputs.shape
    hid = Wh.shape[0]
    h = np.zeros((bsz, hid)) if h0 is None else h0
    c = np.zeros((bsz, hid)) if c0 is None else c0
    outputs = np.zeros((bsz, steps, hid))
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    trace = []
    for t in order:
        x = inputs[:, t, :]
        h_new, c_new, (i, f, g, o, tanh_c) = _lstm_step(Wx, Wh, b, x, h, c)
        if mask is not None:
            m = mask[:, t][:, None]
            h_new = m * h_new + (1.0 - m) * h
            c_new = m * c_new + (1.0 - m) * c
        else:
            m = None
        trace.append((t, x, h, c, i, f, g, o, tanh_c, m))
        h, c = h_new, c_new
        outputs[:, t, :] = h
    return outputs, (h, c), trace


def _lstm_backward(Wx, Wh, d_outputs, trace, din, dh_final=None, dc_final=None):
    """Backpropagate through one LSTM layer.

    ``d_outputs`` holds gradients w.r.t. the per-position outputs;
    ``dh_final``/``dc_final`` add gradient flowing into the final state
    (e.g. from the encoder-decoder bridge).  Returns gradients for the
    inputs, the three weight tensors, and the initial state.
    """
    bsz, steps, hid = d_outputs.shape
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * hid)
    d_inputs = np.zeros((bsz, steps, din))
    dh = np.zeros((bsz, hid)) if dh_final is None else dh_final.copy()
    dc = np.zeros((bsz, hid)) if dc_final is None else dc_final.copy()
    for (t, x, h_prev, c_prev, i, f, g, o, tanh_c, m) in reversed(trace):
        dh_t = dh + d_outputs[:, t, :]
        dc_t = dc
        if m is not None:
            dh_in = dh_t * m
            dc_in = dc_t * m
            dh_skip = dh_t * (1.0 - m)
            dc_skip = dc_t * (1.0 - m)
        else:
            dh_in = dh_t
            dc_in = dc_t
            dh_skip = 0.0
            dc_skip = 0.0
        do = dh_in * tanh_c
        dc_full = dc_in + dh_in * o * (1.0 - tanh_c ** 2)
        di = dc_full * g
        df = dc_full * c_prev
        dg = dc_full * i
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g ** 2), do * o * (1.0 - o)],
            axis=1,
        )
        dWx += x.T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        d_inputs[:, t, :] = dz @ Wx.T
        dh = dz @ Wh.T + dh_skip
        dc = dc_full * f + dc_skip
    return d_inputs, dWx, dWh, db, dh, dc


def _dropout_mask(rng, shape, p):
    return (rng.random(shape) >= p).astype(np.float64) / (1.0 - p)


def _check_ids(ids, size, what):
    if ids.size and int(ids.max()) >= size:
        raise ValueError(f"{what} id {int(ids.max())} out of range (vocab size {size})")


# ---------------------------------------------------------------------------
# forward


def _encoder_forward(model, src, src_mask, train, rng):
    cfg = model.config
    p = model.params
    _check_ids(src, cfg.source_vocab_size, "source")
    inputs = p["src_embed"][src]
    layer_caches = []
    finals = []
    for layer in range(cfg.layers):
        drop = None
        if layer > 0 and train and cfg.dropout_p > 0:
            drop = _dropout_mask(rng, inputs.shape, cfg.dropout_p)
            inputs = inputs * drop
        out_f, (hf, cf), trace_f = _lstm_forward(
            p[f"enc{layer}_fwd_Wx"], p[f"enc{layer}_fwd_Wh"], p[f"enc{layer}_fwd_b"],
            inputs, mask=src_mask, reverse=False)
        out_b, (hb, cb), trace_b = _lstm_forward(
            p[f"enc{layer}_bwd_Wx"], p[f"enc{layer}_bwd_Wh"], p[f"enc{layer}_bwd_b"],
            inputs, mask=src_mask, reverse=True)
        layer_caches.append((trace_f, trace_b, drop, inputs.shape[2]))
        finals.append((hf, cf, hb, cb))
        inputs = np.concatenate([out_f, out_b], axis=2)
    states = inputs * src_mask[:, :, None]
    return states, finals, layer_caches


def _bridge_forward(model, finals):
    p = model.params
    init = []
    for layer in range(model.config.layers):
        hf, cf, hb, cb = finals[layer]
        eh = np.concatenate([hf, hb], axis=1)
        ec = np.concatenate([cf, cb], axis=1)
        init.append((eh @ p[f"bridge{layer}_h"], ec @ p[f"bridge{layer}_c"], eh, ec))
    return init


def _decoder_forward(model, tgt_in, init, train, rng):
    cfg = model.config
    p = model.params
    _check_ids(tgt_in, cfg.target_vocab_size, "target")
    inputs = p["tgt_embed"][tgt_in]
    layer_caches = []
    for layer in range(cfg.layers):
        drop = None
        if layer > 0 and train and cfg.dropout_p > 0:
            drop = _dropout_mask(rng, inputs.shape, cfg.dropout_p)
            inputs = inputs * drop
        h0, c0 = init[layer][0], init[layer][1]
        out, _, trace = _lstm_forward(
            p[f"dec{layer}_Wx"], p[f"dec{layer}_Wh"], p[f"dec{layer}_b"],
            inputs, mask=None, reverse=False, h0=h0, c0=c0)
        layer_caches.append((trace, drop, inputs.shape[2]))
        inputs = out
    return inputs, layer_caches


def _attention_forward(model, dec_out, enc_states, src_mask):
    p = model.params
    proj = dec_out @ p["attn_W"]
    scores = np.einsum("btk,bsk->bts", proj, enc_states)
    scores = np.where(src_mask[:, None, :] > 0, scores, -np.inf)
    weights = _softmax(scores)
    context = np.einsum("bts,bsk->btk", weights, enc_states)
    return context, weights, proj


def _forward(model, batch, train, rng):
    """Full teacher-forced pass; returns loss and a cache for backward."""
    if batch.tgt is None or batch.loss_mask is None:
        raise ValueError("forward pass requires targets")
    n_tokens = batch.loss_mask.sum()
    if n_tokens == 0:
        raise ValueError("empty loss mask")
    cfg = model.config
    p = model.params
    if train and cfg.dropout_p > 0 and rng is None:
        raise ValueError("dropout is active; a random generator is required")

    enc_states, finals, enc_caches = _encoder_forward(model, batch.src, batch.src_mask, train, rng)
    init = _bridge_forward(model, finals)
    tgt_in = batch.tgt[:, :-1]
    dec_out, dec_caches = _decoder_forward(model, tgt_in, init, train, rng)
    context, weights, proj = _attention_forward(model, dec_out, enc_states, batch.src_mask)

    combined = np.concatenate([context, dec_out], axis=2)
    tilde = np.tanh(combined @ p["combo_W"])
    out_drop = None
    if train and cfg.dropout_p > 0:
        out_drop = _dropout_mask(rng, tilde.shape, cfg.dropout_p)
        tilde_d = tilde * out_drop
    else:
        tilde_d = tilde
    logits = tilde_d @ p["out_W"] + p["out_b"]

    gold = batch.tgt[:, 1:]
    log_probs = _log_softmax(logits)
    nll = -np.take_along_axis(log_probs, gold[:, :, None], axis=2)[:, :, 0]
    loss = float((nll * batch.loss_mask).sum() / n_tokens)

    cache = dict(
        enc_states=enc_states, finals=finals, enc_caches=enc_caches, init=init,
        tgt_in=tgt_in, dec_out=dec_out, dec_caches=dec_caches,
        context=context, weights=weights, proj=proj,
        combined=combined, tilde=tilde, out_drop=out_drop, tilde_d=tilde_d,
        logits=logits, gold=gold, n_tokens=n_tokens,
    )
    return loss, cache


def forward_loss(model, batch, train_mode=False, rng=None) -> float:
    """Mean masked token cross-entropy (nats) under teacher forcing."""
    loss, _ = _forward(model, batch, train_mode, rng)
    return loss


def encode_source(model, batch, train_mode=False, rng=None):
    """Per-position encoder states (B, S, 2*hidden) plus per-layer final states."""
    if train_mode and model.config.dropout_p > 0 and rng is None:
        raise ValueError("dropout is active; a random generator is required")
    states, finals, _ = _encoder_forward(model, batch.src, batch.src_mask, train_mode, rng)
    return states, finals


def attend(model, decoder_state, encoder_states, source_mask=None):
    """Bilinear attention: masked softmax scores and the weighted context.

    Accepts a single state (H,) with states (S, 2H), or batches (B, H) with
    (B, S, 2H).  Returns (context, weights).
    """
    single = decoder_state.ndim == 1
    dec = decoder_state[None, :] if single else decoder_state
    shared = encoder_states.ndim == 2
    enc = encoder_states[None, :, :] if shared else encoder_states
    if shared and dec.shape[0] > 1:
        enc = np.broadcast_to(enc, (dec.shape[0],) + enc.shape[1:])
    if source_mask is None:
        mask = np.ones(enc.shape[:2])
    else:
        mask = source_mask[None, :] if source_mask.ndim == 1 else source_mask
        mask = np.broadcast_to(mask, enc.shape[:2])
    if not (mask > 0).any(axis=1).all():
        raise ValueError("attention over fully masked source")
    scores = np.einsum("bk,bsk->bs", dec @ model.params["attn_W"], enc)
    scores = np.where(mask > 0, scores, -np.inf)
    weights = _softmax(scores)
    context = np.einsum("bs,bsk->bk", weights, enc)
    if single:
        return context[0], weights[0]
    return context, weights


def init_decoder_state(model, finals):
    """Initial per-layer (h, c) decoder states from the bridge projection."""
    return [(h0, c0) for h0, c0, _, _ in _bridge_forward(model, finals)]


def decode_step(model, prev_ids, state, encoder_states, source_mask=None,
                train_mode=False, rng=None):
    """One inference step: embed previous ids, advance the LSTM stack,
    attend, combine, project.  Returns (logits (B, V), new state)."""
    cfg = model.config
    p = model.params
    prev_ids = np.asarray(prev_ids, dtype=np.int64)
    _check_ids(prev_ids, cfg.target_vocab_size, "target")
    if train_mode and cfg.dropout_p > 0 and rng is None:
        raise ValueError("dropout is active; a random generator is required")
    x = p["tgt_embed"][prev_ids]
    new_state = []
    for layer, (h, c) in enumerate(state):
        if layer > 0 and train_mode and cfg.dropout_p > 0:
            x = x * _dropout_mask(rng, x.shape, cfg.dropout_p)
        h_new, c_new, _ = _lstm_step(
            p[f"dec{layer}_Wx"], p[f"dec{layer}_Wh"], p[f"dec{layer}_b"], x, h, c)
        new_state.append((h_new, c_new))
        x = h_new
    context, _ = attend(model, x, encoder_states, source_mask)
    tilde = np.tanh(np.concatenate([context, x], axis=1) @ p["combo_W"])
    if train_mode and cfg.dropout_p > 0:
        tilde = tilde * _dropout_mask(rng, tilde.shape, cfg.dropout_p)
    logits = tilde @ p["out_W"] + p["out_b"]
    return logits, new_state


# ---------------------------------------------------------------------------
# backward


def backward(model, batch, rng=None):
    """Loss and exact gradients for every parameter tensor.

    Dropout masks are drawn once from ``rng`` and the gradients are exact
    for that realization.
    """
    cfg = model.config
    p = model.params
    loss, cache = _forward(model, batch, True, rng)
    grads = zero_gradients(model)

    # cross-entropy -> logits
    d_logits = _softmax(cache["logits"])
    np.subtract.at(d_logits.reshape(-1, cfg.target_vocab_size),
                   (np.arange(cache["gold"].size), cache["gold"].ravel()), 1.0)
    d_logits *= (batch.loss_mask / cache["n_tokens"])[:, :, None]

    tilde_d = cache["tilde_d"]
    hid = cfg.hidden_units
    flat = lambda a: a.reshape(-1, a.shape[-1])
    grads["out_W"] += flat(tilde_d).T @ flat(d_logits)
    grads["out_b"] += d_logits.sum(axis=(0, 1))
    d_tilde = d_logits @ p["out_W"].T
    if cache["out_drop"] is not None:
        d_tilde = d_tilde * cache["out_drop"]
    d_pre = d_tilde * (1.0 - cache["tilde"] ** 2)
    grads["combo_W"] += flat(cache["combined"]).T @ flat(d_pre)
    d_combined = d_pre @ p["combo_W"].T
    d_context = d_combined[:, :, :2 * hid]
    d_dec_out = d_combined[:, :, 2 * hid:].copy()

    # attention
    enc_states = cache["enc_states"]
    weights = cache["weights"]
    d_weights = np.einsum("btk,bsk->bts", d_context, enc_states)
    d_enc = np.einsum("bts,btk->bsk", weights, d_context)
    d_scores = weights * (d_weights - (d_weights * weights).sum(axis=2, keepdims=True))
    d_proj = np.einsum("bts,bsk->btk", d_scores, enc_states)
    d_enc += np.einsum("bts,btk->bsk", d_scores, cache["proj"])
    grads["attn_W"] += flat(cache["dec_out"]).T @ flat(d_proj)
    d_dec_out += d_proj @ p["attn_W"].T

    # decoder stack
    d_init = [None] * cfg.layers
    d_cursor = d_dec_out
    for layer in range(cfg.layers - 1, -1, -1):
        trace, drop, din = cache["dec_caches"][layer]
        d_inputs, dWx, dWh, db, dh0, dc0 = _lstm_backward(
            p[f"dec{layer}_Wx"], p[f"dec{layer}_Wh"], d_cursor, trace, din)
        grads[f"dec{layer}_Wx"] += dWx
        grads[f"dec{layer}_Wh"] += dWh
        grads[f"dec{layer}_b"] += db
        d_init[layer] = (dh0, dc0)
        if drop is not None:
            d_inputs = d_inputs * drop
        d_cursor = d_inputs
    np.add.at(grads["tgt_embed"], cache["tgt_in"], d_cursor)

    # bridge
    d_finals = []
    for layer in range(cfg.layers):
        dh0, dc0 = d_init[layer]
        _, _, eh, ec = cache["init"][layer]
        grads[f"bridge{layer}_h"] += eh.T @ dh0
        grads[f"bridge{layer}_c"] += ec.T @ dc0
        deh = dh0 @ p[f"bridge{layer}_h"].T
        dec_ = dc0 @ p[f"bridge{layer}_c"].T
        d_finals.append((deh[:, :hid], dec_[:, :hid], deh[:, hid:], dec_[:, hid:]))

    # encoder stack
    d_cursor = d_enc * batch.src_mask[:, :, None]
    for layer in range(cfg.layers - 1, -1, -1):
        trace_f, trace_b, drop, din = cache["enc_caches"][layer]
        dhf, dcf, dhb, dcb = d_finals[layer]
        d_in_f, dWx, dWh, db, _, _ = _lstm_backward(
            p[f"enc{layer}_fwd_Wx"], p[f"enc{layer}_fwd_Wh"],
            d_cursor[:, :, :hid], trace_f, din, dh_final=dhf, dc_final=dcf)
        grads[f"enc{layer}_fwd_Wx"] += dWx
        grads[f"enc{layer}_fwd_Wh"] += dWh
        grads[f"enc{layer}_fwd_b"] += db
        d_in_b, dWx, dWh, db, _, _ = _lstm_backward(
            p[f"enc{layer}_bwd_Wx"], p[f"enc{layer}_bwd_Wh"],
            d_cursor[:, :, hid:], trace_b, din, dh_final=dhb, dc_final=dcb)
        grads[f"enc{layer}_bwd_Wx"] += dWx
        grads[f"enc{layer}_bwd_Wh"] += dWh
        grads[f"enc{layer}_bwd_b"] += db
        d_inputs = d_in_f + d_in_b
        if drop is not None:
            d_inputs = d_inputs * drop
        d_cursor = d_inputs
    np.add.at(grads["src_embed"], batch.src, d_cursor)

    return loss, grads


def sgd_update(model, grads, lr, clip_norm=None):
    """Clip gradients to a global norm, then take one SGD step in place."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    sq = 0.0
    for g in grads.values():
        sq += float((g * g).sum())
    norm = float(np.sqrt(sq))
    if not np.isfinite(norm):
        raise ValueError("non-finite gradients")
    scale = 1.0
    if clip_norm is not None and clip_norm > 0 and norm > clip_norm:
        scale = clip_norm / norm
    for name, param in model.params.items():
        param -= lr * scale * grads[name]
        # stay on the float32 grid so checkpoints round-trip exactly
        param[...] = _snap32(param)
    return model


# ---------------------------------------------------------------------------
# persistence


def save_model(model: Model, vocab: Vocab, path):
    """Write a versioned checkpoint: header, float32 tensors, CRC32 trailer."""
    header = json.dumps({
        "config": asdict(model.config),
        "source_symbols": list(vocab.source_symbols),
        "target_symbols": list(vocab.target_symbols),
        "min_freq": vocab.min_freq,
    }).encode("utf-8")
    buf = bytearray()
    buf += CHECKPOINT_MAGIC
    buf += struct.pack("<I", CHECKPOINT_VERSION)
    buf += struct.pack("<Q", len(header))
    buf += header
    for tensor in model.params.values():
        buf += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    with open(path, "wb") as f:
        f.write(bytes(buf))


def load_model(path, expect_vocab: Vocab | None = None):
    """Read a checkpoint back into (Model, Vocab); verifies checksum/version."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 4 + 8 + 4:
        raise CheckpointError("checkpoint file truncated")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise CheckpointError("checkpoint checksum mismatch (corrupt or truncated file)")
    if body[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, header_len = struct.unpack("<IQ", body[4:16])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version}")
    try:
        header = json.loads(body[16:16 + header_len].decode("utf-8"))
        cfg = ModelConfig(**header["config"])
        vocab = Vocab(header["source_symbols"], header["target_symbols"], header["min_freq"])
    except (KeyError, ValueError, UnicodeDecodeError) as err:
        raise CheckpointError(f"malformed checkpoint header: {err}") from None
    if cfg.source_vocab_size != vocab.source_size or cfg.target_vocab_size != vocab.target_size:
        raise CheckpointError("checkpoint config and stored vocabulary disagree")
    if expect_vocab is not None and expect_vocab != vocab:
        raise CheckpointError("checkpoint vocabulary does not match the provided one")
    data = body[16 + header_len:]
    params = {}
    offset = 0
    for name, shape in _param_shapes(cfg).items():
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(data):
            raise CheckpointError("checkpoint tensor data truncated")
        params[name] = np.frombuffer(data[offset:end], dtype="<f4").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise CheckpointError("trailing bytes after tensor data")
    return Model(cfg, params), vocab
