"""Recurrent variational autoencoder over melody token sequences.

Pure-numpy implementation with manual backpropagation through time, so the
whole training path is deterministic and checkable against finite
differences.  A bidirectional gated recurrent encoder feeds diagonal
Gaussian latent heads; the decoder is a flat recurrent net conditioned on
the latent vector for 2-bar spans, and for 4-bar spans a conductor pass
emits one conditioning vector per bar (hierarchical decoding).

Two generation controls: temperature divides the output logits before
sampling (optionally also scales the latent prior draw), and similarity
linearly blends the input's latent mean with a prior draw.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from ..melody import (HOLD, REST, STEPS_PER_BAR, VOCAB_SIZE, MelodySequence)

LOG_VAR_CLAMP = 10.0


class ModelError(Exception):
    pass


class TrainingDivergenceError(ModelError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    bars: int = 2
    vocab: int = VOCAB_SIZE
    embed_dim: int = 32
    enc_hidden: int = 128
    latent_dim: int = 16
    dec_hidden: int = 128
    conductor_dim: int = 64  # only used for the 4-bar hierarchical decoder
    seed: int = 0
    temperature_scales_latent: bool = False

    def __post_init__(self):
        if self.bars not in (2, 4):
            raise ValueError("bars must be 2 or 4")
        for name in ("vocab", "embed_dim", "enc_hidden", "latent_dim",
                     "dec_hidden", "conductor_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def steps(self) -> int:
        return self.bars * STEPS_PER_BAR

    @property
    def cond_dim(self) -> int:
        return self.latent_dim if self.bars == 2 else self.conductor_dim


@dataclass(frozen=True)
class PartnerParams:
    temperature: float = 1.0
    similarity: float = 0.9

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if not 0.0 <= self.similarity <= 1.0:
            raise ValueError("similarity must be in [0, 1]")


TEMPERATURE_PRESETS = {"low": 0.5, "high": 1.5}
SIMILARITY_PRESETS = {"low": 0.3, "high": 0.9}


@dataclass(frozen=True)
class LatentCode:
    mu: np.ndarray
    log_var: np.ndarray


@dataclass(frozen=True)
class BetaSchedule:
    start: float = 0.0
    end: float = 0.2
    ramp_steps: int = 2000

    def at(self, step: int) -> float:
        if self.ramp_steps <= 0:
            return self.end
        frac = min(1.0, step / self.ramp_steps)
        return self.start + frac * (self.end - self.start)


@dataclass
class ModelState:
    config: ModelConfig
    weights: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray]
    adam_v: dict[str, np.ndarray]
    step: int = 0
    beta_schedule: BetaSchedule = field(default_factory=BetaSchedule)


# ---------------------------------------------------------------------------
# initialization

def _gru_shapes(prefix: str, in_dim: int, hidden: int) -> list[tuple[str, tuple]]:
    return [(f"{prefix}_W", (in_dim, 3 * hidden)),
            (f"{prefix}_U", (hidden, 3 * hidden)),
            (f"{prefix}_b", (3 * hidden,))]


def weight_shapes(config: ModelConfig) -> list[tuple[str, tuple]]:
    c = config
    shapes: list[tuple[str, tuple]] = [("embed", (c.vocab, c.embed_dim))]
    shapes += _gru_shapes("enc_fw", c.embed_dim, c.enc_hidden)
    shapes += _gru_shapes("enc_bw", c.embed_dim, c.enc_hidden)
    shapes += [("mu_W", (2 * c.enc_hidden, c.latent_dim)),
               ("mu_b", (c.latent_dim,)),
               ("lv_W", (2 * c.enc_hidden, c.latent_dim)),
               ("lv_b", (c.latent_dim,))]
    if c.bars == 4:
        shapes += _gru_shapes("con", c.latent_dim, c.conductor_dim)
        shapes += [("con_init_W", (c.latent_dim, c.conductor_dim)),
                   ("con_init_b", (c.conductor_dim,))]
    shapes += [("dec_init_W", (c.cond_dim, c.dec_hidden)),
               ("dec_init_b", (c.dec_hidden,))]
    shapes += _gru_shapes("dec", c.embed_dim + c.cond_dim, c.dec_hidden)
    shapes += [("out_W", (c.dec_hidden, c.vocab)),
               ("out_b", (c.vocab,))]
    return shapes


def param_count(config: ModelConfig) -> int:
    return sum(math.prod(shape) for _, shape in weight_shapes(config))


def init_model(config: ModelConfig) -> ModelState:
    """Glorot-uniform weights from a counter-based generator; zero biases."""
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    weights: dict[str, np.ndarray] = {}
    for name, shape in weight_shapes(config):
        if len(shape) == 1:
            weights[name] = np.zeros(shape)
        else:
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            weights[name] = rng.uniform(-limit, limit, size=shape)
    zeros = {name: np.zeros_like(w) for name, w in weights.items()}
    return ModelState(config=config, weights=weights,
                      adam_m=copy.deepcopy(zeros), adam_v=copy.deepcopy(zeros))


# ---------------------------------------------------------------------------
# gated recurrent cell (update/reset gates), batched over time

def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _gru_forward(W, U, b, xs, h0):
    """xs: (T, B, D), h0: (B, H) -> hs (T, B, H) plus per-step cache."""
    H = h0.shape[1]
    h = h0
    hs = np.empty((xs.shape[0], xs.shape[1], H))
    cache = []
    for t in range(xs.shape[0]):
        x = xs[t]
        azr = x @ W[:, :2 * H] + h @ U[:, :2 * H] + b[:2 * H]
        z = _sigmoid(azr[:, :H])
        r = _sigmoid(azr[:, H:])
        rh = r * h
        htil = np.tanh(x @ W[:, 2 * H:] + rh @ U[:, 2 * H:] + b[2 * H:])
        h_new = (1.0 - z) * h + z * htil
        cache.append((x, h, z, r, rh, htil))
        hs[t] = h_new
        h = h_new
    return hs, cache


def _gru_backward(W, U, b, cache, d_hs, dh_last):
    """Reverse-mode pass; d_hs may be None.  Returns grads and dx, dh0."""
    H = dh_last.shape[1]
    T = len(cache)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros_like(b)
    dxs = np.empty((T, cache[0][0].shape[0], W.shape[0]))
    dh = dh_last.copy()
    for t in range(T - 1, -1, -1):
        if d_hs is not None:
            dh = dh + d_hs[t]
        x, h_prev, z, r, rh, htil = cache[t]
        dz = dh * (htil - h_prev)
        dhtil = dh * z
        dh_prev = dh * (1.0 - z)
        dac = dhtil * (1.0 - htil * htil)
        dW[:, 2 * H:] += x.T @ dac
        dU[:, 2 * H:] += rh.T @ dac
        db[2 * H:] += dac.sum(axis=0)
        drh = dac @ U[:, 2 * H:].T
        dr = drh * h_prev
        dh_prev += drh * r
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        dazr = np.concatenate([daz, dar], axis=1)
        dW[:, :2 * H] += x.T @ dazr
        dU[:, :2 * H] += h_prev.T @ dazr
        db[:2 * H] += dazr.sum(axis=0)
        dxs[t] = dac @ W[:, 2 * H:].T + dazr @ W[:, :2 * H].T
        dh = dh_prev + dazr @ U[:, :2 * H].T
    return dW, dU, db, dxs, dh


# ---------------------------------------------------------------------------
# encoder

def _encode_batch(state: ModelState, tokens: np.ndarray):
    """tokens: (T, B) int array.  Returns mu, lv (clamped), and a cache."""
    w = state.weights
    T, B = tokens.shape
    xs = w["embed"][tokens]  # (T, B, E)
    h0 = np.zeros((B, state.config.enc_hidden))
    hs_fw, cache_fw = _gru_forward(w["enc_fw_W"], w["enc_fw_U"], w["enc_fw_b"], xs, h0)
    hs_bw, cache_bw = _gru_forward(w["enc_bw_W"], w["enc_bw_U"], w["enc_bw_b"],
                                   xs[::-1], h0)
    hcat = np.concatenate([hs_fw[-1], hs_bw[-1]], axis=1)
    mu = hcat @ w["mu_W"] + w["mu_b"]
    lv_raw = hcat @ w["lv_W"] + w["lv_b"]
    lv = np.clip(lv_raw, -LOG_VAR_CLAMP, LOG_VAR_CLAMP)
    cache = {"tokens": tokens, "xs": xs, "cache_fw": cache_fw,
             "cache_bw": cache_bw, "hcat": hcat, "lv_raw": lv_raw}
    return mu, lv, cache


def encode(state: ModelState, seq: MelodySequence) -> LatentCode:
    if seq.bars != state.config.bars:
        raise ModelError(f"sequence spans {seq.bars} bars, model expects "
                         f"{state.config.bars}")
    tokens = np.asarray(seq.codes, dtype=np.int64)[:, None]
    mu, lv, _ = _encode_batch(state, tokens)
    return LatentCode(mu=mu[0], log_var=lv[0])


def reparameterize(code: LatentCode, noise: np.ndarray) -> np.ndarray:
    noise = np.asarray(noise, dtype=float)
    if noise.shape != code.mu.shape:
        raise ModelError("noise length must equal latent_dim")
    return code.mu + np.exp(0.5 * code.log_var) * noise


def kl_divergence(code: LatentCode) -> float:
    mu, lv = code.mu, code.log_var
    return float(0.5 * np.sum(mu * mu + np.exp(lv) - lv - 1.0))


# ---------------------------------------------------------------------------
# decoder

def _segments(config: ModelConfig) -> list[tuple[int, int]]:
    if config.bars == 2:
        return [(0, config.steps)]
    return [(b * STEPS_PER_BAR, (b + 1) * STEPS_PER_BAR) for b in range(config.bars)]


def _conductor_forward(state: ModelState, z: np.ndarray):
    """z: (B, L) -> per-bar conditioning vectors (bars, B, C) and cache."""
    w = state.weights
    pre = z @ w["con_init_W"] + w["con_init_b"]
    h0 = np.tanh(pre)
    xs = np.broadcast_to(z, (state.config.bars,) + z.shape).copy()
    hs, cache = _gru_forward(w["con_W"], w["con_U"], w["con_b"], xs, h0)
    return hs, {"h0": h0, "z": z, "gru": cache}


def _decoder_teacher_forward(state: ModelState, tokens: np.ndarray, z: np.ndarray):
    """Teacher-forced decode.  tokens: (T, B), z: (B, L) -> logits (T, B, V)."""
    w = state.weights
    c = state.config
    T, B = tokens.shape
    E = c.embed_dim
    prev_emb = np.zeros((T, B, E))
    prev_emb[1:] = w["embed"][tokens[:-1]]

    if c.bars == 4:
        con_hs, con_cache = _conductor_forward(state, z)
        conds = con_hs  # (bars, B, C)
    else:
        con_cache = None
        conds = z[None, :, :]  # single segment conditioned on z directly

    hs_all = np.empty((T, B, c.dec_hidden))
    seg_caches = []
    for i, (s0, s1) in enumerate(_segments(c)):
        cond = conds[i]
        pre0 = cond @ w["dec_init_W"] + w["dec_init_b"]
        h0 = np.tanh(pre0)
        cond_tiled = np.broadcast_to(cond, (s1 - s0,) + cond.shape)
        xs = np.concatenate([prev_emb[s0:s1], cond_tiled], axis=2)
        hs, cache = _gru_forward(w["dec_W"], w["dec_U"], w["dec_b"], xs, h0)
        hs_all[s0:s1] = hs
        seg_caches.append({"h0": h0, "cond": cond, "gru": cache})
    logits = hs_all @ w["out_W"] + w["out_b"]
    cache = {"tokens": tokens, "prev_emb": prev_emb, "hs_all": hs_all,
             "segs": seg_caches, "con": con_cache, "z": z}
    return logits, cache


def _decoder_backward(state: ModelState, cache, dlogits, grads):
    """Accumulate decoder (and conductor) gradients; returns dz (B, L)."""
    w = state.weights
    c = state.config
    tokens = cache["tokens"]
    hs_all = cache["hs_all"]
    T, B, _ = dlogits.shape

    grads["out_W"] += hs_all.reshape(T * B, -1).T @ dlogits.reshape(T * B, -1)
    grads["out_b"] += dlogits.sum(axis=(0, 1))
    d_hs_all = dlogits @ w["out_W"].T

    dconds = []
    demb_prev = np.zeros((T, B, c.embed_dim))
    for i, (s0, s1) in enumerate(_segments(c)):
        seg = cache["segs"][i]
        dW, dU, db, dxs, dh0 = _gru_backward(
            w["dec_W"], w["dec_U"], w["dec_b"], seg["gru"],
            d_hs_all[s0:s1], np.zeros((B, c.dec_hidden)))
        grads["dec_W"] += dW
        grads["dec_U"] += dU
        grads["dec_b"] += db
        demb_prev[s0:s1] = dxs[:, :, :c.embed_dim]
        dcond = dxs[:, :, c.embed_dim:].sum(axis=0)
        dpre0 = dh0 * (1.0 - seg["h0"] ** 2)
        grads["dec_init_W"] += seg["cond"].T @ dpre0
        grads["dec_init_b"] += dpre0.sum(axis=0)
        dcond += dpre0 @ w["dec_init_W"].T
        dconds.append(dcond)

    # previous-token embeddings (step 0 of the whole sequence has none)
    np.add.at(grads["embed"], tokens[:-1], demb_prev[1:])

    if c.bars == 4:
        con = cache["con"]
        d_hs_c = np.stack(dconds, axis=0)
        dW, dU, db, dxs, dh0c = _gru_backward(
            w["con_W"], w["con_U"], w["con_b"], con["gru"],
            d_hs_c, np.zeros((B, c.conductor_dim)))
        grads["con_W"] += dW
        grads["con_U"] += dU
        grads["con_b"] += db
        dpre = dh0c * (1.0 - con["h0"] ** 2)
        grads["con_init_W"] += con["z"].T @ dpre
        grads["con_init_b"] += dpre.sum(axis=0)
        dz = dxs.sum(axis=0) + dpre @ w["con_init_W"].T
    else:
        dz = dconds[0]
    return dz


# ---------------------------------------------------------------------------
# sampling

def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_entropy(logits: np.ndarray, temperature: float) -> float:
    """Shannon entropy (nats) of softmax(logits / T); -inf entries allowed."""
    scaled = np.where(np.isneginf(logits), -np.inf, logits / temperature)
    p = _softmax(scaled[None, :])[0]
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def _mask_invalid(logits: np.ndarray, step: int, prev_code: int | None) -> np.ndarray:
    masked = logits.copy()
    if step == 0 or prev_code == REST:
        masked[HOLD] = -np.inf
    return masked


def decode(
    state: ModelState,
    z: np.ndarray,
    temperature: float = 1.0,
    mode: str = "sample",
    rng: np.random.Generator | None = None,
    teacher: MelodySequence | None = None,
) -> tuple[MelodySequence, np.ndarray]:
    """Generate (or teacher-force) one sequence from a latent vector.

    Returns the sequence and the per-step logits (T, V).  In greedy and
    sample modes invalid transitions are masked to -inf before choosing.
    """
    if temperature <= 0:
        raise ModelError("temperature must be > 0")
    c = state.config
    w = state.weights
    z = np.asarray(z, dtype=float)
    if z.shape != (c.latent_dim,):
        raise ModelError(f"z must have length {c.latent_dim}")

    if mode == "teacher":
        if teacher is None:
            raise ModelError("teacher mode requires a sequence")
        tokens = np.asarray(teacher.codes, dtype=np.int64)[:, None]
        logits, _ = _decoder_teacher_forward(state, tokens, z[None, :])
        return teacher, logits[:, 0, :]
    if mode not in ("greedy", "sample"):
        raise ModelError(f"unknown decode mode {mode!r}")
    if mode == "sample" and rng is None:
        raise ModelError("sample mode requires an rng")

    zb = z[None, :]
    if c.bars == 4:
        con_hs, _ = _conductor_forward(state, zb)
        conds = [con_hs[i, 0] for i in range(c.bars)]
    else:
        conds = [z]

    codes: list[int] = []
    all_logits = np.empty((c.steps, c.vocab))
    for i, (s0, s1) in enumerate(_segments(c)):
        cond = conds[i]
        h = np.tanh(cond @ w["dec_init_W"] + w["dec_init_b"])[None, :]
        for t in range(s0, s1):
            prev = codes[t - 1] if t > 0 else None
            emb = w["embed"][prev] if prev is not None else np.zeros(c.embed_dim)
            x = np.concatenate([emb, cond])[None, :]
            hs, _ = _gru_forward(w["dec_W"], w["dec_U"], w["dec_b"],
                                 x[None, :, :], h)
            h = hs[0]
            logits = (h[0] @ w["out_W"] + w["out_b"])
            masked = _mask_invalid(logits, t, prev)
            all_logits[t] = masked
            if mode == "greedy":
                codes.append(int(np.argmax(masked)))
            else:
                p = _softmax((masked / temperature)[None, :])[0]
                codes.append(int(rng.choice(c.vocab, p=p)))
    return MelodySequence(tuple(codes)), all_logits


# ---------------------------------------------------------------------------
# loss and training

def elbo_loss(
    state: ModelState,
    batch: list[MelodySequence],
    beta: float,
    rng: np.random.Generator,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean token cross-entropy plus beta * mean KL, with gradients.

    Gradients are exact (unclipped); the training loop applies the global
    norm clip so that finite-difference checks see the raw loss gradient.
    """
    if not batch:
        raise ModelError("empty batch")
    c = state.config
    w = state.weights
    for seq in batch:
        if seq.bars != c.bars:
            raise ModelError("batch bar span does not match model config")
    tokens = np.stack([np.asarray(s.codes, dtype=np.int64) for s in batch], axis=1)
    T, B = tokens.shape

    mu, lv, enc_cache = _encode_batch(state, tokens)
    eps = rng.standard_normal(mu.shape)
    z = mu + np.exp(0.5 * lv) * eps
    logits, dec_cache = _decoder_teacher_forward(state, tokens, z)

    probs = _softmax(logits)
    idx_t, idx_b = np.meshgrid(np.arange(T), np.arange(B), indexing="ij")
    picked = probs[idx_t, idx_b, tokens]
    recon = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    kl_per = 0.5 * np.sum(mu * mu + np.exp(lv) - lv - 1.0, axis=1)
    loss = recon + beta * float(kl_per.mean())
    if not np.isfinite(loss):
        raise TrainingDivergenceError(f"non-finite loss {loss}")

    grads = {name: np.zeros_like(arr) for name, arr in w.items()}

    dlogits = probs.copy()
    dlogits[idx_t, idx_b, tokens] -= 1.0
    dlogits /= T * B
    dz = _decoder_backward(state, dec_cache, dlogits, grads)

    dmu = dz + beta * mu / B
    dlv = dz * 0.5 * np.exp(0.5 * lv) * eps + beta * 0.5 * (np.exp(lv) - 1.0) / B
    # clamp is flat outside its range
    lv_raw = enc_cache["lv_raw"]
    dlv_raw = dlv * ((lv_raw > -LOG_VAR_CLAMP) & (lv_raw < LOG_VAR_CLAMP))

    hcat = enc_cache["hcat"]
    grads["mu_W"] += hcat.T @ dmu
    grads["mu_b"] += dmu.sum(axis=0)
    grads["lv_W"] += hcat.T @ dlv_raw
    grads["lv_b"] += dlv_raw.sum(axis=0)
    dhcat = dmu @ w["mu_W"].T + dlv_raw @ w["lv_W"].T

    He = c.enc_hidden
    dW, dU, db, dx_fw, _ = _gru_backward(
        w["enc_fw_W"], w["enc_fw_U"], w["enc_fw_b"], enc_cache["cache_fw"],
        None, dhcat[:, :He])
    grads["enc_fw_W"] += dW
    grads["enc_fw_U"] += dU
    grads["enc_fw_b"] += db
    dW, dU, db, dx_bw, _ = _gru_backward(
        w["enc_bw_W"], w["enc_bw_U"], w["enc_bw_b"], enc_cache["cache_bw"],
        None, dhcat[:, He:])
    grads["enc_bw_W"] += dW
    grads["enc_bw_U"] += dU
    grads["enc_bw_b"] += db
    dxs = dx_fw + dx_bw[::-1]
    np.add.at(grads["embed"], tokens, dxs)

    return loss, grads


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float = 1.0) -> float:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


@dataclass
class TrainResult:
    state: ModelState
    losses: list[float]
    kls: list[float]


def train(
    state: ModelState,
    dataset,
    epochs: int,
    batch_size: int = 32,
    learning_rate: float = 1e-3,
    clip_norm: float = 1.0,
) -> TrainResult:
    """Adam training with a linear beta ramp; deterministic under the seed."""
    c = state.config
    if dataset.bars != c.bars:
        raise ModelError("dataset bar span does not match model config")
    out = ModelState(config=c,
                     weights=copy.deepcopy(state.weights),
                     adam_m=copy.deepcopy(state.adam_m),
                     adam_v=copy.deepcopy(state.adam_v),
                     step=state.step,
                     beta_schedule=state.beta_schedule)
    shuffle_rng = np.random.Generator(np.random.Philox(key=[c.seed, 2 * state.step]))
    noise_rng = np.random.Generator(np.random.Philox(key=[c.seed, 2 * state.step + 1]))
    losses: list[float] = []
    kls: list[float] = []
    n = len(dataset.sequences)
    b1, b2, eps_adam = 0.9, 0.999, 1e-8
    for _ in range(epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = [dataset.sequences[i] for i in order[start:start + batch_size]]
            beta = out.beta_schedule.at(out.step)
            loss, grads = elbo_loss(out, batch, beta, noise_rng)
            clip_gradients(grads, clip_norm)
            out.step += 1
            t = out.step
            for name, g in grads.items():
                m = out.adam_m[name]
                v = out.adam_v[name]
                m *= b1
                m += (1 - b1) * g
                v *= b2
                v += (1 - b2) * g * g
                mhat = m / (1 - b1 ** t)
                vhat = v / (1 - b2 ** t)
                out.weights[name] -= learning_rate * mhat / (np.sqrt(vhat) + eps_adam)
                if not np.all(np.isfinite(out.weights[name])):
                    raise TrainingDivergenceError(f"non-finite weights in {name}")
            losses.append(loss)
            kls.append(_batch_mean_kl(out, batch))
    return TrainResult(state=out, losses=losses, kls=kls)


def _batch_mean_kl(state: ModelState, batch: list[MelodySequence]) -> float:
    tokens = np.stack([np.asarray(s.codes, dtype=np.int64) for s in batch], axis=1)
    mu, lv, _ = _encode_batch(state, tokens)
    return float(np.mean(0.5 * np.sum(mu * mu + np.exp(lv) - lv - 1.0, axis=1)))


# ---------------------------------------------------------------------------
# interaction

def respond(
    state: ModelState,
    input_seq: MelodySequence,
    params: PartnerParams,
    rng: np.random.Generator,
) -> MelodySequence:
    """Answer an input melody: blend its latent mean with a prior draw by
    the similarity weight, then sample the decoder at the temperature."""
    code = encode(state, input_seq)
    prior = rng.standard_normal(state.config.latent_dim)
    if state.config.temperature_scales_latent:
        prior = prior * params.temperature
    z = params.similarity * code.mu + (1.0 - params.similarity) * prior
    seq, _ = decode(state, z, temperature=params.temperature, mode="sample", rng=rng)
    return seq


def reconstruction_accuracy(state: ModelState, sequences: list[MelodySequence]) -> float:
    """Token accuracy of greedy decoding from each sequence's latent mean."""
    correct = total = 0
    for seq in sequences:
        code = encode(state, seq)
        out, _ = decode(state, code.mu, mode="greedy")
        correct += sum(a == b for a, b in zip(out.codes, seq.codes))
        total += len(seq.codes)
    return correct / total if total else 0.0
