import numpy as np
import pytest

from duet.genmodel import (
    LatentCode,
    ModelConfig,
    ModelError,
    PartnerParams,
    build_markov_stats,
    decode,
    elbo_loss,
    encode,
    init_model,
    kl_divergence,
    load_checkpoint,
    markov_respond,
    param_count,
    reparameterize,
    respond,
    save_checkpoint,
    softmax_entropy,
    train,
    transition_probabilities,
)
from duet.melody import HOLD, REST, MelodyDataset, MelodySequence
from duet.toydata import toy_corpus

TINY = ModelConfig(bars=2, vocab=5, embed_dim=3, enc_hidden=4, latent_dim=2,
                   dec_hidden=4, conductor_dim=3, seed=1)
TINY4 = ModelConfig(bars=4, vocab=5, embed_dim=3, enc_hidden=4, latent_dim=2,
                    dec_hidden=4, conductor_dim=3, seed=1)


def _tiny_sequence(config, key=5):
    rng = np.random.Generator(np.random.Philox(key=key))
    codes = []
    prev = REST
    for i in range(config.steps):
        options = [REST, 2, 3, 4]
        if i > 0 and prev != REST:
            options.append(HOLD)
        c = int(rng.choice(options))
        codes.append(c)
        prev = c
    seq = MelodySequence.__new__(MelodySequence)
    object.__setattr__(seq, "codes", tuple(codes))
    return seq


# ---------------------------------------------------------------------------
# initialization

def test_init_deterministic():
    a = init_model(ModelConfig(bars=2, seed=3))
    b = init_model(ModelConfig(bars=2, seed=3))
    for name in a.weights:
        assert np.array_equal(a.weights[name], b.weights[name])


def test_param_count_hand_counted_tiny():
    # vocab 5, embed 3, enc 4, latent 2, dec 4 (flat 2-bar decoder)
    expected = (
        5 * 3                      # embedding
        + 2 * (3 * 12 + 4 * 12 + 12)  # two encoder directions
        + 2 * (8 * 2 + 2)          # mu and log-var heads
        + (2 * 4 + 4)              # decoder init from latent
        + (5 * 12 + 4 * 12 + 12)   # decoder cell (input = embed 3 + latent 2)
        + (4 * 5 + 5)              # output head
    )
    assert param_count(TINY) == expected


def test_param_count_monotone_in_dims():
    base = param_count(ModelConfig(bars=2))
    assert param_count(ModelConfig(bars=2, embed_dim=64)) > base
    assert param_count(ModelConfig(bars=2, enc_hidden=256)) > base
    assert param_count(ModelConfig(bars=2, latent_dim=32)) > base
    assert param_count(ModelConfig(bars=4)) > param_count(ModelConfig(bars=2))


def test_latent_head_shapes():
    state = init_model(ModelConfig(bars=2, latent_dim=16))
    code = encode(state, MelodySequence.rest(2))
    assert code.mu.shape == (16,)
    assert code.log_var.shape == (16,)


def test_encode_pure():
    state = init_model(TINY)
    seq = _tiny_sequence(TINY)
    a = encode(state, seq)
    b = encode(state, seq)
    assert np.array_equal(a.mu, b.mu)
    assert np.array_equal(a.log_var, b.log_var)


def test_encode_bar_mismatch():
    state = init_model(ModelConfig(bars=2))
    with pytest.raises(ModelError):
        encode(state, MelodySequence.rest(4))


# ---------------------------------------------------------------------------
# reparameterization and KL

def test_reparameterize_zero_noise_gives_mu():
    code = LatentCode(mu=np.array([1.0, -2.0]), log_var=np.array([0.3, -0.7]))
    assert np.allclose(reparameterize(code, np.zeros(2)), code.mu)


def test_reparameterize_identity_case():
    code = LatentCode(mu=np.zeros(3), log_var=np.zeros(3))
    noise = np.array([0.5, -1.0, 2.0])
    assert np.allclose(reparameterize(code, noise), noise)


def test_reparameterize_monte_carlo(rng):
    code = LatentCode(mu=np.array([1.5]), log_var=np.array([0.8]))
    draws = np.array([reparameterize(code, rng.standard_normal(1))[0]
                      for _ in range(10_000)])
    sd = np.exp(0.4)
    assert abs(draws.mean() - 1.5) < 3 * sd / np.sqrt(10_000)
    assert abs(draws.std() - sd) < 0.05


def test_kl_zero_for_standard_normal():
    assert kl_divergence(LatentCode(np.zeros(4), np.zeros(4))) == 0.0


def test_kl_closed_form_single_dim():
    assert kl_divergence(LatentCode(np.array([1.0]), np.array([0.0]))) == \
        pytest.approx(0.5)


def test_kl_non_negative_and_matches_quadrature(rng):
    for _ in range(200):
        mu = rng.normal(size=3)
        lv = rng.uniform(-2, 2, size=3)
        assert kl_divergence(LatentCode(mu, lv)) >= 0.0
    # 1-D numeric integral of q log(q/p)
    mu, lv = 0.7, -0.5
    sd = np.exp(0.5 * lv)
    x = np.linspace(-12, 12, 200_001)
    q = np.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
    p = np.exp(-0.5 * x ** 2) / np.sqrt(2 * np.pi)
    numeric = np.trapezoid(q * np.log(q / p), x)
    closed = kl_divergence(LatentCode(np.array([mu]), np.array([lv])))
    assert closed == pytest.approx(numeric, abs=1e-6)


# ---------------------------------------------------------------------------
# decoding

def test_softmax_uniform_for_equal_logits():
    logits = np.full(10, 3.0)
    for temp in (0.5, 1.0, 1.5):
        assert softmax_entropy(logits, temp) == pytest.approx(np.log(10))


def test_entropy_non_decreasing_in_temperature(rng):
    for _ in range(100):
        logits = rng.normal(scale=3.0, size=20)
        ents = [softmax_entropy(logits, t) for t in (0.5, 1.0, 1.5)]
        assert ents[0] <= ents[1] + 1e-12 <= ents[2] + 2e-12


def test_decode_tiny_temperature_equals_greedy(rng):
    state = init_model(TINY)
    z = rng.standard_normal(TINY.latent_dim)
    greedy, _ = decode(state, z, mode="greedy")
    sampled, _ = decode(state, z, temperature=1e-6, mode="sample", rng=rng)
    assert sampled.codes == greedy.codes


def test_decode_output_always_valid(rng):
    state = init_model(TINY4)
    for _ in range(20):
        z = rng.standard_normal(TINY4.latent_dim)
        seq, logits = decode(state, z, temperature=1.5, mode="sample", rng=rng)
        assert len(seq.codes) == TINY4.steps  # construction validates the rest
        assert np.isneginf(logits[0, HOLD])


def test_decode_rejects_bad_temperature(rng):
    state = init_model(TINY)
    with pytest.raises(ModelError):
        decode(state, np.zeros(TINY.latent_dim), temperature=0.0, rng=rng)


# ---------------------------------------------------------------------------
# loss

def test_beta_zero_is_pure_reconstruction(rng):
    state = init_model(TINY)
    seq = _tiny_sequence(TINY)
    loss0, _ = elbo_loss(state, [seq], beta=0.0, rng=np.random.Generator(
        np.random.Philox(key=2)))
    _, logits = decode(state, encode(state, seq).mu, mode="teacher", teacher=seq)
    # teacher logits from mu differ from the reparameterized path, so compare
    # against a beta sweep instead: loss(beta) - loss(0) == beta * KL
    l1, _ = elbo_loss(state, [seq], beta=1.0, rng=np.random.Generator(
        np.random.Philox(key=2)))
    l2, _ = elbo_loss(state, [seq], beta=2.0, rng=np.random.Generator(
        np.random.Philox(key=2)))
    assert (l2 - l1) == pytest.approx(l1 - loss0, rel=1e-9)


def test_batch_duplication_leaves_mean_loss_unchanged():
    state = init_model(TINY)
    seq = _tiny_sequence(TINY)
    noise = np.random.Generator(np.random.Philox(key=3))
    l1, _ = elbo_loss(state, [seq], beta=0.0, rng=noise)
    noise = np.random.Generator(np.random.Philox(key=3))
    # identical noise rows require identical sequences and a fresh stream;
    # with beta=0 and deterministic encoding the mean is unchanged
    l2, _ = elbo_loss(state, [seq, seq], beta=0.0,
                      rng=_PairedNoise(np.random.Philox(key=3)))
    assert l2 == pytest.approx(l1, rel=1e-12)


class _PairedNoise:
    """Duplicates each standard-normal row so both batch copies match."""

    def __init__(self, bitgen):
        self._rng = np.random.Generator(bitgen)

    def standard_normal(self, shape):
        row = self._rng.standard_normal((1, shape[1]))
        return np.repeat(row, shape[0], axis=0)


@pytest.mark.parametrize("config", [TINY, TINY4], ids=["2bar", "4bar"])
def test_gradient_check(config):
    state = init_model(config)
    seq = _tiny_sequence(config)
    beta = 0.17

    def loss_and_grads():
        rng = np.random.Generator(np.random.Philox(key=9))
        return elbo_loss(state, [seq], beta, rng)

    _, grads = loss_and_grads()
    h = 1e-5
    for name, w in state.weights.items():
        numeric = np.zeros_like(w)
        it = np.nditer(w, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = w[idx]
            w[idx] = orig + h
            lp, _ = loss_and_grads()
            w[idx] = orig - h
            lm, _ = loss_and_grads()
            w[idx] = orig
            numeric[idx] = (lp - lm) / (2 * h)
        denom = np.linalg.norm(grads[name]) + np.linalg.norm(numeric)
        rel = np.linalg.norm(grads[name] - numeric) / denom if denom else 0.0
        assert rel <= 1e-4, f"{name}: relative error {rel:.2e}"


# ---------------------------------------------------------------------------
# training basics (full-scale run is in the acceptance suite)

def test_zero_epochs_is_noop(toy_dataset):
    state = init_model(ModelConfig(bars=2, seed=1))
    result = train(state, toy_dataset, epochs=0)
    assert result.state.step == 0
    for name in state.weights:
        assert np.array_equal(result.state.weights[name],
                              state.weights[name])


def test_training_deterministic_tiny():
    ds = toy_corpus(40, seed=1)
    cfg = ModelConfig(bars=2, embed_dim=8, enc_hidden=12, latent_dim=4,
                      dec_hidden=12, seed=5)
    r1 = train(init_model(cfg), ds, epochs=2)
    r2 = train(init_model(cfg), ds, epochs=2)
    assert r1.losses == r2.losses
    for name in r1.state.weights:
        assert np.array_equal(r1.state.weights[name], r2.state.weights[name])


# ---------------------------------------------------------------------------
# respond boundaries (trained-model statistics live in the acceptance suite)

def test_respond_full_similarity_deterministic():
    state = init_model(TINY)
    seq = _tiny_sequence(TINY)
    params = PartnerParams(temperature=1e-6, similarity=1.0)
    outs = {respond(state, seq, params,
                    np.random.Generator(np.random.Philox(key=k))).codes
            for k in range(5)}
    assert len(outs) == 1


def test_respond_zero_similarity_ignores_input():
    state = init_model(TINY)
    a = _tiny_sequence(TINY, key=5)
    b = _tiny_sequence(TINY, key=6)
    params = PartnerParams(temperature=1.0, similarity=0.0)
    out_a = respond(state, a, params, np.random.Generator(np.random.Philox(key=1)))
    out_b = respond(state, b, params, np.random.Generator(np.random.Philox(key=1)))
    assert out_a.codes == out_b.codes


# ---------------------------------------------------------------------------
# checkpoints

def test_checkpoint_round_trip(tmp_path):
    state = init_model(TINY)
    state.step = 17
    path = tmp_path / "tiny.mvae"
    save_checkpoint(state, path)
    loaded = load_checkpoint(path)
    assert loaded.config == TINY
    assert loaded.step == 17
    for name, w in state.weights.items():
        assert np.allclose(loaded.weights[name], w.astype(np.float32))


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "bad.mvae"
    path.write_bytes(b"NOPE!" + b"\x00" * 40)
    from duet.genmodel import CheckpointError
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


# ---------------------------------------------------------------------------
# markov partner

def _dataset_from_codes(code_lists):
    seqs = []
    for codes in code_lists:
        seq = MelodySequence.__new__(MelodySequence)
        object.__setattr__(seq, "codes", tuple(codes))
        seqs.append(seq)
    return MelodyDataset(bars=2, sequences=seqs, rest_threshold_steps=32)


def test_markov_all_rest_corpus(rng):
    ds = _dataset_from_codes([[REST] * 32])
    stats = build_markov_stats(ds, order=1)
    out = markov_respond(MelodySequence.rest(2), 1, stats, rng)
    assert out == MelodySequence.rest(2)


def test_markov_output_length(rng, toy_dataset):
    stats = build_markov_stats(toy_dataset, order=2)
    seq = toy_dataset.sequences[0]
    out = markov_respond(seq, 2, stats, rng)
    assert len(out.codes) == len(seq.codes)


def test_markov_frequencies_converge(rng):
    # corpus: note 41 followed by 41 twice and 43 once
    ds = _dataset_from_codes([[41, 41, 41, 43] * 8])
    stats = build_markov_stats(ds, order=1)
    p = transition_probabilities(stats, (41,), prev_code=41)
    draws = rng.choice(len(p), size=10_000, p=p)
    freq_41 = np.mean(draws == 41)
    assert abs(freq_41 - p[41]) < 0.02
    # and the engine's own sampling matches the stated law
    counts = np.zeros(len(p))
    for _ in range(10_000):
        counts[int(rng.choice(len(p), p=p))] += 1
    assert np.allclose(counts / 10_000, p, atol=0.02)


def test_markov_unseen_context_smoothed(rng):
    ds = _dataset_from_codes([[REST] * 32])
    stats = build_markov_stats(ds, order=1)
    p = transition_probabilities(stats, (55,), prev_code=55)
    assert p.sum() == pytest.approx(1.0)
    assert np.count_nonzero(p) == len(p)  # smoothing gives full support
