import numpy as np
import pytest

from walshae import autoencoder as ae
from walshae.channel import ChannelConfig, ChannelRealization
from walshae.fingerprint import InterferenceMask

LN16 = np.log(16)


def frozen_draw(batch, n, seed):
    r = np.random.default_rng(seed)
    noise = r.standard_normal((batch, n)) * 0.7
    interf = r.standard_normal((batch, n)) * np.linspace(0, 1.5, n)
    return ChannelRealization(noise, interf, np.zeros((batch, n)))


def numeric_grad(model, msgs, real, name, h=1e-6):
    p = getattr(model, name)
    g = np.zeros_like(p)
    for idx in np.ndindex(p.shape):
        old = p[idx]
        p[idx] = old + h
        lp, _ = ae.loss_and_gradients(model, msgs, None, realization=real)
        p[idx] = old - h
        lm, _ = ae.loss_and_gradients(model, msgs, None, realization=real)
        p[idx] = old
        g[idx] = (lp - lm) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-300)


@pytest.mark.parametrize("final_relu", [False, True])
def test_gradients_match_central_differences(final_relu):
    model = ae.init_model(3, final_relu=final_relu)
    r = np.random.default_rng(0)
    for name in ae.PARAM_NAMES:  # random biases so no parameter sits at a trivial point
        if name.endswith("b1") or name.endswith("b2"):
            getattr(model, name)[:] = r.normal(0, 0.3, getattr(model, name).shape)
    msgs = r.integers(0, 16, 24)
    real = frozen_draw(24, 32, 1)
    _, grads = ae.loss_and_gradients(model, msgs, None, realization=real)
    for name in ae.PARAM_NAMES:
        assert rel_err(grads[name], numeric_grad(model, msgs, real, name)) < 1e-5, name


def test_untrained_decoder_loss_is_ln16():
    model = ae.init_model(1)
    for name in ("dec_w1", "dec_b1", "dec_w2", "dec_b2"):
        getattr(model, name)[:] = 0
    msgs = np.arange(16).repeat(4)
    loss, _ = ae.loss_and_gradients(model, msgs, ChannelConfig(8.0), np.random.default_rng(0))
    assert abs(loss - LN16) < 1e-9


def test_perfect_classifier_loss_to_zero():
    # minimum-distance decoder: h_m = <r, c_m> - |c_m|^2/2 + C, logits = s * h
    model = ae.init_model(2)
    cb = ae.codebook(model)
    model.dec_w1[:] = cb.T
    model.dec_b1[:] = 100.0 - 0.5 * (cb**2).sum(1)
    model.dec_b2[:] = 0
    losses = []
    for s in (0.01, 0.1, 1e4):
        model.dec_w2[:] = s * np.eye(16)
        losses.append(ae.loss_and_gradients(model, np.arange(16), None)[0])
    assert losses[0] > losses[1] > losses[2]
    assert losses[2] < 1e-9


def test_zero_noise_channel_equals_no_channel():
    model = ae.init_model(4)
    msgs = np.arange(16)
    zero = ChannelRealization(np.zeros((16, 32)), np.zeros((16, 32)), np.zeros((16, 32)))
    l1, g1 = ae.loss_and_gradients(model, msgs, None)
    l2, g2 = ae.loss_and_gradients(model, msgs, None, realization=zero)
    assert l1 == l2
    for k in g1:
        np.testing.assert_array_equal(g1[k], g2[k])


def test_normalize_examples():
    x = np.full((3, 8), 2.0)
    np.testing.assert_allclose(ae.normalize(x), x / 2)
    y = np.random.default_rng(0).standard_normal((5, 8))
    y /= np.sqrt(np.mean(y**2))
    np.testing.assert_allclose(ae.normalize(y), y, atol=1e-12)
    with pytest.raises(ae.DegenerateInputError):
        ae.normalize(np.zeros((2, 4)))


def test_normalize_backward_finite_difference():
    r = np.random.default_rng(1)
    x = r.standard_normal((4, 6))
    g = r.standard_normal((4, 6))
    analytic = ae.normalize_backward(x, g)
    num = np.zeros_like(x)
    h = 1e-6
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        num[idx] = (np.sum(g * ae.normalize(xp)) - np.sum(g * ae.normalize(xm))) / (2 * h)
    assert rel_err(analytic, num) < 1e-5


def test_encode_hand_weights():
    t = ae.Topology(k=2, n=4)
    m = ae.zero_model(t)
    m.enc_w1[:] = np.eye(4)
    m.enc_b1[:] = [0.0, -2.0, 0.5, 0.0]
    m.enc_w2[:] = [[1, 0, 0, 0], [0, 2, 0, 0], [0, 0, 3, 0], [1, 1, 1, 1]]
    m.enc_b2[:] = [0.1, 0, 0, -0.1]
    # naive oracle: loop over messages
    raw = []
    for msg in range(4):
        h = [max(m.enc_w1[msg, j] + m.enc_b1[j], 0.0) for j in range(4)]
        raw.append([sum(h[j] * m.enc_w2[j, c] for j in range(4)) + m.enc_b2[c] for c in range(4)])
    raw = np.array(raw)
    expected = raw / np.sqrt(np.mean(raw**2))
    np.testing.assert_allclose(ae.encode(m, np.arange(4)), expected, atol=1e-15)
    assert ae.encode(m, 2).shape == (4,)


def test_encode_range_checks():
    m = ae.init_model(0)
    with pytest.raises(ValueError):
        ae.encode(m, 16)
    with pytest.raises(ValueError):
        ae.encode(m, -1)
    with pytest.raises(ValueError):
        ae.encode(m, 1.5)


def test_codebook_unit_power():
    cb = ae.codebook(ae.init_model(7))
    assert np.mean(cb**2) == pytest.approx(1.0, abs=1e-12)


def test_decode_simplex_and_zero_weights(rng):
    z = ae.zero_model()
    np.testing.assert_allclose(ae.decode(z, rng.standard_normal(32)), np.full(16, 1 / 16))
    p = ae.decode(ae.init_model(1), rng.standard_normal((100, 32)))
    np.testing.assert_allclose(p.sum(-1), 1, atol=1e-12)
    assert np.all((p > 0) & (p < 1))


def test_infer_tie_break():
    assert ae.infer(ae.zero_model(), np.zeros(32)) == 0
    m = ae.zero_model()
    m.dec_b2[:] = np.log(np.r_[0.9, np.full(15, 0.1 / 15)])
    assert ae.infer(m, np.ones(32)) == 0


def test_topology_invariants():
    assert ae.Topology().m == 16 and ae.Topology().rate == 0.125
    with pytest.raises(ValueError):
        ae.Topology(k=5, n=4)


def test_training_deterministic_and_normalized():
    t = ae.TrainingConfig(steps=60, seed=11)
    a, ta = ae.train(5, t)
    b, tb = ae.train(5, t)
    for k in ae.PARAM_NAMES:
        assert getattr(a, k).tobytes() == getattr(b, k).tobytes()
    assert ta.tobytes() == tb.tobytes()
    assert np.mean(ae.codebook(a) ** 2) == pytest.approx(1.0, abs=1e-9)
    assert a.meta["optimizer"] == "adam" and a.meta["steps"] == 60


def test_training_with_mask_and_sgd():
    mask = InterferenceMask.single_branch(32, 31)
    t = ae.TrainingConfig(steps=30, optimizer="sgd", learning_rate=0.05, ici_db=6.0, mask=mask)
    m, trace = ae.train(0, t)
    assert np.all(np.isfinite(trace)) and m.meta["ici_db"] == 6.0


def test_divergence_raises_with_trace():
    t = ae.TrainingConfig(steps=200, optimizer="sgd", learning_rate=1e4)
    with pytest.raises(ae.TrainingFailure) as info:
        ae.train(0, t, divergence_window=5)
    assert len(info.value.trace) >= 5


def test_training_config_validation():
    with pytest.raises(ValueError):
        ae.TrainingConfig(batch_size=0)
    with pytest.raises(ValueError):
        ae.TrainingConfig(learning_rate=0)
    with pytest.raises(ValueError):
        ae.TrainingConfig(optimizer="rmsprop")


@pytest.mark.slow
def test_reference_baseline_converges(lab):
    model = lab.baseline(1)
    assert ae.min_codeword_distance(model) > 0
    cb = ae.codebook(model)
    assert np.array_equal(ae.infer(model, cb), np.arange(16))
    # clean validation: argmax accuracy on noiseless codewords, many repeats
    msgs = np.random.default_rng(0).integers(0, 16, 100_000)
    assert ae.accuracy(model, cb[msgs], msgs) > 0.9999


@pytest.mark.slow
def test_reference_training_trace():
    model, trace = ae.train(derive := 1, ae.TrainingConfig(seed=derive))
    assert np.all(np.isfinite(trace))
    assert np.mean(trace[-500:]) < LN16 / 10
