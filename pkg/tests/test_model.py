import math

import numpy as np
import pytest

from conftest import tiny_model
from gmasimt.attention import GmaConfig, output_positions
from gmasimt.data import BOS, EOS, make_batch
from gmasimt.model import GmaTransformer, ModelConfig, StepOutput, WaitForSource
from gmasimt.numerics import grad_check, no_grad


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(9, 9, d_model=10, heads=3)
    with pytest.raises(ValueError):
        ModelConfig(9, 9, layers=0)
    with pytest.raises(ValueError):
        ModelConfig(9, 9, init_step=0.0)
    with pytest.raises(ValueError):
        ModelConfig(9, 9, predictor_input="encoder")
    cfg = ModelConfig(9, 9, gma={"delta": 2.0})
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg


def test_encode_causal_prefix_stable():
    m = tiny_model()
    x = [4, 7, 5, 8, 6]
    short, full = m.encode(x[:3]).data, m.encode(x).data
    assert np.abs(short - full[:3]).max() < 1e-12


def test_encode_single_token_modes_agree():
    a = tiny_model(causal=True).encode([5]).data
    b = tiny_model(causal=False).encode([5]).data
    assert a.shape == (1, 8)
    assert np.abs(a - b).max() < 1e-12


def test_encode_rejects_bad_input():
    m = tiny_model()
    with pytest.raises(ValueError):
        m.encode([])
    with pytest.raises(IndexError):
        m.encode([4, 99])


def _ln(x, g, b):
    mu = x.mean(-1, keepdims=True)
    var = ((x - mu) ** 2).mean(-1, keepdims=True)
    return (x - mu) / np.sqrt(var + 1e-5) * g + b


def test_bidirectional_encoder_loop_oracle():
    cfg = ModelConfig(9, 9, d_model=4, d_ff=6, layers=1, heads=2, encoder_causal=False, seed=3)
    m = GmaTransformer(cfg)
    P = m.state_dict()
    x = [4, 6, 5]
    J, d, H, dk = 3, 4, 2, 2
    pos = np.array([[math.sin(j / 10000 ** (2 * (k // 2) / d)) if k % 2 == 0
                     else math.cos(j / 10000 ** (2 * (k // 2) / d)) for k in range(d)]
                    for j in range(J)])
    h = P["src_emb"][x] * math.sqrt(d) + pos
    a = _ln(h, P["enc.0.ln1.g"], P["enc.0.ln1.b"])
    q, k, v = (a @ P[f"enc.0.attn.{w}"] for w in ("wq", "wk", "wv"))
    ctx = np.zeros((J, d))
    for head in range(H):
        sl = slice(head * dk, (head + 1) * dk)
        for i in range(J):
            s = [sum(q[i, sl] * k[j, sl]) / math.sqrt(dk) for j in range(J)]
            e = [math.exp(t) for t in s]
            for j in range(J):
                ctx[i, sl] += e[j] / sum(e) * v[j, sl]
    h = h + ctx @ P["enc.0.attn.wo"]
    f = _ln(h, P["enc.0.ln2.g"], P["enc.0.ln2.b"])
    h = h + np.maximum(f @ P["enc.0.ffn.w1"] + P["enc.0.ffn.b1"], 0) @ P["enc.0.ffn.w2"] + P["enc.0.ffn.b2"]
    expected = _ln(h, P["enc.ln.g"], P["enc.ln.b"])
    assert np.abs(m.encode(x).data - expected).max() < 1e-12


def test_single_target_token_recurrence():
    m = tiny_model(delta=1.0)
    loss, state, mats = m.decode_train([4, 5, 6, 7], [5])
    assert math.isfinite(loss.item())
    # step 1 predicts y_1, step 2 predicts EOS
    p1 = 1 + state.delta_p[:, 0]
    assert np.allclose(state.p[:, 0], p1)
    assert state.g[0] == min(max(int(np.floor(p1 + 1.0).max()), 1), 4)


def test_large_delta_saturates():
    m = tiny_model(delta=50.0)
    x, y = [4, 5, 6, 7, 8], [6, 5, 4]
    loss, state, mats = m.decode_train(x, y)
    assert (state.g == len(x)).all()
    assert (state.g_tracks == len(x)).all()
    # full support: the posterior uses every source word
    for mat in mats:
        assert (mat.beta > 0).all()
    big = m.with_delta(1000.0).decode_train(x, y)[0].item()
    assert abs(big - loss.item()) < 1e-12


def test_alignment_state_invariants():
    m = tiny_model(layers=3, heads=2, sharing_mode="all_independent")
    _, st, mats = m.decode_train([4, 5, 6, 7, 8, 4, 5], [5, 6, 7, 8, 4])
    assert (st.delta_p > 0).all()
    assert (np.diff(st.p, axis=1) > 0).all() and (st.p > 1).all()
    assert (np.diff(st.g) >= 0).all() and st.g.min() >= 1 and st.g.max() <= 7
    assert np.array_equal(st.g, np.maximum.accumulate(st.g_tracks.max(axis=0)))
    for l, mat in enumerate(mats):
        for h in range(2):
            for i, gi in enumerate(st.g_tracks[st.layout.head_track[l][h]]):
                assert abs(mat.beta[h, i, :gi].sum() - 1) < 1e-10
                assert (mat.beta[h, i, gi:] == 0).all()


def test_share_heads_identical_bounds():
    m = tiny_model(layers=2, heads=4, d_model=8, sharing_mode="share_heads")
    _, st, mats = m.decode_train([4, 5, 6, 7, 8, 5], [5, 6, 7, 8])
    for l, mat in enumerate(mats):
        support = (mat.beta > 0).sum(axis=-1)       # (H, I)
        assert (support == support[0]).all()
        assert st.layout.predictors[l] == 1


def test_decode_step_reproduces_training_logits():
    m = tiny_model(layers=2, heads=2, delta=0.5, sharing_mode="all_independent")
    x, y = [4, 5, 6, 7, 8, 6], [6, 5, 8, 4]
    b = make_batch([x], [y])
    with no_grad():
        res = m.forward(b)
    prefix = [BOS]
    for i, tok in enumerate(y + [EOS]):
        out = m.decode_step(x, prefix, True)
        assert isinstance(out, StepOutput)
        assert np.abs(out.logits - res.logits.data[0, i]).max() < 1e-8
        assert out.g == res.g[0, i]
        # streaming: exactly g(i) words received gives the same step
        stream = m.decode_step(x[:out.g], prefix, out.g == len(x))
        assert isinstance(stream, StepOutput)
        assert np.abs(stream.logits - out.logits).max() < 1e-8
        prefix.append(tok)


def test_decode_step_waits_for_source():
    m = tiny_model(random_predictor=False, delta=0.0)
    out = m.decode_step([4], [BOS], False)
    # zero predictor weights: p_1 = 2, so g(1) = 2 needs a second word
    assert isinstance(out, WaitForSource) and out.required == 2
    assert isinstance(m.decode_step([4, 5], [BOS], False), StepOutput)
    done = m.decode_step([4], [BOS], True)
    assert isinstance(done, StepOutput) and done.g == 1


def test_first_step_bound():
    m = tiny_model(delta=1.0)
    out = m.decode_step([4, 5, 6, 7, 8, 4, 5, 6, 7, 8], [BOS], True)
    assert out.g == int(np.floor(1 + out.state.delta_p[:, 0] + 1.0).max())


def test_pad_invariance():
    m = tiny_model()
    pairs = ([[4, 5, 6], [7, 8, 4, 5, 6]], [[5, 6], [8, 7, 6, 5]])
    with no_grad():
        both = m.forward(make_batch(*pairs))
        alone = m.forward(make_batch([pairs[0][0]], [pairs[1][0]]))
    assert np.abs(both.logits.data[0, :3] - alone.logits.data[0]).max() < 1e-12
    one = m.decode_train(pairs[0][0], pairs[1][0])[0].item()
    two = m.decode_train(pairs[0][1], pairs[1][1])[0].item()
    # batch loss is the token-weighted mean of the sentence losses
    assert abs(both.loss.item() - (3 * one + 5 * two) / 8) < 1e-12


def test_two_sentence_gradient():
    m = tiny_model(layers=2, heads=2, d_model=4, vocab=7)
    b = make_batch([[4, 5, 6], [5, 4]], [[6, 5], [4, 4, 5]])
    assert grad_check(lambda: m.forward(b).loss, m.parameters()) <= 1e-4


@pytest.mark.parametrize("variant", ["gaussian", "none"])
def test_predictor_gradient_flow(variant):
    m = tiny_model(prior_variant=variant)
    b = make_batch([[4, 5, 6, 7], [8, 6, 5]], [[6, 5, 4], [4, 8]])
    for p in m.parameters():
        p.grad = None
    m.forward(b).loss.backward()
    g = m.params["dec.0.gma.W_p"].grad
    if variant == "none":
        assert g is None or not np.any(g)
    else:
        assert np.abs(g).max() > 0


def test_absolute_and_predicted_sigma_modes():
    for gma in ({"position_mode": "absolute"}, {"sigma_mode": "predicted"},
                {"prior_variant": "laplace"}, {"prior_variant": "linear"},
                {"predictor_input": "layer"}):
        m = tiny_model(layers=1, heads=2, d_model=4, vocab=7, **gma)
        b = make_batch([[4, 5, 6]], [[6, 5]])
        assert grad_check(lambda: m.forward(b).loss, m.parameters()) <= 1e-4


def test_state_dict_round_trip():
    a, b = tiny_model(seed=0), tiny_model(seed=1)
    b.load_state_dict(a.state_dict())
    x, y = [4, 5, 6], [6, 5]
    assert a.decode_train(x, y)[0].item() == b.decode_train(x, y)[0].item()
    bad = a.state_dict()
    bad["out.b"] = np.zeros(3)
    with pytest.raises(ValueError):
        b.load_state_dict(bad)


def test_same_seed_same_params():
    a, b = GmaTransformer(ModelConfig(9, 9, seed=5)), GmaTransformer(ModelConfig(9, 9, seed=5))
    assert all(np.array_equal(a.params[k].data, b.params[k].data) for k in a.params)


def test_output_positions_of_model_track():
    m = tiny_model(delta=1.0)
    _, st, _ = m.decode_train([4, 5, 6, 7, 8, 4], [5, 6, 7])
    for t in range(st.p.shape[0]):
        assert np.array_equal(st.g_tracks[t], output_positions(st.p[t], 1.0, 6))
