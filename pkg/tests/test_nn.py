import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from iabsim import nn

L, A = nn.LEAKY, nn.LINEAR


def _reference_forward(params, x):
    """Independent loop-based evaluation of the same MLP."""
    h = list(map(float, x))
    for w, b, act in zip(params.weights, params.biases, params.activations):
        z = [sum(h[i] * w[i, j] for i in range(len(h))) + b[j] for j in range(w.shape[1])]
        h = [v if (act == A or v > 0) else params.slope * v for v in z]
    return np.array(h)


def test_zero_net_gives_zero():
    p = nn.init_mlp([4, 3, 2], [L, A], np.random.default_rng(0))
    for arr in p.arrays():
        arr[...] = 0.0
    out, _ = nn.mlp_forward(p, np.ones(4))
    assert np.all(out == 0.0)


def test_identity_layer():
    p = nn.MlpParams([np.eye(3)], [np.zeros(3)], (A,))
    x = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(nn.mlp_forward(p, x)[0], x)


@pytest.mark.parametrize("seed", range(5))
def test_forward_matches_reference(seed):
    rng = np.random.default_rng(seed)
    p = nn.init_mlp([5, 7, 6, 3], [L, L, A], rng)
    x = rng.normal(size=5)
    assert np.allclose(nn.mlp_forward(p, x)[0], _reference_forward(p, x), atol=1e-12, rtol=0)
    xb = rng.normal(size=(4, 5))
    assert np.allclose(nn.mlp_forward(p, xb)[0], np.stack([_reference_forward(p, r) for r in xb]),
                       atol=1e-12, rtol=0)


def test_dimension_mismatch():
    p = nn.init_mlp([3, 2], [A], np.random.default_rng(0))
    with pytest.raises(ValueError):
        nn.mlp_forward(p, np.ones(4))
    with pytest.raises(ValueError):
        nn.MlpParams([np.ones((3, 2)), np.ones((3, 1))], [np.ones(2), np.ones(1)], (A, A))
    with pytest.raises(ValueError):
        nn.init_mlp([3, 2, 1], [A], np.random.default_rng(0))


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("acts", [(L, L, L), (L, A), (A,)])
def test_backward_matches_finite_differences(seed, acts):
    rng = np.random.default_rng(seed)
    sizes = [4] + [6] * (len(acts) - 1) + [3]
    p = nn.init_mlp(sizes, acts, rng)
    x = rng.normal(size=(5, 4))
    gout = rng.normal(size=(5, 3))
    _, cache = nn.mlp_forward(p, x)
    grads, gx = nn.mlp_backward(p, cache, gout)

    def f():
        return float(np.sum(nn.mlp_forward(p, x)[0] * gout))

    for a, n in zip(grads, oracles.numeric_grad(f, p.arrays())):
        assert oracles.rel_error(a, n) < 1e-4
    xs = [x]
    num_x = oracles.numeric_grad(lambda: float(np.sum(nn.mlp_forward(p, xs[0])[0] * gout)), xs)[0]
    assert oracles.rel_error(gx, num_x) < 1e-4


def test_backward_zero_output_grad():
    rng = np.random.default_rng(1)
    p = nn.init_mlp([3, 4, 2], [L, A], rng)
    _, cache = nn.mlp_forward(p, rng.normal(size=3))
    grads, gx = nn.mlp_backward(p, cache, np.zeros(2))
    assert all(np.all(g == 0) for g in grads) and np.all(gx == 0)


def test_linear_weight_grad_is_outer_product():
    rng = np.random.default_rng(2)
    p = nn.init_mlp([3, 2], [A], rng)
    x, g = rng.normal(size=3), rng.normal(size=2)
    _, cache = nn.mlp_forward(p, x)
    grads, gx = nn.mlp_backward(p, cache, g)
    assert np.allclose(grads[0], np.outer(x, g))
    assert np.allclose(grads[1], g)
    assert np.allclose(gx, p.weights[0] @ g)


def test_softmax_cases():
    assert np.allclose(nn.softmax(np.zeros(4)), 0.25)
    p = nn.softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1.0) and p[1] < 1e-300 + 1e-12
    assert np.allclose(np.exp(nn.log_softmax(np.array([3.0, 1.0, -2.0]))), nn.softmax(np.array([3.0, 1.0, -2.0])))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_softmax_is_distribution(logits):
    p = nn.softmax(np.array(logits))
    assert np.all(p >= 0) and abs(p.sum() - 1.0) < 1e-12


def test_sampling_frequencies():
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    n = 100_000
    draws = nn.sample_categorical(np.tile(probs, (n, 1)), np.random.default_rng(0))
    freq = np.bincount(draws, minlength=4) / n
    sigma = np.sqrt(probs * (1 - probs) / n)
    assert np.all(np.abs(freq - probs) <= 3 * sigma)


def test_sampling_deterministic_and_degenerate():
    p = np.array([0.0, 1.0, 0.0])
    assert set(nn.sample_categorical(np.tile(p, (1000, 1)), np.random.default_rng(3))) == {1}
    a = nn.sample_categorical(np.tile([0.5, 0.5], (50, 1)), np.random.default_rng(9))
    b = nn.sample_categorical(np.tile([0.5, 0.5], (50, 1)), np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_log_prob():
    assert nn.log_prob([0.25, 0.75], 1) == pytest.approx(np.log(0.75))
    with pytest.raises(IndexError):
        nn.log_prob([0.5, 0.5], 2)


def test_adam_zero_gradient_is_noop():
    p = [np.array([1.0, -2.0])]
    st_ = nn.adam_init(p)
    nn.adam_step(p, [np.zeros(2)], st_)
    assert np.array_equal(p[0], [1.0, -2.0])


def test_adam_first_step():
    p = [np.array([0.5])]
    st_ = nn.adam_init(p, lr=0.001)
    nn.adam_step(p, [np.array([1.0])], st_)
    # m_hat = 1, v_hat = 1 -> delta = lr / (1 + eps)
    assert p[0][0] == pytest.approx(0.5 - 0.001 / (1 + 1e-8), abs=1e-15)


def test_adam_constant_gradient_step_tends_to_lr():
    p = [np.array([0.0])]
    st_ = nn.adam_init(p, lr=0.01)
    prev = 0.0
    for _ in range(2000):
        nn.adam_step(p, [np.array([3.0])], st_)
        step, prev = prev - p[0][0], p[0][0]
    assert step == pytest.approx(0.01, rel=1e-6)


def test_adam_shape_checks():
    p = [np.zeros(2)]
    st_ = nn.adam_init(p)
    with pytest.raises(ValueError):
        nn.adam_step(p, [np.zeros(3)], st_)
    with pytest.raises(ValueError):
        nn.adam_step(p, [], st_)


def test_clip_by_global_norm():
    g = [np.array([3.0]), np.array([4.0])]
    c = nn.clip_by_global_norm(g, 1.0)
    assert np.sqrt(sum(float(np.sum(x * x)) for x in c)) == pytest.approx(1.0)
    assert nn.clip_by_global_norm(g, 0.0)[0] is g[0]
    assert nn.clip_by_global_norm(g, 10.0)[1] is g[1]


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {"a.W0": rng.normal(size=(3, 4)), "a.b0": rng.normal(size=4), "s": np.array(2.5)}
    nn.save_arrays(tmp_path / "ck", arrays)
    raw = (tmp_path / "ck.bin").read_bytes()
    assert len(raw) == 8 * (12 + 4 + 1)
    back = nn.load_arrays(tmp_path / "ck")
    assert set(back) == set(arrays)
    for k in arrays:
        assert np.array_equal(back[k], arrays[k])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_forward_deterministic(seed):
    rng = np.random.default_rng(seed)
    p = nn.init_mlp([3, 5, 2], [L, L], rng)
    x = rng.normal(size=(2, 3))
    assert np.array_equal(nn.mlp_forward(p, x)[0], nn.mlp_forward(p, x)[0])
