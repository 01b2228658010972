import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swaphedge.errors import ContractError, DegenerateDataError, TrainingError
from swaphedge.regression import (
    Design,
    HedgeNetwork,
    TrainingSet,
    TrainOptions,
    adamax_pass,
    denormalized_portfolio_weights,
    forward,
    initialize,
    locally_connected_mask,
    load_networks,
    loss_and_grad,
    network_from_dict,
    network_to_dict,
    normalize,
    save_networks,
    train,
)


def _random_problem(rng, n=64, d=2, q=6):
    X = rng.normal(size=(n, d))
    y = np.maximum(X @ rng.normal(size=d) + 0.3, 0.0) + 0.05 * rng.normal(size=n)
    w = rng.uniform(0.5, 1.5, n)
    w /= w.sum()
    w1 = rng.normal(size=(q, d))
    b = rng.normal(size=q)
    w2 = rng.normal(size=q)
    return X, y, w, w1, b, w2


def test_gradient_matches_finite_differences(rng):
    X, y, w, w1, b, w2 = _random_problem(rng)
    mask = np.ones_like(w1)
    _, g_w1, g_b, g_w2 = loss_and_grad(w1, b, w2, mask, X, y, w)
    h = 1e-6

    def loss(w1_, b_, w2_):
        return loss_and_grad(w1_, b_, w2_, mask, X, y, w)[0]

    def check(param, grad, build):
        for idx in np.ndindex(param.shape):
            up, dn = param.copy(), param.copy()
            up[idx] += h
            dn[idx] -= h
            fd = (loss(*build(up)) - loss(*build(dn))) / (2 * h)
            assert grad[idx] == pytest.approx(fd, rel=1e-4, abs=1e-9)

    check(w1, g_w1, lambda p: (p, b, w2))
    check(b, g_b, lambda p: (w1, p, w2))
    check(w2, g_w2, lambda p: (w1, b, p))


def test_masked_gradient_is_zero_off_mask(rng):
    X, y, w, _, b, w2 = _random_problem(rng, q=4)
    mask = locally_connected_mask(4, 2)
    w1 = rng.normal(size=(4, 2)) * mask
    _, g_w1, *_ = loss_and_grad(w1, b, w2, mask, X, y, w)
    assert np.all(g_w1[mask == 0] == 0)


def test_full_batch_adamax_matches_reference(rng):
    # [DERIVED] textbook AdaMax on the exact full-batch gradient
    X, y, w, w1, b, w2 = _random_problem(rng, n=40, q=5)
    net = HedgeNetwork(Design.FULLY_CONNECTED_LOG, w1.copy(), b.copy(), w2.copy(),
                       np.ones_like(w1), np.zeros(2), np.ones(2))
    data = TrainingSet(X, y, w)
    opts = TrainOptions(batch_size=40)
    lr, b1, b2, eps = 1e-2, opts.beta1, opts.beta2, opts.eps
    state = None
    ref = [w1.copy(), b.copy(), w2.copy()]
    mom = [np.zeros_like(p) for p in ref]
    inf = [np.zeros_like(p) for p in ref]
    for step in range(1, 6):
        state = adamax_pass(net, data, np.arange(40, dtype=np.int64), lr, opts, state)
        _, *grads = loss_and_grad(*ref, np.ones_like(w1), X, y, w)
        for p, g, mo, u in zip(ref, grads, mom, inf):
            mo[...] = b1 * mo + (1 - b1) * g
            u[...] = np.maximum(b2 * u, np.abs(g))
            p -= lr / (1 - b1**step) * mo / (u + eps)
    np.testing.assert_allclose(net.w1, ref[0], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(net.b, ref[1], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(net.w2, ref[2], rtol=1e-10, atol=1e-12)


def test_normalize_statistics(rng):
    z = rng.normal(2.0, 3.0, size=(500, 2))
    v = rng.normal(1.0, 0.5, size=500)
    data, norm = normalize(z, v)
    np.testing.assert_allclose(data.inputs.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(data.inputs.std(axis=0, ddof=1), 1.0)
    # targets are scaled, not centred
    assert norm.sd_v == pytest.approx(v.std(ddof=1))
    np.testing.assert_allclose(data.targets * norm.sd_v, v)
    np.testing.assert_allclose(data.weights, 1 / 500)


def test_normalize_constant_targets_falls_back_to_unit_scale(rng):
    data, norm = normalize(rng.normal(size=(10, 1)), np.zeros(10))
    assert norm.sd_v == 1.0
    assert np.all(data.targets == 0)


def test_normalize_rejects_degenerate_inputs():
    with pytest.raises(DegenerateDataError):
        normalize(np.ones((5, 1)), np.arange(5.0))
    with pytest.raises(DegenerateDataError):
        normalize(np.ones((1, 1)), np.ones(1))


def test_initialization_sign_conventions():
    pay = initialize(Design.ONE_FACTOR, 32, 1, payer=True, seed=1)
    rec = initialize(Design.ONE_FACTOR, 32, 1, payer=False, seed=1)
    assert np.all(pay.w1 >= 0) and np.all(pay.b <= 0)
    assert np.all(rec.w1 <= 0) and np.all(rec.b >= 0)
    assert np.all(np.abs(pay.w2) <= 1)
    np.testing.assert_array_equal(pay.w1, -rec.w1)


def test_locally_connected_layout():
    mask = locally_connected_mask(6, 2)
    np.testing.assert_array_equal(mask.sum(axis=1), 1)
    np.testing.assert_array_equal(np.argmax(mask, axis=1), [0, 0, 0, 1, 1, 1])
    net = initialize(Design.LOCALLY_CONNECTED, 6, 2, payer=False, seed=0)
    assert np.all(net.w1[mask == 0] == 0)
    with pytest.raises(ContractError):
        locally_connected_mask(5, 2)
    with pytest.raises(ContractError):
        initialize(Design.ONE_FACTOR, 4, 2, payer=False)


def test_warm_start_copies_previous_network():
    prev = initialize(Design.ONE_FACTOR, 8, 1, payer=False, seed=3)
    warm = initialize(Design.ONE_FACTOR, 8, 1, payer=False, prev=prev, seed=99)
    np.testing.assert_array_equal(warm.w1, prev.w1)
    warm.w1[0, 0] += 1.0
    assert warm.w1[0, 0] != prev.w1[0, 0]
    with pytest.raises(ContractError):
        initialize(Design.ONE_FACTOR, 4, 1, payer=False, prev=prev)


def test_training_fits_a_single_kink(rng):
    # a call payoff is exactly one hidden node
    z = rng.uniform(0.8, 1.0, size=(2000, 1))
    v = 100 * np.maximum(z[:, 0] - 0.9, 0.0)
    data, norm = normalize(z, v)
    net0 = initialize(Design.ONE_FACTOR, 8, 1, payer=True, seed=0)
    before = net0.copy()
    net, diag = train(net0, data, TrainOptions(epochs=200, learning_rate=5e-3, final_learning_rate=1e-5,
                                               tol=None, polish_output=True, seed=1), norm)
    assert diag.mae < 0.02
    assert diag.epochs == 200
    assert diag.history[-1] < diag.history[0]
    np.testing.assert_allclose(forward(net, z), v, atol=0.1)
    # the starting network is not modified
    np.testing.assert_array_equal(net0.w1, before.w1)
    np.testing.assert_array_equal(net0.w2, before.w2)


def test_training_is_deterministic(rng):
    z = rng.normal(size=(300, 1))
    v = np.maximum(z[:, 0], 0)
    data, norm = normalize(z, v)
    opts = TrainOptions(epochs=10, seed=4)
    a, _ = train(initialize(Design.ONE_FACTOR, 4, 1, False, seed=0), data, opts, norm)
    b, _ = train(initialize(Design.ONE_FACTOR, 4, 1, False, seed=0), data, opts, norm)
    np.testing.assert_array_equal(a.w1, b.w1)
    np.testing.assert_array_equal(a.w2, b.w2)


def test_early_stopping(rng):
    z = rng.normal(size=(200, 1))
    data, norm = normalize(z, np.maximum(z[:, 0], 0))
    _, diag = train(initialize(Design.ONE_FACTOR, 4, 1, True, seed=0), data,
                    TrainOptions(epochs=5000, tol=1e-3, patience=3, learning_rate=1e-2), norm)
    assert diag.epochs < 5000


def test_divergence_raises_training_error(rng):
    z = rng.normal(size=(64, 1))
    data, norm = normalize(z, np.maximum(z[:, 0], 0))
    data.targets[:] = 1e300
    with pytest.raises(TrainingError) as info:
        train(initialize(Design.ONE_FACTOR, 4, 1, True, seed=0), data,
              TrainOptions(epochs=50, learning_rate=1e10), norm)
    assert info.value.epoch >= 0


def test_learning_rate_schedule():
    opts = TrainOptions(epochs=11, learning_rate=1e-2, final_learning_rate=1e-4)
    assert opts.rate(0) == pytest.approx(1e-2)
    assert opts.rate(5) == pytest.approx(1e-3)
    assert opts.rate(10) == pytest.approx(1e-4)
    assert TrainOptions(learning_rate=3e-4).rate(7) == 3e-4
    with pytest.raises(ContractError):
        TrainOptions(learning_rate=0.0)


def test_dimension_mismatch(rng):
    net = initialize(Design.LOCALLY_CONNECTED, 4, 2, False, seed=0)
    with pytest.raises(ContractError):
        forward(net, rng.normal(size=(3, 3)))
    with pytest.raises(ContractError):
        train(net, TrainingSet(rng.normal(size=(5, 1)), np.ones(5)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), q=st.integers(1, 12), d=st.integers(1, 3))
def test_denormalized_weights_reproduce_forward(seed, q, d):
    r = np.random.default_rng(seed)
    net = HedgeNetwork(Design.FULLY_CONNECTED_LOG, r.normal(size=(q, d)), r.normal(size=q),
                       r.normal(size=q), np.ones((q, d)), r.normal(size=d), r.uniform(0.1, 3, d),
                       float(r.uniform(0.1, 10)))
    z = r.normal(size=(20, d))
    w1o, bo, w2o = denormalized_portfolio_weights(net)
    direct = np.maximum(z @ w1o.T + bo, 0) @ w2o
    np.testing.assert_allclose(direct, forward(net, z), rtol=1e-10, atol=1e-10)


def test_serialization_round_trip(tmp_path, rng):
    net = initialize(Design.LOCALLY_CONNECTED, 6, 2, True, seed=5)
    net.mu_z = rng.normal(size=2)
    net.sd_z = rng.uniform(0.1, 1.0, 2)
    net.sd_v = 0.123456789
    net.expiry = 3.0
    net.maturities = np.array([4.5, 6.0])
    back = network_from_dict(network_to_dict(net))
    z = rng.normal(size=(7, 2))
    np.testing.assert_array_equal(forward(back, z), forward(net, z))
    assert back.design is Design.LOCALLY_CONNECTED and back.expiry == 3.0
    path = tmp_path / "nets.json"
    save_networks([net, net], path, extra={"tag": "x"})
    nets, payload = load_networks(path)
    assert len(nets) == 2 and payload["tag"] == "x"
    np.testing.assert_array_equal(nets[1].w1, net.w1)
    np.testing.assert_array_equal(nets[1].maturities, net.maturities)
