import numpy as np
import pytest

from blurguard.objectives import PoolObjective, RefEncoder, parse_objective, ref_encoder_weights
from blurguard import rng as bg_rng

from conftest import central_diff, rel_err


def test_zero_input_gives_zero_latent():
    enc = RefEncoder(seed=3)
    z = enc.encode(np.zeros((16, 16, 3)))
    assert z.shape == (2, 2, 16)
    assert not z.any()
    assert enc.value(np.zeros((16, 16, 3))) == 0.0


def test_latent_shape_64():
    assert RefEncoder(0).encode(np.full((64, 64, 3), 0.5)).shape == (8, 8, 16)


def test_deterministic_and_seed_dependent(rng):
    x = rng.random((16, 16, 3))
    a, b = RefEncoder(42).encode(x), RefEncoder(42).encode(x)
    assert np.array_equal(a, b)
    assert RefEncoder(7).value(x) == RefEncoder(7).value(x)
    assert RefEncoder(7).value(x) != RefEncoder(8).value(x)


def test_nonlinear(rng):
    enc = RefEncoder(42)
    x = rng.random((16, 16, 3))
    assert not np.allclose(enc.encode(2 * x), 2 * enc.encode(x))


def test_weight_stream_layout():
    w = ref_encoder_weights(5)
    assert [a.shape for a in w] == [(8, 3, 3, 3), (16, 8, 3, 3), (16, 16, 3, 3)]
    draws = bg_rng.gaussian(5, 216 + 1152 + 2304)
    assert np.array_equal(w[0].ravel(), np.sqrt(2 / 27) * draws[:216])
    assert np.array_equal(w[2].ravel(), np.sqrt(2 / 144) * draws[216 + 1152 :])


def test_first_layer_matches_direct_convolution(rng):
    # explicit stride-2, pad-1 convolution loop as an independent forward oracle
    enc = RefEncoder(11)
    x = rng.random((8, 8, 3))
    w = enc.weights[0]
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    ref = np.zeros((4, 4, 8))
    for i in range(4):
        for j in range(4):
            for o in range(8):
                ref[i, j, o] = np.tanh(np.sum(xp[2 * i : 2 * i + 3, 2 * j : 2 * j + 3, :].transpose(2, 0, 1) * w[o]))
    one_layer = RefEncoder(11)
    one_layer.weights = one_layer.weights[:1]
    assert np.allclose(one_layer.encode(x), ref, atol=1e-14)


@pytest.mark.parametrize("shape", [(12, 16, 3), (16, 16, 1)])
def test_encoder_shape_contract(shape):
    with pytest.raises(ValueError):
        RefEncoder(0).encode(np.zeros(shape))


def test_encoder_gradient(rng):
    enc = RefEncoder(7)
    x = rng.random((16, 16, 3))
    assert rel_err(enc.grad(x), central_diff(enc.value, x, 1e-4)) < 1e-4


def test_encoder_gradient_with_target(rng):
    enc = RefEncoder(2, target=np.full((1, 1, 16), 0.1))
    x = rng.random((8, 8, 3))
    assert rel_err(enc.grad(x), central_diff(enc.value, x, 1e-4)) < 1e-4


def test_pool_values():
    assert PoolObjective(8).value(np.full((8, 8, 1), 0.5)) == pytest.approx(0.25)
    assert PoolObjective(8).value(np.ones((16, 16, 1))) == 4.0
    z = np.zeros((16, 16, 3))
    assert PoolObjective(8).value(z) == 0.0
    assert not PoolObjective(8).grad(z).any()


def test_pool_gradient(rng):
    obj = PoolObjective(4)
    x = rng.random((8, 12, 3))
    assert rel_err(obj.grad(x), central_diff(obj.value, x, 1e-4)) < 1e-4


def test_pool_equals_linear_encoder(rng):
    # the pooling written as an explicit matrix P: value ||P x||^2, gradient 2 P^T P x
    b, h, w = 4, 8, 8
    P = np.zeros(((h // b) * (w // b), h * w))
    for i in range(h):
        for j in range(w):
            P[(i // b) * (w // b) + j // b, i * w + j] = 1.0 / (b * b)
    x = rng.random((h, w, 1))
    v = x[:, :, 0].ravel()
    obj = PoolObjective(b)
    assert obj.value(x) == pytest.approx(float(np.sum((P @ v) ** 2)), abs=1e-12)
    assert np.allclose(obj.grad(x)[:, :, 0].ravel(), 2 * P.T @ (P @ v), atol=1e-12)


def test_pool_shape_contract():
    with pytest.raises(ValueError):
        PoolObjective(8).value(np.zeros((12, 16, 3)))
    with pytest.raises(ValueError):
        PoolObjective(0)


def test_parse_objective():
    assert parse_objective("ref_encoder:seed=9").seed == 9
    assert parse_objective("ref_encoder").seed == 0
    assert parse_objective("pool:block=4").block == 4
    assert parse_objective(parse_objective("pool:block=2").spec).block == 2
    for bad in ("vae", "pool:seed=1", "pool:4"):
        with pytest.raises(ValueError):
            parse_objective(bad)
