import itertools
import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central_difference, supcon_reference
from rulcon.losses import fine_supcon_loss, mse_loss, supcon_loss

GOLDEN_ABC = 0.6969159932882913  # oracle value for the three-vector example, tau = 0.5


def unit(rows):
    z = torch.tensor(rows, dtype=torch.float64)
    return z / z.norm(dim=1, keepdim=True)


def random_batch(rng, n, p):
    z = rng.normal(size=(n, p))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def test_golden_example():
    z = torch.tensor([[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]], dtype=torch.float64)
    assert float(supcon_loss(z, [0, 0, 1], 0.5)) == pytest.approx(GOLDEN_ABC, rel=1e-12)


def test_two_same_label_is_zero():
    z = unit([[1.0, 2.0], [-3.0, 0.5]])
    assert float(supcon_loss(z, [4, 4], 0.1)) == pytest.approx(0.0, abs=1e-12)


def test_no_positives_is_zero():
    z = unit(np.random.default_rng(0).normal(size=(6, 3)))
    assert float(supcon_loss(z, list(range(6)), 0.1)) == 0.0


def test_errors():
    with pytest.raises(ValueError):
        supcon_loss(unit([[1.0, 0.0]]), [0], 0.1)
    with pytest.raises(ValueError):
        supcon_loss(torch.tensor([[1.0, 0.0], [float("nan"), 0.0]]), [0, 0], 0.1)
    with pytest.raises(ValueError):
        supcon_loss(torch.tensor([[2.0, 0.0], [1.0, 0.0]]), [0, 0], 0.1)
    with pytest.raises(ValueError):
        supcon_loss(unit([[1.0, 0.0], [0.0, 1.0]]), [0, 0, 1], 0.1)


def test_mean_reduction():
    z = torch.tensor([[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]], dtype=torch.float64)
    assert float(supcon_loss(z, [0, 0, 1], 0.5, reduction="mean")) == pytest.approx(GOLDEN_ABC / 3)


def test_tolerance_band_matches_oracle():
    rng = np.random.default_rng(3)
    z = random_batch(rng, 12, 4)
    labels = rng.integers(0, 8, 12).tolist()
    got = float(supcon_loss(torch.tensor(z), labels, 0.2, tolerance=1))
    assert got == pytest.approx(supcon_reference(z.tolist(), labels, 0.2, tolerance=1), rel=1e-9)


def test_vectorized_matches_double_loop_on_200_batches():
    rng = np.random.default_rng(2024)
    for k, tau in zip(range(200), itertools.cycle([0.05, 0.1, 0.5, 1.0])):
        n = int(rng.integers(2, 33))
        p = int(rng.integers(1, 17))
        z = random_batch(rng, n, p)
        labels = rng.integers(0, max(1, n // 3), n).tolist()
        ref = supcon_reference(z.tolist(), labels, tau)
        got = float(supcon_loss(torch.tensor(z), labels, tau))
        assert got == pytest.approx(ref, rel=1e-9, abs=1e-12), (k, n, p, tau)


def test_fine_loss_reduces_to_supcon():
    rng = np.random.default_rng(7)
    z = torch.tensor(random_batch(rng, 20, 8))
    rul = rng.integers(100, 110, 20)
    assert float(fine_supcon_loss(z, rul, 0.1, hs_labels=np.ones(20, int), hs_class=1)) == \
        float(supcon_loss(z, rul, 0.1))
    with pytest.raises(ValueError):
        fine_supcon_loss(z, rul, 0.1, hs_labels=np.r_[np.ones(19, int), 2], hs_class=1)


def test_fine_loss_all_identical_hs0_is_the_minimum():
    # every other view is a positive, so each anchor pays at least log(n - 1);
    # identical embeddings attain exactly that
    n = 8
    z = unit(np.ones((n, 4)))
    best = float(fine_supcon_loss(z, [125] * n, 0.1))
    assert best == pytest.approx(n * np.log(n - 1), rel=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(20):
        jittered = unit(np.ones((n, 4)) + 0.3 * rng.normal(size=(n, 4)))
        assert float(fine_supcon_loss(jittered, [125] * n, 0.1)) > best


def test_fine_loss_distinct_labels_is_zero():
    z = unit(np.random.default_rng(1).normal(size=(8, 4)))
    assert float(fine_supcon_loss(z, np.arange(100, 108), 0.1)) == 0.0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), tau=st.sampled_from([0.05, 0.1, 0.5, 1.0]))
def test_non_negative_and_permutation_invariant(seed, tau):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 25))
    z = random_batch(rng, n, int(rng.integers(2, 9)))
    labels = rng.integers(0, 4, n)
    base = float(supcon_loss(torch.tensor(z), labels, tau))
    perm = rng.permutation(n)
    shuffled = float(supcon_loss(torch.tensor(z[perm]), labels[perm], tau))
    assert base >= 0
    assert shuffled == pytest.approx(base, abs=1e-12, rel=1e-12)


def _rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def _autograd(fn, x):
    t = torch.tensor(x, dtype=torch.float64, requires_grad=True)
    fn(t).backward()
    return t.grad.numpy()


def test_supcon_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n, p = int(rng.integers(2, 12)), int(rng.integers(2, 6))
        z = random_batch(rng, n, p)
        labels = rng.integers(0, 3, n)
        tau = float(rng.choice([0.1, 0.5, 1.0]))

        def f(t):
            return supcon_loss(t, labels, tau, check_unit_norm=False)

        g = _autograd(f, z)
        fd = central_difference(lambda flat: float(f(torch.tensor(flat, dtype=torch.float64).reshape(n, p))), z.ravel().tolist())
        assert _rel_err(g.ravel(), fd) < 1e-4


def test_fine_gradients_match_finite_differences():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n, p = int(rng.integers(2, 12)), int(rng.integers(2, 6))
        z = random_batch(rng, n, p)
        rul = rng.integers(50, 55, n)

        def f(t):
            return fine_supcon_loss(t, rul, 0.1, check_unit_norm=False)

        g = _autograd(f, z)
        fd = central_difference(lambda flat: float(f(torch.tensor(flat, dtype=torch.float64).reshape(n, p))), z.ravel().tolist())
        assert _rel_err(g.ravel(), fd) < 1e-4


def test_mse_gradients_match_finite_differences():
    rng = np.random.default_rng(13)
    for _ in range(50):
        n = int(rng.integers(1, 20))
        pred, target = rng.uniform(0, 1, n), torch.tensor(rng.uniform(0, 1, n), dtype=torch.float64)
        g = _autograd(lambda t: mse_loss(t, target), pred)
        fd = central_difference(lambda x: float(mse_loss(torch.tensor(x, dtype=torch.float64), target)), pred.tolist())
        assert _rel_err(g, fd) < 1e-4


@pytest.mark.parametrize("pred, target, expected", [
    ([0.2, 0.7], [0.2, 0.7], 0.0),
    ([1.0, 0.0], [0.0, 1.0], 1.0),
    ([0.5, 0.6], [0.2, 0.2], 0.125),
])
def test_mse_examples(pred, target, expected):
    got = float(mse_loss(torch.tensor(pred, dtype=torch.float64), torch.tensor(target, dtype=torch.float64)))
    assert got == pytest.approx(expected, abs=1e-12)


def test_mse_length_mismatch():
    with pytest.raises(ValueError):
        mse_loss(torch.zeros(3), torch.zeros(2))


def test_temperature_monotone_at_minimizer():
    # two classes, positives collapsed, classes orthogonal
    z = unit([[1, 0]] * 4 + [[0, 1]] * 4)
    labels = [0] * 4 + [1] * 4
    losses = [float(supcon_loss(z, labels, tau)) for tau in (1.0, 0.5, 0.1, 0.05)]
    assert all(a > b for a, b in zip(losses, losses[1:]))


def test_tiny_loss_keeps_relative_precision():
    # two aligned positives far from the lone negative: loss ~ 2*log(1 + e^-40)
    z = torch.tensor([[1.0], [1.0], [-1.0]], dtype=torch.float64)
    got = float(supcon_loss(z, [0, 0, 1], tau=0.05))
    assert got == pytest.approx(2 * math.log1p(math.exp(-40)), rel=1e-12)
