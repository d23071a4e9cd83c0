import numpy as np
import pytest

from nlpi import divergence, gradient, inner, l2_norm, tv_denoise

from oracles import disk_image, natural_test_image


def test_gradient_divergence_adjoint(rng):
    # <grad u, p> = -<u, div p> must hold to machine precision.
    for _ in range(100):
        u = rng.standard_normal((16, 16))
        px = rng.standard_normal((16, 16))
        py = rng.standard_normal((16, 16))
        gx, gy = gradient(u)
        lhs = inner(gx, px) + inner(gy, py)
        rhs = -inner(u, divergence(px, py))
        assert abs(lhs - rhs) < 1e-12


def test_gradient_of_constant_is_zero():
    gx, gy = gradient(np.full((5, 5), 3.3))
    assert not gx.any() and not gy.any()


def test_constant_image_is_fixed_point():
    u = np.full((10, 10), 0.6)
    out = tv_denoise(u, eta=1.0, inner_iters=50)
    assert np.max(np.abs(out - u)) < 1e-14


def test_fidelity_dominant_limit(rng):
    # With a huge eta the data term wins and the output barely moves.
    u = rng.standard_normal((16, 16))
    out = tv_denoise(u, eta=1e6, inner_iters=200)
    assert l2_norm(out - u) / l2_norm(u) < 1e-3


def test_single_iteration_moves_nonconstant_input(rng):
    u = rng.standard_normal((8, 8))
    out = tv_denoise(u, eta=1.0, inner_iters=1)
    assert l2_norm(out - u) > 0


def test_inner_iters_zero_rejected():
    with pytest.raises(ValueError, match="inner_iters"):
        tv_denoise(np.zeros((4, 4)), eta=1.0, inner_iters=0)


def test_tau_stability_range_enforced():
    u = np.zeros((4, 4))
    for bad in (0.0, 0.2, -0.1):
        with pytest.raises(ValueError, match="tau"):
            tv_denoise(u, eta=1.0, inner_iters=1, tau=bad)
    tv_denoise(u, eta=1.0, inner_iters=1, tau=0.125)  # boundary value is fine


def test_eta_must_be_positive():
    with pytest.raises(ValueError, match="eta"):
        tv_denoise(np.zeros((4, 4)), eta=0.0)


def test_disk_shrinkage_matches_analytic_solution():
    # One denoising step on a radius-16 disk drops the interior level by
    # 2/(eta*r) = 0.125 (continuum solution); 2% tolerance away from the
    # discrete boundary ring.
    n, r, eta = 64, 16, 1.0
    u = disk_image(n, r, height=1.0)
    out = tv_denoise(u, eta, inner_iters=8000)
    rows, cols = np.mgrid[0:n, 0:n]
    c = (n - 1) / 2
    dist = np.sqrt((rows - c) ** 2 + (cols - c) ** 2)
    interior = dist <= r - 4
    drop = float((u - out)[interior].mean())
    assert abs(drop - 2.0 / (eta * r)) <= 0.02 * (2.0 / (eta * r))
    # The interior stays flat: the shape is preserved, only the level drops.
    assert float(out[interior].std()) < 5e-3


def test_mass_preserved(rng):
    u = natural_test_image(32)
    out = tv_denoise(u, eta=2.0, inner_iters=300)
    assert abs(out.sum() - u.sum()) < 1e-8 * abs(u.sum())


def test_empirically_nonexpansive(rng):
    # ||T(x) - T(y)|| <= ||x - y|| at random pairs, as expected of a denoiser.
    for _ in range(10):
        x = rng.standard_normal((12, 12))
        y = rng.standard_normal((12, 12))
        tx = tv_denoise(x, eta=1.0, inner_iters=150)
        ty = tv_denoise(y, eta=1.0, inner_iters=150)
        assert l2_norm(tx - ty) <= l2_norm(x - y) + 1e-9
