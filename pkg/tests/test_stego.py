import numpy as np
import pytest

from nlpi import (
    SolverConfig,
    gaussian_blur_op,
    l2_norm,
    power_iteration_zero_mean,
    steg_decode,
    steg_encode,
)

from oracles import checkerboard


@pytest.fixture(scope="module")
def blur_eigenfunction():
    # Cheap, exactly reproducible eigenfunction to carry messages in tests.
    op = gaussian_blur_op(1.0, "periodic")
    rng = np.random.default_rng(5)
    res = power_iteration_zero_mean(op, rng.standard_normal((16, 16)), SolverConfig(max_iters=3000))
    assert res.converged
    return op, res.eigenfunction


def test_encode_amplitude_zero_is_noop(blur_eigenfunction):
    _, u = blur_eigenfunction
    pkg = steg_encode(u, checkerboard(4), 0.0, 2, 2)
    assert np.array_equal(pkg.carrier, u)


def test_encode_all_zero_message_is_noop(blur_eigenfunction):
    _, u = blur_eigenfunction
    pkg = steg_encode(u, np.zeros((4, 4)), 0.5, 2, 2)
    assert np.array_equal(pkg.carrier, u)


def test_encode_support_is_exactly_the_block(blur_eigenfunction):
    _, u = blur_eigenfunction
    msg = checkerboard(4)
    amp = 0.02 * float(np.abs(u).max())
    pkg = steg_encode(u, msg, amp, 6, 6)
    delta = pkg.carrier - u
    # Inside the block: amplitude * message up to one float rounding.
    assert np.max(np.abs(delta[6:10, 6:10] - amp * msg)) < 1e-15
    # Outside the block: bitwise untouched.
    delta[6:10, 6:10] = 0.0
    assert not delta.any()
    assert pkg.placement == (6, 6) and pkg.message_dims == (4, 4)


def test_encode_rejects_non_binary(blur_eigenfunction):
    _, u = blur_eigenfunction
    with pytest.raises(ValueError, match="0 and 1"):
        steg_encode(u, np.full((2, 2), 0.5), 1.0, 0, 0)


def test_encode_rejects_out_of_bounds(blur_eigenfunction):
    _, u = blur_eigenfunction
    with pytest.raises(ValueError, match="does not fit"):
        steg_encode(u, np.ones((4, 4)), 1.0, 14, 14)


def test_decode_round_trip_matched_operator(blur_eigenfunction):
    op, u = blur_eigenfunction
    msg = checkerboard(4)
    amp = 0.02 * float(np.abs(u).max())
    pkg = steg_encode(u, msg, amp, 6, 6)
    dec = steg_decode(pkg.carrier, op, iters=500, region=(6, 6, 4, 4))
    assert np.array_equal(dec.message_estimate, msg)
    # The small perturbation is healed: recovered close to the original mode.
    assert l2_norm(dec.recovered - u) / l2_norm(u) < 0.05


def test_decode_whole_image_when_no_region(blur_eigenfunction):
    op, u = blur_eigenfunction
    pkg = steg_encode(u, np.ones((3, 3)), 0.02 * float(np.abs(u).max()), 2, 9)
    dec = steg_decode(pkg.carrier, op, iters=300)
    assert dec.message_estimate.shape == u.shape
    est_ones = np.argwhere(dec.message_estimate == 1.0)
    assert len(est_ones) > 0
    assert (est_ones[:, 0] >= 2).all() and (est_ones[:, 0] < 5).all()
    assert (est_ones[:, 1] >= 9).all() and (est_ones[:, 1] < 12).all()


def test_decode_amplitude_zero_gives_empty_estimate(blur_eigenfunction):
    op, u = blur_eigenfunction
    dec = steg_decode(u.copy(), op, iters=200)
    f0 = u - u.mean()
    assert l2_norm(dec.difference) < 10 * 1e-7 * l2_norm(f0)
    assert not dec.message_estimate.any()


def test_decode_deterministic(blur_eigenfunction):
    op, u = blur_eigenfunction
    pkg = steg_encode(u, checkerboard(4), 0.05, 3, 3)
    a = steg_decode(pkg.carrier, op, iters=100)
    b = steg_decode(pkg.carrier, op, iters=100)
    assert np.array_equal(a.recovered, b.recovered)
    assert np.array_equal(a.difference, b.difference)
    assert np.array_equal(a.message_estimate, b.message_estimate)


def test_decode_validates_arguments(blur_eigenfunction):
    op, u = blur_eigenfunction
    with pytest.raises(ValueError, match="iters"):
        steg_decode(u, op, iters=0)
    with pytest.raises(ValueError, match="threshold_frac"):
        steg_decode(u, op, iters=10, threshold_frac=0.0)
    with pytest.raises(ValueError, match="region"):
        steg_decode(u, op, iters=10, region=(10, 10, 8, 8))
