import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mfsr.degradation import DegradationSpec, ObservationOperator, ObservationSet, build_operator, synthesize
from mfsr.errors import DimensionError, InputError, ParameterError
from mfsr.imaging import Image, initial_estimate, new_image
from mfsr.metrics import psnr
from mfsr.pocs import (
    PocsConfig,
    phi0_from_noise,
    pocs_reconstruct,
    project_amplitude,
    project_data_consistency,
    residual,
)
from mfsr import testimages

from _oracles import random_row_case


def _identity(n=1):
    return build_operator(DegradationSpec(), (1, n))


def test_residual_examples(quarter_shift_obs):
    hr, obs = quarter_shift_obs
    g, op = obs.frames[1]
    assert all(residual(op, hr, g, n) == pytest.approx(0.0, abs=1e-12) for n in range(0, op.n_rows, 37))
    zero = new_image(*reversed(hr.shape))
    assert residual(op, zero, g, 5) == g.data.ravel()[5]
    ident = _identity()
    assert residual(ident, Image([[3.0]]), Image([[10.0]]), 0) == 7.0
    with pytest.raises(IndexError):
        residual(ident, Image([[3.0]]), Image([[10.0]]), 1)


def test_projection_examples():
    op = _identity()
    x = Image([[5.0]])
    up = project_data_consistency(x, op, Image([[10.0]]), 0, phi0=2.0)
    assert up.data[0, 0] == 8.0
    assert residual(op, up, Image([[10.0]]), 0) == 2.0
    down = project_data_consistency(x, op, Image([[0.0]]), 0, phi0=2.0)
    assert down.data[0, 0] == 2.0
    assert residual(op, down, Image([[0.0]]), 0) == -2.0
    inside = project_data_consistency(x, op, Image([[6.5]]), 0, phi0=2.0)
    assert inside is x


def test_projection_relaxation():
    op = _identity()
    out = project_data_consistency(Image([[5.0]]), op, Image([[10.0]]), 0, phi0=2.0, relaxation=0.5)
    assert out.data[0, 0] == 6.5


def test_projection_argument_checks():
    op = _identity()
    with pytest.raises(ParameterError):
        project_data_consistency(Image([[1.0]]), op, Image([[1.0]]), 0, phi0=-1)
    with pytest.raises(ParameterError):
        project_data_consistency(Image([[1.0]]), op, Image([[1.0]]), 0, phi0=0, relaxation=0)
    with pytest.raises(DimensionError):
        project_data_consistency(Image([[1.0, 2.0]]), op, Image([[1.0]]), 0, phi0=0)


def test_zero_norm_row_is_skipped(caplog):
    op = ObservationOperator(sp.csr_matrix((1, 2)), (1, 2), (1, 1))
    x = Image([[1.0, 2.0]])
    assert project_data_consistency(x, op, Image([[9.0]]), 0, phi0=0.0) is x
    assert "zero-norm" in caplog.text


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_projection_lands_in_set_and_is_idempotent(seed):
    op, x, g, phi0 = random_row_case(seed)
    once = project_data_consistency(x, op, g, 0, phi0)
    assert abs(residual(op, once, g, 0)) <= phi0 + 1e-9
    twice = project_data_consistency(once, op, g, 0, phi0)
    np.testing.assert_allclose(twice.data, once.data, atol=1e-9)
    if abs(residual(op, x, g, 0)) <= phi0:
        assert np.array_equal(once.data, x.data)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), relaxation=st.floats(0.05, 1.0))
def test_projection_is_nonexpansive_towards_feasible_points(seed, relaxation):
    op, x, g, phi0 = random_row_case(seed)
    r = np.random.default_rng(seed + 1)
    z = Image(r.uniform(0, 255, x.shape))
    # move z into the set |g - h.z| <= phi0
    z = project_data_consistency(z, op, g, 0, phi0)
    px = project_data_consistency(x, op, g, 0, phi0, relaxation)
    assert np.linalg.norm(px.data - z.data) <= np.linalg.norm(x.data - z.data) + 1e-9


def test_amplitude_examples():
    out = project_amplitude(Image([[-5.0, 100.0, 300.0]]))
    np.testing.assert_array_equal(out.data, [[0.0, 100.0, 255.0]])


@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=20))
def test_amplitude_idempotent_and_bounded(values):
    once = project_amplitude(Image([values]))
    assert project_amplitude(once) == once
    assert once.data.min() >= 0.0 and once.data.max() <= 255.0


def test_phi0_from_noise():
    assert phi0_from_noise(100.0, PocsConfig(phi0_confidence=1.0)) == 10.0
    assert phi0_from_noise(0.0, PocsConfig(phi0_floor=0.0)) == 0.0
    assert phi0_from_noise(0.0, PocsConfig(phi0_floor=1.5)) == 1.5
    assert phi0_from_noise(100.0, PocsConfig(phi0_confidence=2.0)) == 20.0
    with pytest.raises(ParameterError):
        phi0_from_noise(-1.0, PocsConfig())


@pytest.mark.parametrize(
    "kwargs", [dict(relaxation=0.0), dict(relaxation=1.5), dict(max_iters=0), dict(rel_tol=-1), dict(phi0_confidence=-1)]
)
def test_pocs_config_validation(kwargs):
    with pytest.raises(ParameterError):
        PocsConfig(**kwargs)


def test_stacked_system_is_determined(quarter_shift_obs):
    """Oracle for the exact-recovery example: the dense stacked system has the truth as unique solution."""
    hr, obs = quarter_shift_obs
    H = sp.vstack([op.matrix for _, op in obs.frames]).toarray()
    y = np.concatenate([g.data.ravel() for g, _ in obs.frames])
    assert np.linalg.matrix_rank(H) == H.shape[1]
    np.testing.assert_allclose(np.linalg.solve(H, y) if H.shape[0] == H.shape[1] else np.linalg.lstsq(H, y)[0],
                               hr.data.ravel(), atol=1e-6)


def test_pocs_exact_recovery(quarter_shift_obs):
    hr, obs = quarter_shift_obs
    x0 = initial_estimate(obs, (2, 2))
    out, trace = pocs_reconstruct(obs, x0, PocsConfig(max_iters=200, rel_tol=0.0), reference=hr)
    assert psnr(hr, out).psnr_db >= 50.0
    assert len(trace) == 200
    assert trace.records[-1].psnr_db == pytest.approx(psnr(hr, out).psnr_db)


def test_pocs_fixed_point_at_ground_truth(quarter_shift_obs):
    hr, obs = quarter_shift_obs
    out, trace = pocs_reconstruct(obs, hr, PocsConfig(max_iters=10))
    assert out == hr
    assert len(trace) == 1
    assert trace.records[0].violated == 0
    assert trace.records[0].rel_change == 0.0


def _violations(name, phi0):
    hr = getattr(testimages, name)(32)
    obs = synthesize(hr, 4, DegradationSpec(blur_length=3, blur_angle=5, decimation=(2, 2), seed=1), shift_range=3)
    _, trace = pocs_reconstruct(obs, initial_estimate(obs, (2, 2)), PocsConfig(phi0_floor=phi0, max_iters=30, rel_tol=0))
    return [r.violated for r in trace]


@pytest.mark.parametrize("name", ["scene", "blobs"])
def test_pocs_violations_nonincreasing_on_consistent_data(name):
    # Empirical, not a theorem: sequential projections may re-violate earlier
    # sets, and at phi0 = 0.5 the counts wobble by one or two.
    counts = _violations(name, 2.0)
    assert counts[0] > 0
    assert all(b <= a for a, b in zip(counts, counts[1:]))


@pytest.mark.parametrize("phi0", [0.5, 1.0, 2.0])
def test_pocs_violations_fall_overall(phi0):
    counts = _violations("scene", phi0)
    assert counts[-1] <= counts[0] / 4


def test_pocs_is_deterministic(small_noisy_obs):
    hr, obs = small_noisy_obs
    x0 = initial_estimate(obs, (2, 2))
    a, _ = pocs_reconstruct(obs, x0, PocsConfig(max_iters=5))
    b, _ = pocs_reconstruct(obs, x0, PocsConfig(max_iters=5))
    assert a == b
    assert a.data.min() >= 0 and a.data.max() <= 255


def test_pocs_stops_on_rel_tol(small_noisy_obs):
    _, obs = small_noisy_obs
    _, trace = pocs_reconstruct(obs, initial_estimate(obs, (2, 2)), PocsConfig(max_iters=500, rel_tol=1e-3))
    assert len(trace) < 500
    assert trace.records[-1].rel_change < 1e-3
    assert all(r.rel_change >= 1e-3 for r in trace.records[:-1])


def test_pocs_errors(small_noisy_obs):
    _, obs = small_noisy_obs
    with pytest.raises(InputError):
        pocs_reconstruct(ObservationSet([], 0.0, obs.hr_dims), new_image(16, 16))
    with pytest.raises(DimensionError):
        pocs_reconstruct(obs, new_image(8, 8))
