import math
import os
import subprocess
import sys
import warnings

import numpy as np
import pytest

from spinboson.bath import fourier_coefficients
from spinboson.model import SimulationParams
from spinboson.noise import sample_amplitudes
from spinboson.sse import (
    MAX_OUTPUT_POINTS,
    TrajectoryError,
    generator,
    output_stride,
    propagate_trajectory,
    run_ensemble,
    thread_count,
)

# cheap configuration: omega_c at its 10*delta floor, 800 steps, 256 modes
SMALL = SimulationParams(delta=2.0, alpha=0.1, omega_c=20.0, t_max=4.0, n_traj=200, seed=5)


@pytest.fixture(scope="module")
def small_basis():
    return fourier_coefficients(SMALL)


def lindblad_reference(p, h):
    """Vectorized ``-i[H, .] + D`` at ``alpha = 0``, built from the operators."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2)
    ham = 0.5 * p.delta * sx + 0.5 * h * sz
    gen = -1j * (np.kron(ham, eye) - np.kron(eye, ham.T))
    for rate, op in ((p.gamma_phi, sz), (p.gamma_x, sx)):
        lop = math.sqrt(rate) * op
        gen += np.kron(lop, lop.conj()) - 0.5 * (
            np.kron(lop.conj().T @ lop, eye) + np.kron(eye, lop.T @ lop.conj())
        )
    return 1j * gen  # B with dpsi/dt = -i B psi


@pytest.mark.parametrize("gp, gx, h", [(0, 0, 0), (0.3, 0, 1.7), (0, 0.25, -0.4), (0.2, 0.1, 3.0)])
def test_generator_matches_lindblad_form(gp, gx, h):
    p = SimulationParams(delta=2.0, alpha=0.0, omega_c=100.0, gamma_phi=gp, gamma_x=gx)
    np.testing.assert_allclose(generator(0.0, h, p), lindblad_reference(p, h), atol=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.3, 0.45])
def test_generator_conserves_trace(alpha):
    p = SimulationParams(delta=2.0, alpha=alpha, omega_c=100.0, gamma_phi=0.3, gamma_x=0.2)
    b = generator(0.0, 2.5, p)
    np.testing.assert_allclose(b[0] + b[3], 0.0, atol=1e-15)


def test_generator_ohmic_phases():
    p = SimulationParams(delta=2.0, alpha=0.2, omega_c=100.0)
    b = generator(0.0, 0.0, p)
    assert b[1, 0] == pytest.approx(-np.exp(0.2j * np.pi))
    assert b[2, 3] == pytest.approx(-np.exp(0.2j * np.pi))
    assert b[1, 3] == pytest.approx(np.exp(-0.2j * np.pi))


def free_dephasing(t, g, d=2.0):
    nu = math.sqrt(d * d - g * g)
    return np.exp(-g * t) * (np.cos(nu * t) + g / nu * np.sin(nu * t))


@pytest.mark.parametrize("gp, gx", [(0.0, 0.0), (0.4, 0.0), (0.0, 0.3)])
def test_free_spin_closed_forms(gp, gx):
    p = SimulationParams(delta=2.0, alpha=0.0, omega_c=100.0, t_max=10.0, gamma_phi=gp,
                         gamma_x=gx, n_traj=1)
    s = run_ensemble(p)
    exact = free_dephasing(s.times, gp) if gx == 0 else np.exp(-2 * gx * s.times) * np.cos(2 * s.times)
    assert np.max(np.abs(s.mean - exact)) <= 1e-6
    assert s.mean[0] == 1.0


def test_rk4_global_order():
    errors = []
    for dt in (0.04, 0.02, 0.01):
        p = SimulationParams(delta=2.0, alpha=0.0, omega_c=100.0, t_max=8.0, dt=dt,
                             gamma_phi=0.3, n_traj=1)
        with pytest.warns(UserWarning, match="exceeds"):
            s = run_ensemble(p)
        errors.append(abs(s.mean[-1] - free_dephasing(8.0, 0.3)))
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert min(orders) >= 3.8, orders


def test_step_halving_changes_trajectory_little(small_basis):
    noise = sample_amplitudes(SMALL.seed, 0, SMALL.m_max)
    coarse = propagate_trajectory(SMALL, small_basis, noise)
    fine = propagate_trajectory(SMALL.replace(dt=SMALL.dt / 2), small_basis, noise)
    np.testing.assert_allclose(fine.times[::2], coarse.times, rtol=1e-13)
    assert np.max(np.abs(fine.mean[::2] - coarse.mean)) <= 1e-4


def test_single_trajectory_ensemble(small_basis):
    p = SMALL.replace(n_traj=1)
    ens = run_ensemble(p, small_basis)
    one = propagate_trajectory(p, small_basis, sample_amplitudes(p.seed, 0, p.m_max))
    np.testing.assert_array_equal(ens.mean, one.mean)
    assert not np.any(ens.stderr)


def test_ensemble_starts_polarized_and_stays_hermitian(small_basis):
    s = run_ensemble(SMALL, small_basis)
    assert s.mean[0] == 1.0 and s.stderr[0] == 0.0
    assert np.max(np.abs(s.imag_residue)) < 1e-10
    assert len(s) == SMALL.n_steps // output_stride(SMALL.n_steps) + 1


def test_batch_size_does_not_change_bits(small_basis):
    a = run_ensemble(SMALL, small_basis, batch_size=64)
    b = run_ensemble(SMALL, small_basis, batch_size=7)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)


def test_stderr_scales_with_inverse_root_n(small_basis):
    small = run_ensemble(SMALL.replace(n_traj=200), small_basis)
    large = run_ensemble(SMALL.replace(n_traj=800), small_basis)
    ratio = np.mean(large.stderr[1:]) / np.mean(small.stderr[1:])
    assert ratio == pytest.approx(0.5, rel=0.2)


def test_thread_count_respects_env(monkeypatch):
    monkeypatch.setenv("SPINBOSON_THREADS", "1")
    assert thread_count() == 1
    assert thread_count(8) == 1


def test_identical_results_across_thread_counts(tmp_path):
    script = (
        "import sys, numpy as np\n"
        "from spinboson.model import SimulationParams\n"
        "from spinboson.sse import run_ensemble\n"
        "p = SimulationParams(delta=2.0, alpha=0.1, omega_c=20.0, t_max=4.0, n_traj=300, seed=9)\n"
        "s = run_ensemble(p)\n"
        "np.save(sys.argv[1], np.concatenate([s.mean, s.stderr]))\n"
    )
    outs = []
    for threads in ("1", "2"):
        env = dict(os.environ, NUMBA_NUM_THREADS=threads, SPINBOSON_THREADS=threads)
        path = tmp_path / f"run{threads}.npy"
        subprocess.run([sys.executable, "-c", script, str(path)], env=env, check=True)
        outs.append(np.load(path))
    assert outs[0].tobytes() == outs[1].tobytes()


def test_coarse_step_warns(small_basis):
    with pytest.warns(UserWarning, match="under-resolved"):
        run_ensemble(SMALL.replace(dt=0.01, n_traj=2), small_basis)


def test_basis_mismatch_rejected(small_basis):
    with pytest.raises(ValueError, match="different"):
        run_ensemble(SMALL.replace(t_max=3.0), small_basis)


def test_blow_up_reported_with_trajectory_index():
    # 2 * gamma_phi * dt = 20 lies far outside the RK4 stability region
    p = SimulationParams(delta=2.0, alpha=0.0, omega_c=20.0, t_max=400.0, dt=1.0,
                         gamma_phi=10.0, n_traj=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(TrajectoryError) as info:
            run_ensemble(p)
    assert info.value.traj_index == 0
    assert 0 < info.value.time <= 400.0


def test_output_grid_is_capped():
    assert output_stride(20000) == 10
    assert output_stride(MAX_OUTPUT_POINTS) == 1
