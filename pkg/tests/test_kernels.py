"""The numba kernels and their numpy twins must agree."""
import numpy as np
import pytest

from vrteleop import kernels
from vrteleop.kinematics import EPS_REACH, EPS_SINGULAR, fk_many
from vrteleop.trajgen import ARRIVAL_TOL

from conftest import random_joints

pytestmark = pytest.mark.skipif(kernels.nb is None, reason="numba not installed")


def test_backend_selection_reported():
    assert kernels.BACKEND in ("numba", "numpy")


def test_fk_batch_equivalent(model, rng):
    q = random_joints(rng, 500, model)
    pa, Ra = kernels.nb.fk_batch(q, model.links)
    pb, Rb = kernels.np.fk_batch(q, model.links)
    assert np.allclose(pa, pb, atol=1e-12)
    assert np.allclose(Ra, Rb, atol=1e-12)


def test_ik_batch_equivalent(model, rng):
    q = random_joints(rng, 500, model)
    pos, rot = fk_many(model, q)
    pos = pos + rng.normal(0, 0.05, pos.shape)  # some become unreachable or limited
    psi = rng.uniform(-1, 1, 500)
    br = np.sign(rng.uniform(-1, 1, (500, 3)))
    args = (np.ascontiguousarray(pos), np.ascontiguousarray(rot), psi, br, model.links,
            model.lower, model.upper, EPS_REACH, EPS_SINGULAR)
    qa, sa = kernels.nb.ik_batch(*args)
    qb, sb = kernels.np.ik_batch(*args)
    assert np.array_equal(sa, sb)
    ok = sa == kernels.OK
    assert ok.any() and (~ok).any()
    assert np.allclose(qa[ok], qb[ok], atol=1e-9)


def test_arm_angle_equivalent(model, rng):
    q = random_joints(rng, 300, model)
    a, sa = kernels.nb.arm_angle_batch(q, model.links, EPS_SINGULAR)
    b, sb = kernels.np.arm_angle_batch(q, model.links, EPS_SINGULAR)
    assert np.array_equal(sa, sb)
    assert np.allclose(a, b, atol=1e-10)


def test_plan_and_sample_equivalent(rng):
    B, J = 200, 7
    p0 = rng.uniform(-2, 2, (B, J))
    vmax = rng.uniform(0.5, 2, J)
    amax = rng.uniform(0.5, 5, J)
    v0 = rng.uniform(-1, 1, (B, J)) * vmax
    pf = rng.uniform(-2, 2, (B, J))
    vf = rng.uniform(-0.5, 0.5, (B, J)) * vmax
    pa = kernels.nb.plan(p0, v0, pf, vf, vmax, amax)
    pb = kernels.np.plan(p0, v0, pf, vf, vmax, amax)
    assert np.allclose(pa, pb, atol=1e-10)
    tau = rng.uniform(0, 6, B)
    for x, y in zip(kernels.nb.sample(pa, tau, ARRIVAL_TOL), kernels.np.sample(pa, tau, ARRIVAL_TOL)):
        assert np.allclose(x, y, atol=1e-10)


def test_simulate_equivalent(rng):
    B, J, K, N = 8, 3, 4, 3000
    p0 = rng.uniform(-1, 1, (B, J))
    v0 = np.zeros((B, J))
    tp = rng.uniform(-1, 1, (B, K, J))
    tv = np.zeros((B, K, J))
    ticks = np.sort(rng.integers(0, 2000, (B, K)), axis=1)
    vmax = np.full(J, 1.0)
    amax = np.full(J, 2.0)
    ra = kernels.nb.simulate(p0, v0, tp, tv, ticks, N, 0.001, vmax, amax, ARRIVAL_TOL)
    rb = kernels.np.simulate(p0, v0, tp, tv, ticks, N, 0.001, vmax, amax, ARRIVAL_TOL)
    for x, y in zip(ra[:3], rb[:3]):
        assert np.allclose(x, y, atol=1e-9)
    assert np.array_equal(ra[3], rb[3])


def test_numpy_backend_forced_by_env():
    import os
    import subprocess
    import sys
    env = dict(os.environ, VRTELEOP_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", "from vrteleop import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
