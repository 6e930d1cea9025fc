"""Loop kernels compiled with numba.

Every function here has a vectorized twin in ``_np`` with identical
signature and semantics; ``tests/test_kernels.py`` holds them to agreement.
"""
import math

import numpy as np

from .._backend import njit
from ._layout import (
    A1, A3, NPROF, P0, PF, SINGULAR, LIMITS, OK, TT, T1, T2, T3, UNREACHABLE, V0, VC, VF,
)

# ---------------------------------------------------------------- kinematics


@njit
def _post_rz(R, c, s):
    for i in range(3):
        r0 = R[i, 0]
        r1 = R[i, 1]
        R[i, 0] = r0 * c + r1 * s
        R[i, 1] = -r0 * s + r1 * c


@njit
def _post_ry(R, c, s):
    for i in range(3):
        r0 = R[i, 0]
        r2 = R[i, 2]
        R[i, 0] = r0 * c - r2 * s
        R[i, 2] = r0 * s + r2 * c


@njit
def _fk_one(q, links, pos, R):
    d_bs, d_se, d_ew, d_wf = links[0], links[1], links[2], links[3]
    for i in range(3):
        for j in range(3):
            R[i, j] = 1.0 if i == j else 0.0
    _post_rz(R, math.cos(q[0]), math.sin(q[0]))
    _post_ry(R, math.cos(q[1]), math.sin(q[1]))
    pos[0] = R[0, 2] * d_se
    pos[1] = R[1, 2] * d_se
    pos[2] = d_bs + R[2, 2] * d_se
    _post_rz(R, math.cos(q[2]), math.sin(q[2]))
    _post_ry(R, math.cos(q[3]), math.sin(q[3]))
    for i in range(3):
        pos[i] += R[i, 2] * d_ew
    _post_rz(R, math.cos(q[4]), math.sin(q[4]))
    _post_ry(R, math.cos(q[5]), math.sin(q[5]))
    _post_rz(R, math.cos(q[6]), math.sin(q[6]))
    for i in range(3):
        pos[i] += R[i, 2] * d_wf


@njit
def fk_batch(q, links):
    n = q.shape[0]
    pos = np.empty((n, 3))
    rot = np.empty((n, 3, 3))
    for k in range(n):
        _fk_one(q[k], links, pos[k], rot[k])
    return pos, rot


@njit
def _zyz(R, g, tol):
    sb = math.sqrt(R[0, 2] * R[0, 2] + R[1, 2] * R[1, 2])
    b = g * math.atan2(sb, R[2, 2])
    if sb < tol:
        return 0.0, b, math.atan2(R[1, 0], R[1, 1])
    a = math.atan2(g * R[1, 2], g * R[0, 2])
    c = math.atan2(g * R[2, 1], -g * R[2, 0])
    return a, b, c


@njit
def _reference_shoulder(x0, x1, x2, rho, q4, d_se, d_ew):
    """Shoulder angles (q1, q2) of the q3 = 0 reference configuration."""
    vx = d_ew * math.sin(q4)
    vz = d_se + d_ew * math.cos(q4)
    q1 = math.atan2(x1, x0) if rho > 0.0 else 0.0
    q2 = math.atan2(rho, x2) - math.atan2(vx, vz)
    return q1, q2


@njit
def _ik_one(p, Rt, psi, branch, links, lower, upper, eps_reach, eps_sing, q):
    d_bs, d_se, d_ew, d_wf = links[0], links[1], links[2], links[3]
    reach = d_bs + d_se + d_ew + d_wf
    if math.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) > reach + eps_reach:
        return UNREACHABLE
    x0 = p[0] - d_wf * Rt[0, 2]
    x1 = p[1] - d_wf * Rt[1, 2]
    x2 = p[2] - d_wf * Rt[2, 2] - d_bs
    L = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    if L > d_se + d_ew + eps_reach or L < abs(d_se - d_ew) + eps_reach:
        return UNREACHABLE
    c4 = (L * L - d_se * d_se - d_ew * d_ew) / (2.0 * d_se * d_ew)
    c4 = min(1.0, max(-1.0, c4))
    q4 = branch[1] * math.acos(c4)
    rho = math.sqrt(x0 * x0 + x1 * x1)
    if rho < eps_sing:
        if abs(math.sin(q4)) > eps_sing:
            return SINGULAR
        rho = 0.0
    q1r, q2r = _reference_shoulder(x0, x1, x2, rho, q4, d_se, d_ew)

    R0 = np.eye(3)
    _post_rz(R0, math.cos(q1r), math.sin(q1r))
    _post_ry(R0, math.cos(q2r), math.sin(q2r))
    # rotate the reference shoulder frame about the shoulder-wrist axis by psi
    u0, u1, u2 = x0 / L, x1 / L, x2 / L
    s, c = math.sin(psi), math.cos(psi)
    t = 1.0 - c
    Rp = np.empty((3, 3))
    Rp[0, 0] = c + t * u0 * u0
    Rp[0, 1] = t * u0 * u1 - s * u2
    Rp[0, 2] = t * u0 * u2 + s * u1
    Rp[1, 0] = t * u0 * u1 + s * u2
    Rp[1, 1] = c + t * u1 * u1
    Rp[1, 2] = t * u1 * u2 - s * u0
    Rp[2, 0] = t * u0 * u2 - s * u1
    Rp[2, 1] = t * u1 * u2 + s * u0
    Rp[2, 2] = c + t * u2 * u2
    R03 = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            R03[i, j] = Rp[i, 0] * R0[0, j] + Rp[i, 1] * R0[1, j] + Rp[i, 2] * R0[2, j]
    q1, q2, q3 = _zyz(R03, branch[0], 1e-12)
    _post_ry(R03, math.cos(q4), math.sin(q4))
    R47 = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            R47[i, j] = R03[0, i] * Rt[0, j] + R03[1, i] * Rt[1, j] + R03[2, i] * Rt[2, j]
    q5, q6, q7 = _zyz(R47, branch[2], 1e-12)
    q[0], q[1], q[2], q[3], q[4], q[5], q[6] = q1, q2, q3, q4, q5, q6, q7
    for j in range(7):
        if q[j] < lower[j] or q[j] > upper[j]:
            return LIMITS
    return OK


@njit
def ik_batch(pos, rot, psi, branch, links, lower, upper, eps_reach, eps_sing):
    n = pos.shape[0]
    q = np.full((n, 7), np.nan)
    status = np.empty(n, dtype=np.int64)
    for k in range(n):
        status[k] = _ik_one(pos[k], rot[k], psi[k], branch[k], links, lower, upper,
                            eps_reach, eps_sing, q[k])
    return q, status


@njit
def arm_angle_batch(q, links, eps):
    n = q.shape[0]
    psi = np.full(n, np.nan)
    status = np.empty(n, dtype=np.int64)
    d_bs, d_se, d_ew = links[0], links[1], links[2]
    R = np.empty((3, 3))
    for k in range(n):
        if abs(math.sin(q[k, 3])) < eps:
            status[k] = SINGULAR
            continue
        for i in range(3):
            for j in range(3):
                R[i, j] = 1.0 if i == j else 0.0
        _post_rz(R, math.cos(q[k, 0]), math.sin(q[k, 0]))
        _post_ry(R, math.cos(q[k, 1]), math.sin(q[k, 1]))
        e0, e1, e2 = R[0, 2] * d_se, R[1, 2] * d_se, R[2, 2] * d_se
        _post_rz(R, math.cos(q[k, 2]), math.sin(q[k, 2]))
        _post_ry(R, math.cos(q[k, 3]), math.sin(q[k, 3]))
        x0 = e0 + R[0, 2] * d_ew
        x1 = e1 + R[1, 2] * d_ew
        x2 = e2 + R[2, 2] * d_ew
        rho = math.sqrt(x0 * x0 + x1 * x1)
        if rho < eps:
            status[k] = SINGULAR
            continue
        L = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
        u0, u1, u2 = x0 / L, x1 / L, x2 / L
        q1r, q2r = _reference_shoulder(x0, x1, x2, rho, q[k, 3], d_se, d_ew)
        r0 = math.cos(q1r) * math.sin(q2r)
        r1 = math.sin(q1r) * math.sin(q2r)
        r2 = math.cos(q2r)
        dr = r0 * u0 + r1 * u1 + r2 * u2
        a0, a1, a2 = r0 - dr * u0, r1 - dr * u1, r2 - dr * u2
        de = e0 * u0 + e1 * u1 + e2 * u2
        b0, b1, b2 = e0 - de * u0, e1 - de * u1, e2 - de * u2
        c0 = a1 * b2 - a2 * b1
        c1 = a2 * b0 - a0 * b2
        c2 = a0 * b1 - a1 * b0
        psi[k] = math.atan2(c0 * u0 + c1 * u1 + c2 * u2, a0 * b0 + a1 * b1 + a2 * b2)
        status[k] = OK
    return psi, status


# ---------------------------------------------------------- trajectory profiles


@njit
def _optimal(D, v0, vf, vmax, a):
    """Minimum-time accel/cruise/accel profile from (0, v0) to (D, vf)."""
    best_T = np.inf
    bt1 = ba1 = bvc = bt2 = bt3 = ba3 = 0.0
    tol = 1e-12 * (vmax + 1.0)
    for s in (1.0, -1.0):
        Dp, v0p, vfp = s * D, s * v0, s * vf
        vp2 = a * Dp + 0.5 * (v0p * v0p + vfp * vfp)
        if vp2 < -tol * tol:
            continue
        r = math.sqrt(max(vp2, 0.0))
        hi = max(v0p, vfp)
        if -r >= hi - tol:
            vp = -r
        elif r >= hi - tol:
            vp = r
        else:
            continue
        if vp > vmax:
            t1 = (vmax - v0p) / a
            t3 = (vmax - vfp) / a
            t2 = (Dp - (vmax * vmax - v0p * v0p) / (2.0 * a)
                  - (vmax * vmax - vfp * vfp) / (2.0 * a)) / vmax
            vp = vmax
        else:
            t1 = max((vp - v0p) / a, 0.0)
            t3 = max((vp - vfp) / a, 0.0)
            t2 = 0.0
        T = t1 + t2 + t3
        if T < best_T:
            best_T = T
            bt1, ba1, bvc, bt2, bt3, ba3 = t1, s * a, s * vp, t2, t3, -s * a
    return bt1, ba1, bvc, bt2, bt3, ba3, best_T


@njit
def _disp(vc, v0, vf, a, T):
    t1 = abs(vc - v0) / a
    t3 = abs(vf - vc) / a
    return 0.5 * (v0 + vc) * t1 + vc * (T - t1 - t3) + 0.5 * (vc + vf) * t3


@njit
def _root_high(D, v0, vf, a, T):
    # vc >= max(v0, vf): vc^2 - B vc + C = 0, smaller root
    B = a * T + v0 + vf
    C = a * D + 0.5 * (v0 * v0 + vf * vf)
    disc = max(B * B - 4.0 * C, 0.0)
    sq = math.sqrt(disc)
    if B > 0.0:
        return 2.0 * C / (B + sq) if (B + sq) > 0.0 else 0.5 * B
    return 0.5 * (B - sq)


@njit
def _stretch(D, v0, vf, vmax, a, T):
    """Profile of duration exactly T with the largest-|vc| cruise that fits.

    Returns ok=False when no accel/cruise/accel profile of that duration
    exists (the blocked-duration case for non-rest boundary states).
    """
    if a * T < abs(v0 - vf) * (1.0 - 1e-12):
        return False, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    vhi = min(vmax, 0.5 * (a * T + v0 + vf))
    vlo = max(-vmax, 0.5 * (v0 + vf - a * T))
    dtol = 1e-12 * (abs(D) + vmax * T + 1e-9)
    if D > _disp(vhi, v0, vf, a, T) + dtol or D < _disp(vlo, v0, vf, a, T) - dtol:
        return False, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    hv = max(v0, vf)
    lv = min(v0, vf)
    if D >= _disp(hv, v0, vf, a, T):
        vc = _root_high(D, v0, vf, a, T)
    elif D <= _disp(lv, v0, vf, a, T):
        vc = -_root_high(-D, -v0, -vf, a, T)
    else:
        cruise = T - abs(vf - v0) / a
        if cruise > 0.0:
            vc = (D - abs(vf - v0) * (vf + v0) / (2.0 * a)) / cruise
        else:
            vc = 0.5 * (v0 + vf)
    vc = min(vhi, max(vlo, vc))
    t1 = abs(vc - v0) / a
    t3 = abs(vf - vc) / a
    t2 = max(T - t1 - t3, 0.0)
    a1 = a if vc >= v0 else -a
    a3 = a if vf >= vc else -a
    return True, t1, a1, vc, t2, t3, a3


@njit
def plan_row(p0, v0, pf, vf, vmax, amax, prof):
    """Plan a time-synchronized profile for one multi-joint state."""
    J = p0.shape[0]
    Ts = np.empty(J)
    for j in range(J):
        t1, a1, vc, t2, t3, a3, T = _optimal(pf[j] - p0[j], v0[j], vf[j], vmax[j], amax[j])
        prof[j, P0] = p0[j]
        prof[j, V0] = v0[j]
        prof[j, T1] = t1
        prof[j, A1] = a1
        prof[j, VC] = vc
        prof[j, T2] = t2
        prof[j, T3] = t3
        prof[j, A3] = a3
        prof[j, PF] = pf[j]
        prof[j, VF] = vf[j]
        prof[j, TT] = T
        Ts[j] = T
    Tsync = Ts.max() if J > 0 else 0.0
    for j in range(J):
        if Ts[j] >= Tsync * (1.0 - 1e-12):
            continue
        ok, t1, a1, vc, t2, t3, a3 = _stretch(pf[j] - p0[j], v0[j], vf[j], vmax[j], amax[j], Tsync)
        if ok:
            prof[j, T1] = t1
            prof[j, A1] = a1
            prof[j, VC] = vc
            prof[j, T2] = t2
            prof[j, T3] = t3
            prof[j, A3] = a3
            prof[j, TT] = t1 + t2 + t3


@njit
def sample_row(prof, tau, tol, p, v, acc):
    """Evaluate a planned row at time ``tau``; returns True when all joints arrived."""
    J = prof.shape[0]
    done = True
    for j in range(J):
        t1, t2, t3 = prof[j, T1], prof[j, T2], prof[j, T3]
        T = prof[j, TT]
        if tau >= T - tol:
            dtau = tau - T if tau > T else 0.0
            p[j] = prof[j, PF] + prof[j, VF] * dtau
            v[j] = prof[j, VF]
            acc[j] = 0.0
            continue
        done = False
        a1, vc, a3 = prof[j, A1], prof[j, VC], prof[j, A3]
        x0, w0 = prof[j, P0], prof[j, V0]
        if tau < t1:
            p[j] = x0 + w0 * tau + 0.5 * a1 * tau * tau
            v[j] = w0 + a1 * tau
            acc[j] = a1
            continue
        x1 = x0 + w0 * t1 + 0.5 * a1 * t1 * t1
        if tau < t1 + t2:
            p[j] = x1 + vc * (tau - t1)
            v[j] = vc
            acc[j] = 0.0
            continue
        x2 = x1 + vc * t2
        r = tau - t1 - t2
        p[j] = x2 + vc * r + 0.5 * a3 * r * r
        v[j] = vc + a3 * r
        acc[j] = a3
    return done


@njit
def plan(p0, v0, pf, vf, vmax, amax):
    B, J = p0.shape
    prof = np.empty((B, J, NPROF))
    for b in range(B):
        plan_row(p0[b], v0[b], pf[b], vf[b], vmax, amax, prof[b])
    return prof


@njit
def sample(prof, tau, tol):
    B, J = prof.shape[0], prof.shape[1]
    p = np.empty((B, J))
    v = np.empty((B, J))
    acc = np.empty((B, J))
    done = np.empty(B, dtype=np.bool_)
    for b in range(B):
        done[b] = sample_row(prof[b], tau[b], tol, p[b], v[b], acc[b])
    return p, v, acc, done


@njit
def simulate(p0, v0, tgt_p, tgt_v, tgt_tick, n_steps, dt, vmax, amax, tol):
    """Run B independent generators for n_steps ticks.

    Row b switches to target k right before tick ``tgt_tick[b, k]`` is
    stepped (ticks ascending; -1 pads unused slots). Before its first target
    a row brakes to rest. Outputs hold the state after each tick.
    """
    B, J = p0.shape
    K = tgt_tick.shape[1]
    P = np.empty((B, n_steps, J))
    V = np.empty((B, n_steps, J))
    A = np.empty((B, n_steps, J))
    R = np.empty((B, n_steps), dtype=np.bool_)
    prof = np.empty((J, NPROF))
    p = np.empty(J)
    v = np.empty(J)
    acc = np.empty(J)
    pf = np.empty(J)
    vf = np.zeros(J)
    for b in range(B):
        for j in range(J):
            p[j] = p0[b, j]
            v[j] = v0[b, j]
            pf[j] = p[j] + v[j] * abs(v[j]) / (2.0 * amax[j])
            vf[j] = 0.0
        plan_row(p, v, pf, vf, vmax, amax, prof)
        tau = 0.0
        k = 0
        for n in range(n_steps):
            while k < K and tgt_tick[b, k] >= 0 and tgt_tick[b, k] <= n:
                plan_row(p, v, tgt_p[b, k], tgt_v[b, k], vmax, amax, prof)
                tau = 0.0
                k += 1
            tau += dt
            R[b, n] = sample_row(prof, tau, tol, p, v, acc)
            for j in range(J):
                P[b, n, j] = p[j]
                V[b, n, j] = v[j]
                A[b, n, j] = acc[j]
    return P, V, A, R
