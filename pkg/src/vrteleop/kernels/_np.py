"""Pure-numpy kernels, vectorized over the batch axis.

Same signatures and semantics as ``_nb``.
"""
import numpy as np

from ._layout import (
    A1, A3, NPROF, P0, PF, SINGULAR, LIMITS, OK, TT, T1, T2, T3, UNREACHABLE, V0, VC, VF,
)

# ---------------------------------------------------------------- kinematics


def _rz(q):
    c, s = np.cos(q), np.sin(q)
    R = np.zeros(q.shape + (3, 3))
    R[..., 0, 0] = c
    R[..., 0, 1] = -s
    R[..., 1, 0] = s
    R[..., 1, 1] = c
    R[..., 2, 2] = 1.0
    return R


def _ry(q):
    c, s = np.cos(q), np.sin(q)
    R = np.zeros(q.shape + (3, 3))
    R[..., 0, 0] = c
    R[..., 0, 2] = s
    R[..., 1, 1] = 1.0
    R[..., 2, 0] = -s
    R[..., 2, 2] = c
    return R


def _chain(q):
    """Partial rotations R03 (after joint 3) and R04, and the full R07."""
    R02 = _rz(q[:, 0]) @ _ry(q[:, 1])
    R03 = R02 @ _rz(q[:, 2])
    R04 = R03 @ _ry(q[:, 3])
    R07 = R04 @ _rz(q[:, 4]) @ _ry(q[:, 5]) @ _rz(q[:, 6])
    return R03, R04, R07


def fk_batch(q, links):
    q = np.asarray(q, dtype=float)
    d_bs, d_se, d_ew, d_wf = links
    R03, R04, R07 = _chain(q)
    pos = R03[:, :, 2] * d_se + R04[:, :, 2] * d_ew + R07[:, :, 2] * d_wf
    pos[:, 2] += d_bs
    return pos, R07


def _zyz(R, g, tol):
    sb = np.hypot(R[:, 0, 2], R[:, 1, 2])
    b = g * np.arctan2(sb, R[:, 2, 2])
    deg = sb < tol
    a = np.where(deg, 0.0, np.arctan2(g * R[:, 1, 2], g * R[:, 0, 2]))
    c = np.where(deg, np.arctan2(R[:, 1, 0], R[:, 1, 1]),
                 np.arctan2(g * R[:, 2, 1], -g * R[:, 2, 0]))
    return a, b, c


def _reference_shoulder(x, rho, q4, d_se, d_ew):
    vx = d_ew * np.sin(q4)
    vz = d_se + d_ew * np.cos(q4)
    q1 = np.where(rho > 0.0, np.arctan2(x[:, 1], x[:, 0]), 0.0)
    q2 = np.arctan2(rho, x[:, 2]) - np.arctan2(vx, vz)
    return q1, q2


def ik_batch(pos, rot, psi, branch, links, lower, upper, eps_reach, eps_sing):
    pos = np.asarray(pos, dtype=float)
    rot = np.asarray(rot, dtype=float)
    n = pos.shape[0]
    d_bs, d_se, d_ew, d_wf = links
    status = np.full(n, OK, dtype=np.int64)

    far = np.linalg.norm(pos, axis=1) > d_bs + d_se + d_ew + d_wf + eps_reach
    x = pos - d_wf * rot[:, :, 2]
    x[:, 2] -= d_bs
    L = np.linalg.norm(x, axis=1)
    unreachable = far | (L > d_se + d_ew + eps_reach) | (L < abs(d_se - d_ew) + eps_reach)
    status[unreachable] = UNREACHABLE
    L = np.where(unreachable, 1.0, L)

    c4 = np.clip((L * L - d_se * d_se - d_ew * d_ew) / (2.0 * d_se * d_ew), -1.0, 1.0)
    q4 = branch[:, 1] * np.arccos(c4)
    rho = np.hypot(x[:, 0], x[:, 1])
    vertical = rho < eps_sing
    singular = vertical & (np.abs(np.sin(q4)) > eps_sing) & ~unreachable
    status[singular] = SINGULAR
    rho = np.where(vertical, 0.0, rho)
    q1r, q2r = _reference_shoulder(x, rho, q4, d_se, d_ew)
    R0 = _rz(q1r) @ _ry(q2r)

    u = x / L[:, None]
    s, c = np.sin(psi), np.cos(psi)
    K = np.zeros((n, 3, 3))
    K[:, 0, 1], K[:, 0, 2] = -u[:, 2], u[:, 1]
    K[:, 1, 0], K[:, 1, 2] = u[:, 2], -u[:, 0]
    K[:, 2, 0], K[:, 2, 1] = -u[:, 1], u[:, 0]
    Rp = np.eye(3) + s[:, None, None] * K + (1.0 - c)[:, None, None] * (K @ K)
    R03 = Rp @ R0
    q1, q2, q3 = _zyz(R03, branch[:, 0], 1e-12)
    R04 = R03 @ _ry(q4)
    R47 = np.swapaxes(R04, 1, 2) @ rot
    q5, q6, q7 = _zyz(R47, branch[:, 2], 1e-12)
    q = np.stack([q1, q2, q3, q4, q5, q6, q7], axis=1)

    bad = status != OK
    outside = np.any((q < lower) | (q > upper), axis=1) & ~bad
    status[outside] = LIMITS
    q[bad] = np.nan
    return q, status


def arm_angle_batch(q, links, eps):
    q = np.asarray(q, dtype=float)
    d_bs, d_se, d_ew, _ = links
    R02 = _rz(q[:, 0]) @ _ry(q[:, 1])
    e = R02[:, :, 2] * d_se
    R04 = R02 @ _rz(q[:, 2]) @ _ry(q[:, 3])
    x = e + R04[:, :, 2] * d_ew
    rho = np.hypot(x[:, 0], x[:, 1])
    singular = (np.abs(np.sin(q[:, 3])) < eps) | (rho < eps)
    L = np.linalg.norm(x, axis=1)
    u = x / L[:, None]
    q1r, q2r = _reference_shoulder(x, np.where(singular, 1.0, rho), q[:, 3], d_se, d_ew)
    r = np.stack([np.cos(q1r) * np.sin(q2r), np.sin(q1r) * np.sin(q2r), np.cos(q2r)], axis=1)
    a = r - np.sum(r * u, axis=1)[:, None] * u
    b = e - np.sum(e * u, axis=1)[:, None] * u
    psi = np.arctan2(np.sum(np.cross(a, b) * u, axis=1), np.sum(a * b, axis=1))
    psi[singular] = np.nan
    status = np.where(singular, SINGULAR, OK).astype(np.int64)
    return psi, status


# ---------------------------------------------------------- trajectory profiles


def _optimal(D, v0, vf, vmax, a):
    best_T = np.full(np.shape(D), np.inf)
    out = [np.zeros(np.shape(D)) for _ in range(6)]
    tol = 1e-12 * (vmax + 1.0)
    for s in (1.0, -1.0):
        Dp, v0p, vfp = s * D, s * v0, s * vf
        vp2 = a * Dp + 0.5 * (v0p * v0p + vfp * vfp)
        r = np.sqrt(np.maximum(vp2, 0.0))
        hi = np.maximum(v0p, vfp)
        use_neg = -r >= hi - tol
        use_pos = ~use_neg & (r >= hi - tol)
        valid = (vp2 >= -tol * tol) & (use_neg | use_pos)
        vp = np.where(use_neg, -r, r)
        cruise = vp > vmax
        vpc = np.minimum(vp, vmax)
        t1 = np.where(cruise, (vmax - v0p) / a, np.maximum((vp - v0p) / a, 0.0))
        t3 = np.where(cruise, (vmax - vfp) / a, np.maximum((vp - vfp) / a, 0.0))
        t2 = np.where(
            cruise,
            (Dp - (vmax * vmax - v0p * v0p) / (2.0 * a) - (vmax * vmax - vfp * vfp) / (2.0 * a))
            / vmax,
            0.0,
        )
        T = np.where(valid, t1 + t2 + t3, np.inf)
        better = T < best_T
        best_T = np.where(better, T, best_T)
        for i, val in enumerate((t1, s * a, s * vpc, t2, t3, -s * a)):
            out[i] = np.where(better, val, out[i])
    return (*out, best_T)


def _disp(vc, v0, vf, a, T):
    t1 = np.abs(vc - v0) / a
    t3 = np.abs(vf - vc) / a
    return 0.5 * (v0 + vc) * t1 + vc * (T - t1 - t3) + 0.5 * (vc + vf) * t3


def _root_high(D, v0, vf, a, T):
    B = a * T + v0 + vf
    C = a * D + 0.5 * (v0 * v0 + vf * vf)
    sq = np.sqrt(np.maximum(B * B - 4.0 * C, 0.0))
    den = B + sq
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = np.where(den > 0.0, 2.0 * C / np.where(den > 0.0, den, 1.0), 0.5 * B)
    return np.where(B > 0.0, stable, 0.5 * (B - sq))


def _stretch(D, v0, vf, vmax, a, T):
    ok = a * T >= np.abs(v0 - vf) * (1.0 - 1e-12)
    vhi = np.minimum(vmax, 0.5 * (a * T + v0 + vf))
    vlo = np.maximum(-vmax, 0.5 * (v0 + vf - a * T))
    dtol = 1e-12 * (np.abs(D) + vmax * T + 1e-9)
    ok &= (D <= _disp(vhi, v0, vf, a, T) + dtol) & (D >= _disp(vlo, v0, vf, a, T) - dtol)
    hv = np.maximum(v0, vf)
    lv = np.minimum(v0, vf)
    high = D >= _disp(hv, v0, vf, a, T)
    low = ~high & (D <= _disp(lv, v0, vf, a, T))
    cruise = T - np.abs(vf - v0) / a
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = np.where(
            cruise > 0.0,
            (D - np.abs(vf - v0) * (vf + v0) / (2.0 * a)) / np.where(cruise > 0.0, cruise, 1.0),
            0.5 * (v0 + vf),
        )
    vc = np.where(high, _root_high(D, v0, vf, a, T),
                  np.where(low, -_root_high(-D, -v0, -vf, a, T), mid))
    vc = np.minimum(vhi, np.maximum(vlo, vc))
    t1 = np.abs(vc - v0) / a
    t3 = np.abs(vf - vc) / a
    t2 = np.maximum(T - t1 - t3, 0.0)
    a1 = np.where(vc >= v0, a, -a)
    a3 = np.where(vf >= vc, a, -a)
    return ok, t1, a1, vc, t2, t3, a3


def plan(p0, v0, pf, vf, vmax, amax):
    p0, v0, pf, vf = (np.asarray(x, dtype=float) for x in (p0, v0, pf, vf))
    vmax = np.broadcast_to(np.asarray(vmax, dtype=float), p0.shape)
    amax = np.broadcast_to(np.asarray(amax, dtype=float), p0.shape)
    D = pf - p0
    t1, a1, vc, t2, t3, a3, T = _optimal(D, v0, vf, vmax, amax)
    Tsync = T.max(axis=-1, keepdims=True) if T.shape[-1] else np.zeros(T.shape[:-1] + (1,))
    Tsync = np.broadcast_to(Tsync, T.shape)
    want = T < Tsync * (1.0 - 1e-12)
    ok, s1, sa1, svc, s2, s3, sa3 = _stretch(D, v0, vf, vmax, amax, Tsync)
    use = want & ok
    prof = np.empty(p0.shape + (NPROF,))
    prof[..., P0] = p0
    prof[..., V0] = v0
    prof[..., T1] = np.where(use, s1, t1)
    prof[..., A1] = np.where(use, sa1, a1)
    prof[..., VC] = np.where(use, svc, vc)
    prof[..., T2] = np.where(use, s2, t2)
    prof[..., T3] = np.where(use, s3, t3)
    prof[..., A3] = np.where(use, sa3, a3)
    prof[..., PF] = pf
    prof[..., VF] = vf
    prof[..., TT] = np.where(use, s1 + s2 + s3, T)
    return prof


def sample(prof, tau, tol):
    tau = np.asarray(tau, dtype=float)[..., None]
    t1, t2, t3, T = prof[..., T1], prof[..., T2], prof[..., T3], prof[..., TT]
    a1, vc, a3 = prof[..., A1], prof[..., VC], prof[..., A3]
    x0, w0 = prof[..., P0], prof[..., V0]

    x1 = x0 + w0 * t1 + 0.5 * a1 * t1 * t1
    x2 = x1 + vc * t2
    r = tau - t1 - t2
    seg1 = tau < t1
    seg2 = ~seg1 & (tau < t1 + t2)
    arrived = tau >= T - tol

    p = np.where(seg1, x0 + w0 * tau + 0.5 * a1 * tau * tau,
                 np.where(seg2, x1 + vc * (tau - t1), x2 + vc * r + 0.5 * a3 * r * r))
    v = np.where(seg1, w0 + a1 * tau, np.where(seg2, vc, vc + a3 * r))
    acc = np.where(seg1, a1, np.where(seg2, 0.0, a3))

    dtau = np.maximum(tau - T, 0.0)
    p = np.where(arrived, prof[..., PF] + prof[..., VF] * dtau, p)
    v = np.where(arrived, prof[..., VF], v)
    acc = np.where(arrived, 0.0, acc)
    return p, v, acc, np.all(arrived, axis=-1)


def simulate(p0, v0, tgt_p, tgt_v, tgt_tick, n_steps, dt, vmax, amax, tol):
    p = np.array(p0, dtype=float)
    v = np.array(v0, dtype=float)
    B, J = p.shape
    K = tgt_tick.shape[1]
    P = np.empty((B, n_steps, J))
    V = np.empty((B, n_steps, J))
    A = np.empty((B, n_steps, J))
    R = np.empty((B, n_steps), dtype=bool)
    prof = plan(p, v, p + v * np.abs(v) / (2.0 * amax), np.zeros_like(v), vmax, amax)
    tau = np.zeros(B)
    k = np.zeros(B, dtype=np.int64)
    rows = np.arange(B)
    for n in range(n_steps):
        while True:
            kk = np.minimum(k, K - 1)
            due = (k < K) & (tgt_tick[rows, kk] >= 0) & (tgt_tick[rows, kk] <= n)
            if not due.any():
                break
            idx = rows[due]
            prof[idx] = plan(p[idx], v[idx], tgt_p[idx, k[idx]], tgt_v[idx, k[idx]], vmax, amax)
            tau[idx] = 0.0
            k[idx] += 1
        tau += dt
        p, v, acc, done = sample(prof, tau, tol)
        P[:, n] = p
        V[:, n] = v
        A[:, n] = acc
        R[:, n] = done
    return P, V, A, R
