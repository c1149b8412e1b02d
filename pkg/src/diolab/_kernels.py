"""Hot kernels: window hit scans, equivalence scans, grid rasterizers.

Every kernel has two implementations: an @njit one (default) and a vectorized
numpy fallback, selected at import time by DIOLAB_DISABLE_JIT=1.  The fallback
doubles as the reference implementation in tests and benchmarks.

Sample layout is always (N, m, n) float64; psi is passed as a per-shell array
(radial laws and scalar tables both reduce to that).
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import JIT_ENABLED, njit, prange


# --- shell vector enumeration (shared by fallbacks and builders) -------------

def shell_vectors(n: int, h: int, z1_only: bool = False, half: bool = False) -> np.ndarray:
    """Integer vectors with |a| = h as an (V, n) array, families concatenated.

    half=True keeps one of each {a, -a} pair (valid for hit tests with b = 0).
    """
    if n == 1:
        vecs = [[h]] if half else [[h], [-h]]
        return np.array(vecs, dtype=np.int64)
    if n != 2:
        raise ValueError("vectorized shells are implemented for n <= 2")
    t_full = np.arange(-h, h + 1, dtype=np.int64)
    fams = [np.column_stack([np.full_like(t_full, h), t_full])]
    if not half:
        fams.append(np.column_stack([np.full_like(t_full, -h), t_full]))
    if not z1_only:
        t_in = np.arange(-h + 1, h, dtype=np.int64)
        fams.append(np.column_stack([t_in, np.full_like(t_in, h)]))
        if not half:
            fams.append(np.column_stack([t_in, np.full_like(t_in, -h)]))
    return np.vstack(fams)


# --- linear-forms window hit scan --------------------------------------------

@njit(cache=True, inline="always")
def _forms_hit(x, b, a1, a2, psi):
    for j in range(x.shape[0]):
        v = a1 * x[j, 0] + a2 * x[j, 1] - b[j]
        if abs(v - round(v)) >= psi:
            return False
    return True


@njit(cache=True)
def _lf2_scan_one(x, b, psi_by_shell, h1, z1_only, sym):
    h2 = h1 + len(psi_by_shell) - 1
    for h in range(h1, h2 + 1):
        psi = psi_by_shell[h - h1]
        if psi <= 0.0:
            continue
        for t in range(-h, h + 1):
            if _forms_hit(x, b, float(h), float(t), psi):
                return True
        if not sym:
            for t in range(-h, h + 1):
                if _forms_hit(x, b, float(-h), float(t), psi):
                    return True
        if not z1_only:
            for t in range(-h + 1, h):
                if _forms_hit(x, b, float(t), float(h), psi):
                    return True
            if not sym:
                for t in range(-h + 1, h):
                    if _forms_hit(x, b, float(t), float(-h), psi):
                        return True
    return False


@njit(cache=True)
def _lf1_scan_one(x, b, psi_by_shell, h1, sym):
    h2 = h1 + len(psi_by_shell) - 1
    for h in range(h1, h2 + 1):
        psi = psi_by_shell[h - h1]
        if psi <= 0.0:
            continue
        ok = True
        for j in range(x.shape[0]):
            v = h * x[j, 0] - b[j]
            if abs(v - round(v)) >= psi:
                ok = False
                break
        if ok:
            return True
        if not sym:
            ok = True
            for j in range(x.shape[0]):
                v = -h * x[j, 0] - b[j]
                if abs(v - round(v)) >= psi:
                    ok = False
                    break
            if ok:
                return True
    return False


@njit(cache=True, parallel=True)
def _lf_hits_jit(X, b, psi_by_shell, h1, n, z1_only, sym):
    N = X.shape[0]
    out = np.zeros(N, dtype=np.bool_)
    for s in prange(N):
        if n == 2:
            out[s] = _lf2_scan_one(X[s], b, psi_by_shell, h1, z1_only, sym)
        else:
            out[s] = _lf1_scan_one(X[s], b, psi_by_shell, h1, sym)
    return out


def _lf_hits_numpy(X, b, psi_by_shell, h1, n, z1_only, sym):
    N, m = X.shape[0], X.shape[1]
    hit = np.zeros(N, dtype=bool)
    h2 = h1 + len(psi_by_shell) - 1
    for h in range(h1, h2 + 1):
        psi = psi_by_shell[h - h1]
        if psi <= 0.0:
            continue
        alive = np.flatnonzero(~hit)
        if alive.size == 0:
            break
        A = shell_vectors(n, h, z1_only=z1_only, half=sym).astype(np.float64)
        # (Na, m, V) dot products per form
        T = np.einsum("qmn,vn->qmv", X[alive], A) - b[None, :, None]
        D = np.abs(T - np.rint(T))
        hit[alive[np.any(np.all(D < psi, axis=1), axis=1)]] = True
    return hit


def lf_window_hits(X, b, psi_by_shell, h1, n, z1_only, sym):
    """Which samples are hit by at least one a with h1 <= |a| <= h1+len(psi)-1."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    psi_by_shell = np.asarray(psi_by_shell, dtype=np.float64)
    if JIT_ENABLED:
        return _lf_hits_jit(X, b, psi_by_shell, h1, n, z1_only, sym)
    return _lf_hits_numpy(X, b, psi_by_shell, h1, n, z1_only, sym)


# --- squares window hit scan --------------------------------------------------

@njit(cache=True, inline="always")
def _near_square(v, psi):
    s = int(math.sqrt(v)) if v > 0.0 else 0
    while s * s > v:
        s -= 1
    while (s + 1.0) * (s + 1.0) <= v:
        s += 1
    return (v - s * s) < psi or ((s + 1.0) * (s + 1.0) - v) < psi


@njit(cache=True)
def _sq_scan_one(x0, x1, psi_by_shell, h1):
    h2 = h1 + len(psi_by_shell) - 1
    for h in range(h1, h2 + 1):
        psi = psi_by_shell[h - h1]
        if psi <= 0.0:
            continue
        hh = float(h) * float(h)
        for t in range(0, h + 1):
            tt = float(t) * float(t)
            if _near_square(hh * x0 + tt * x1, psi):
                return True
        for t in range(0, h):
            tt = float(t) * float(t)
            if _near_square(tt * x0 + hh * x1, psi):
                return True
    return False


@njit(cache=True, parallel=True)
def _sq_hits_jit(X, psi_by_shell, h1):
    N = X.shape[0]
    out = np.zeros(N, dtype=np.bool_)
    for s in prange(N):
        out[s] = _sq_scan_one(X[s, 0], X[s, 1], psi_by_shell, h1)
    return out


def _sq_hits_numpy(X, psi_by_shell, h1):
    N = X.shape[0]
    hit = np.zeros(N, dtype=bool)
    h2 = h1 + len(psi_by_shell) - 1
    for h in range(h1, h2 + 1):
        psi = psi_by_shell[h - h1]
        if psi <= 0.0:
            continue
        alive = np.flatnonzero(~hit)
        if alive.size == 0:
            break
        hh = float(h * h)
        t = np.arange(0, h + 1, dtype=np.float64) ** 2
        W = np.vstack([
            np.column_stack([np.full_like(t, hh), t]),
            np.column_stack([t[:-1], np.full_like(t[:-1], hh)]),
        ])
        V = X[alive] @ W.T  # (Na, V) all >= 0
        s = np.floor(np.sqrt(np.maximum(V, 0.0)))
        s = np.where(s * s > V, s - 1, s)
        s = np.where((s + 1) * (s + 1) <= V, s + 1, s)
        near = np.minimum(V - s * s, (s + 1) * (s + 1) - V) < psi
        hit[alive[np.any(near, axis=1)]] = True
    return hit


def squares_window_hits(X, psi_by_shell, h1):
    X = np.ascontiguousarray(X, dtype=np.float64)
    psi_by_shell = np.asarray(psi_by_shell, dtype=np.float64)
    if JIT_ENABLED:
        return _sq_hits_jit(X, psi_by_shell, h1)
    return _sq_hits_numpy(X, psi_by_shell, h1)


# --- geometric equivalence scan -----------------------------------------------
# codes: 0 ok, 1 membership mismatch, 2 nearest shift missed by the p-range

@njit(cache=True, inline="always")
def _equiv_check_vector(x, b, a1, a2, psi, lo_dot, hi_dot, nrm):
    # lhs: torus route, max_j ||a.x_j - b_j|| < psi
    # rhs: plane route, Euclidean distance to the nearest resonant plane < delta;
    #      the nearest integer shift is optimal, so it decides existence over p
    delta = psi / nrm
    lhs = True
    rhs = True
    for j in range(x.shape[0]):
        v = a1 * x[j, 0] + a2 * x[j, 1] - b[j]
        if abs(v - round(v)) >= psi:
            lhs = False
        p_star = round(v)
        inside = abs(v - p_star) / nrm < delta
        if inside:
            p_lo = math.floor(lo_dot - b[j] - psi)
            p_hi = math.ceil(hi_dot - b[j] + psi)
            if p_star < p_lo or p_star > p_hi:
                return 2
        else:
            rhs = False
    if lhs != rhs:
        return 1
    return 0


@njit(cache=True, parallel=True)
def _equiv_scan_jit(X, b, psi_by_shell, H, n, z1_only):
    N = X.shape[0]
    out = np.zeros(N, dtype=np.int64)
    for s in prange(N):
        code = 0
        x = X[s]
        for h in range(1, H + 1):
            psi = psi_by_shell[h - 1]
            for sign in range(2):
                a1 = float(h) if sign == 0 else float(-h)
                if n == 1:
                    c = _equiv_check_vector(x, b, a1, 0.0, psi,
                                            min(a1, 0.0), max(a1, 0.0), float(h))
                    if c != 0:
                        code = c
                else:
                    for t in range(-h, h + 1):
                        lo = min(a1, 0.0) + min(float(t), 0.0)
                        hi = max(a1, 0.0) + max(float(t), 0.0)
                        nrm = math.sqrt(a1 * a1 + float(t) * float(t))
                        c = _equiv_check_vector(x, b, a1, float(t), psi, lo, hi, nrm)
                        if c != 0:
                            code = c
            if n == 2 and not z1_only:
                for sign in range(2):
                    a2 = float(h) if sign == 0 else float(-h)
                    for t in range(-h + 1, h):
                        lo = min(float(t), 0.0) + min(a2, 0.0)
                        hi = max(float(t), 0.0) + max(a2, 0.0)
                        nrm = math.sqrt(a2 * a2 + float(t) * float(t))
                        c = _equiv_check_vector(x, b, float(t), a2, psi, lo, hi, nrm)
                        if c != 0:
                            code = c
        out[s] = code
    return out


def _equiv_scan_numpy(X, b, psi_by_shell, H, n, z1_only):
    N, m = X.shape[0], X.shape[1]
    out = np.zeros(N, dtype=np.int64)
    for h in range(1, H + 1):
        psi = psi_by_shell[h - 1]
        A = shell_vectors(n, h, z1_only=z1_only).astype(np.float64)
        nrm = np.sqrt((A * A).sum(axis=1))
        lo = np.minimum(A, 0.0).sum(axis=1)
        hi = np.maximum(A, 0.0).sum(axis=1)
        T = np.einsum("qmn,vn->qmv", X, A) - b[None, :, None]
        P = np.rint(T)
        lhs_forms = np.abs(T - P) < psi
        rhs_forms = np.abs(T - P) / nrm[None, None, :] < (psi / nrm)[None, None, :]
        mismatch = np.all(lhs_forms, axis=1) != np.all(rhs_forms, axis=1)
        out[np.any(mismatch, axis=1)] = 1
        p_lo = np.floor(lo[None, None, :] - b[None, :, None] - psi)
        p_hi = np.ceil(hi[None, None, :] - b[None, :, None] + psi)
        missed = rhs_forms & ((P < p_lo) | (P > p_hi))
        out[np.any(missed, axis=(1, 2))] = 2
    return out


def equivalence_scan(X, b, psi_by_shell, H, n, z1_only):
    X = np.ascontiguousarray(X, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    psi_by_shell = np.asarray(psi_by_shell, dtype=np.float64)
    if JIT_ENABLED:
        return _equiv_scan_jit(X, b, psi_by_shell, H, n, z1_only)
    return _equiv_scan_numpy(X, b, psi_by_shell, H, n, z1_only)


# --- grid rasterizers for box counting ----------------------------------------

@njit(cache=True)
def _raster_strip_jit(mask, w1, w2, c, t):
    # cells meeting the OPEN strip; exact-boundary touches excluded to match
    # the strict membership inequalities
    R = mask.shape[0]
    inv = 1.0 / R
    if w1 == 0.0 and w2 == 0.0:
        if abs(c) < t:
            mask[:, :] = True
        return
    if abs(w1) >= abs(w2):
        for j in range(R):
            vlo = w2 * (j * inv)
            vhi = w2 * ((j + 1) * inv)
            if vlo > vhi:
                vlo, vhi = vhi, vlo
            lo = (c - t - vhi) / w1
            hi = (c + t - vlo) / w1
            if lo > hi:
                lo, hi = hi, lo
            i0 = int(math.floor(lo * R))
            i1 = int(math.floor(hi * R))
            if float(i1) >= hi * R:
                i1 -= 1
            if i0 < 0:
                i0 = 0
            if i1 > R - 1:
                i1 = R - 1
            for i in range(i0, i1 + 1):
                mask[i, j] = True
    else:
        for i in range(R):
            vlo = w1 * (i * inv)
            vhi = w1 * ((i + 1) * inv)
            if vlo > vhi:
                vlo, vhi = vhi, vlo
            lo = (c - t - vhi) / w2
            hi = (c + t - vlo) / w2
            if lo > hi:
                lo, hi = hi, lo
            j0 = int(math.floor(lo * R))
            j1 = int(math.floor(hi * R))
            if float(j1) >= hi * R:
                j1 -= 1
            if j0 < 0:
                j0 = 0
            if j1 > R - 1:
                j1 = R - 1
            for j in range(j0, j1 + 1):
                mask[i, j] = True


@njit(cache=True)
def _raster_strips_jit(mask, W1, W2, C, T):
    for s in range(len(W1)):
        _raster_strip_jit(mask, W1[s], W2[s], C[s], T[s])


def _raster_strips_numpy(mask, W1, W2, C, T):
    R = mask.shape[0]
    cols = np.arange(R, dtype=np.float64)
    for w1, w2, c, t in zip(W1, W2, C, T):
        if w1 == 0.0 and w2 == 0.0:
            if abs(c) < t:
                mask[:, :] = True
            continue
        along_x = abs(w1) >= abs(w2)
        wa, wb = (w1, w2) if along_x else (w2, w1)
        v1 = wb * (cols / R)
        v2 = wb * ((cols + 1) / R)
        vlo, vhi = np.minimum(v1, v2), np.maximum(v1, v2)
        lo = (c - t - vhi) / wa
        hi = (c + t - vlo) / wa
        lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
        i1_raw = np.floor(hi * R)
        i1_raw = np.where(i1_raw >= hi * R, i1_raw - 1, i1_raw)
        i0 = np.clip(np.floor(lo * R).astype(np.int64), 0, R - 1)
        i1 = np.clip(i1_raw.astype(np.int64), 0, R - 1)
        keep = i1_raw >= 0
        keep &= np.floor(lo * R) <= R - 1
        keep &= i1_raw >= np.floor(lo * R)
        diff = np.zeros((R, R + 1), dtype=np.int32)
        j = np.arange(R)[keep]
        np.add.at(diff, (j, i0[keep]), 1)
        np.add.at(diff, (j, i1[keep] + 1), -1)
        band = np.cumsum(diff, axis=1)[:, :R] > 0
        if along_x:
            mask |= band.T
        else:
            mask |= band
    return mask


def raster_strips(mask, W1, W2, C, T):
    """Mark grid cells of the unit square meeting each strip {|w.x - c| < t}."""
    W1 = np.asarray(W1, dtype=np.float64)
    W2 = np.asarray(W2, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if JIT_ENABLED:
        _raster_strips_jit(mask, W1, W2, C, T)
    else:
        _raster_strips_numpy(mask, W1, W2, C, T)
    return mask


def _open_interval_cells(lo, hi, R):
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    i1_raw = np.floor(hi * R)
    i1_raw = np.where(i1_raw >= hi * R, i1_raw - 1, i1_raw)
    i0 = np.clip(np.floor(lo * R).astype(np.int64), 0, R - 1)
    i1 = np.clip(i1_raw.astype(np.int64), 0, R - 1)
    keep = (i1_raw >= 0) & (np.floor(lo * R) <= R - 1) & (i1_raw >= np.floor(lo * R))
    return i0, i1, keep


def raster_rects(mask, X0, X1, Y0, Y1):
    """Mark grid cells meeting each open rectangle (x0,x1) x (y0,y1)."""
    R = mask.shape[0]
    i0, i1, kx = _open_interval_cells(X0, X1, R)
    j0, j1, ky = _open_interval_cells(Y0, Y1, R)
    keep = kx & ky
    for a, b, c, d in zip(i0[keep], i1[keep], j0[keep], j1[keep]):
        mask[a:b + 1, c:d + 1] = True
    return mask
