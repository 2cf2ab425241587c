"""Hot numeric loops, each with a numba twin and a pure-numpy path.

Everything here works on raw arrays with 0-based vertex indices.  The public
modules validate inputs and pick an implementation through ``_accel.pick``.
"""
import math

import numpy as np

from ._accel import njit, pick

FERMI_CLAMP = 700.0

# column layout of the per-step summary array
SUMMARY_FIELDS = ("mean", "var", "min", "max", "total", "debt_count")


# --------------------------------------------------------------------------
# Model T stochastic steps
# --------------------------------------------------------------------------

def _run_steps(w, t0, edge_u, edge_v, uniforms,
               eta, eta_const, k, k_const, mu, mu_const,
               states, summary, rec_edge, rec_seller, rec_q):
    """Advance ``w`` in place by ``uniforms.shape[0]`` steps.

    Row ``s`` of ``uniforms`` holds the two draws of step ``t0 + s``: the
    first picks the edge, the second the seller.  ``states``/``summary`` get
    one row per completed step (pass zero-row arrays to skip).  Returns the
    number of steps completed; a short count means the state went non-finite.
    """
    m = edge_u.shape[0]
    nsteps = uniforms.shape[0]
    per_agent = mu.shape[1] > 1
    keep_states = states.shape[0] > 0
    keep_summary = summary.shape[0] > 0
    keep_records = rec_q.shape[0] > 0
    for s in range(nsteps):
        t = t0 + s
        e = int(uniforms[s, 0] * m)
        if e >= m:
            e = m - 1
        i = edge_u[e]
        j = edge_v[e]
        et = eta[0] if eta_const else eta[t]
        kt = k[0] if k_const else k[t]
        row = 0 if mu_const else t

        x = -et * (w[i] - w[j])
        if x > FERMI_CLAMP:
            q = 0.0
        elif x < -FERMI_CLAMP:
            q = 1.0
        else:
            q = 1.0 / (1.0 + math.exp(x))

        if uniforms[s, 1] < q:
            seller = i
            buyer = j
        else:
            seller = j
            buyer = i
        w[seller] += kt
        w[buyer] -= kt
        if per_agent:
            w *= mu[row]
        else:
            w *= mu[row, 0]

        if not np.all(np.isfinite(w)):
            return s
        if keep_records:
            rec_edge[s] = e
            rec_seller[s] = seller
            rec_q[s] = q
        if keep_states:
            states[s] = w
        if keep_summary:
            mean = np.mean(w)
            summary[s, 0] = mean
            summary[s, 1] = np.mean((w - mean) ** 2)
            summary[s, 2] = np.min(w)
            summary[s, 3] = np.max(w)
            summary[s, 4] = np.sum(w)
            summary[s, 5] = np.sum(w < 0.0)
    return nsteps


run_steps_numba = njit(_run_steps)


def run_steps_numpy(*args):
    # overflow is reported through the short step count
    with np.errstate(over="ignore", invalid="ignore"):
        return _run_steps(*args)


run_steps = pick(run_steps_numba, run_steps_numpy)


# --------------------------------------------------------------------------
# Cyclic Jacobi eigenvalues (round-robin pair ordering)
# --------------------------------------------------------------------------

def round_robin_pairs(n):
    """Tournament ordering of all index pairs: ``n - 1`` (or ``n``) rounds of
    disjoint pairs.  Returns two int arrays of shape (rounds, half) with -1
    marking the bye when ``n`` is odd."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = m - 1
    half = m // 2
    ps = np.full((rounds, half), -1, dtype=np.int64)
    qs = np.full((rounds, half), -1, dtype=np.int64)
    for r in range(rounds):
        for h in range(half):
            a, b = players[h], players[m - 1 - h]
            if a < n and b < n:
                ps[r, h], qs[r, h] = min(a, b), max(a, b)
        players = [players[0], players[-1]] + players[1:-1]
    return ps, qs


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    return t, c, t * c


def _off_norm(a):
    total = 0.0
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j:
                total += a[i, j] * a[i, j]
    return math.sqrt(total)


_off_norm_numba = njit(_off_norm)
_rotation_numba = njit(_rotation)


def _jacobi_numba_body(a, ps, qs, rel_tol, max_sweeps):
    # Same round structure as the numpy path: all row rotations of a round,
    # then all column rotations, so every inner loop walks a contiguous row.
    n = a.shape[0]
    half = ps.shape[1]
    fro = math.sqrt(np.sum(a * a))
    negligible = 0.1 * rel_tol * fro / n
    pp = np.empty(half, dtype=np.int64)
    qq = np.empty(half, dtype=np.int64)
    tt = np.empty(half)
    cc = np.empty(half)
    ss = np.empty(half)
    aa = np.empty(half)
    dp = np.empty(half)
    dq = np.empty(half)
    off = _off_norm_numba(a)
    for sweep in range(max_sweeps + 1):
        off = _off_norm_numba(a)
        if off <= rel_tol * fro:
            return sweep, off
        if sweep == max_sweeps:
            break
        for r in range(ps.shape[0]):
            live = 0
            for h in range(half):
                p = ps[r, h]
                q = qs[r, h]
                if p < 0:
                    continue
                apq = a[p, q]
                if abs(apq) <= negligible:
                    continue
                t, c, s = _rotation_numba(a[p, p], a[q, q], apq)
                pp[live] = p
                qq[live] = q
                tt[live] = t
                cc[live] = c
                ss[live] = s
                aa[live] = apq
                dp[live] = a[p, p]
                dq[live] = a[q, q]
                live += 1
            for h in range(live):
                p = pp[h]
                q = qq[h]
                c = cc[h]
                s = ss[h]
                for x in range(n):
                    axp = a[p, x]
                    axq = a[q, x]
                    a[p, x] = c * axp - s * axq
                    a[q, x] = s * axp + c * axq
            for x in range(n):
                for h in range(live):
                    p = pp[h]
                    q = qq[h]
                    axp = a[x, p]
                    axq = a[x, q]
                    a[x, p] = axp * cc[h] - axq * ss[h]
                    a[x, q] = axp * ss[h] + axq * cc[h]
            for h in range(live):
                p = pp[h]
                q = qq[h]
                a[p, p] = dp[h] - tt[h] * aa[h]
                a[q, q] = dq[h] + tt[h] * aa[h]
                a[p, q] = 0.0
                a[q, p] = 0.0
    return -1, off


_jacobi_numba = njit(_jacobi_numba_body)


def _jacobi_numpy(a, ps, qs, rel_tol, max_sweeps):
    fro = math.sqrt(float(np.sum(a * a)))
    negligible = 0.1 * rel_tol * fro / a.shape[0]
    diag_mask = ~np.eye(a.shape[0], dtype=bool)
    off = math.sqrt(float(np.sum(a[diag_mask] ** 2)))
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum(a[diag_mask] ** 2)))
        if off <= rel_tol * fro:
            return sweep, off
        if sweep == max_sweeps:
            break
        for r in range(ps.shape[0]):
            live = ps[r] >= 0
            p = ps[r][live]
            q = qs[r][live]
            apq = a[p, q]
            nz = np.abs(apq) > negligible
            if not nz.any():
                continue
            p, q, apq = p[nz], q[nz], apq[nz]
            app = a[p, p]
            aqq = a[q, q]
            with np.errstate(over="ignore", divide="ignore"):
                theta = (aqq - app) / (2.0 * apq)
                t = np.where(
                    np.abs(theta) > 1e150,
                    0.5 / theta,
                    np.where(theta < 0.0, -1.0, 1.0)
                    / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
                )
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            row_p = a[p, :].copy()
            row_q = a[q, :].copy()
            a[p, :] = c[:, None] * row_p - s[:, None] * row_q
            a[q, :] = s[:, None] * row_p + c[:, None] * row_q
            col_p = a[:, p].copy()
            col_q = a[:, q].copy()
            a[:, p] = col_p * c - col_q * s
            a[:, q] = col_p * s + col_q * c
            a[p, p] = app - t * apq
            a[q, q] = aqq + t * apq
            a[p, q] = 0.0
            a[q, p] = 0.0
    return -1, off


def jacobi_eigenvalues(matrix, rel_tol=1e-12, max_sweeps=100, backend=None):
    """Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.

    Entries below ``0.1 * rel_tol * ||A||_F / n`` are never rotated: together
    they cannot hold the off-diagonal norm above the stopping threshold, and
    rotating noise-level entries inside a degenerate eigenvalue cluster
    (star graphs) stalls convergence at a linear rate.

    Returns ``(eigenvalues ascending, off-diagonal norm, sweeps)``; ``sweeps``
    is -1 when the budget ran out before ``off <= rel_tol * ||A||_F``.
    """
    a = np.array(matrix, dtype=np.float64, copy=True, order="C")
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy(), 0.0, 0
    ps, qs = round_robin_pairs(n)
    impl = _select(backend, _jacobi_numba, _jacobi_numpy)
    sweeps, off = impl(a, ps, qs, float(rel_tol), int(max_sweeps))
    return np.sort(a.diagonal()), float(off), int(sweeps)


# --------------------------------------------------------------------------
# Power iteration for the top Laplacian eigenvalue
# --------------------------------------------------------------------------

def _power_numba_body(indptr, indices, degrees, x, rel_tol, max_iter):
    n = x.shape[0]
    y = np.empty(n)
    lam_old = 0.0
    lam = 0.0
    for it in range(max_iter):
        for v in range(n):
            acc = degrees[v] * x[v]
            for idx in range(indptr[v], indptr[v + 1]):
                acc -= x[indices[idx]]
            y[v] = acc
        lam = np.dot(x, y)
        y -= np.mean(y)
        norm = math.sqrt(np.dot(y, y))
        if norm == 0.0:
            return lam, it + 1
        for v in range(n):
            x[v] = y[v] / norm
        if it > 0 and abs(lam - lam_old) <= rel_tol * abs(lam):
            return lam, it + 1
        lam_old = lam
    return lam, -1


_power_numba = njit(_power_numba_body)


def _power_numpy(indptr, indices, degrees, x, rel_tol, max_iter):
    n = x.shape[0]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    lam_old = 0.0
    lam = 0.0
    for it in range(max_iter):
        y = degrees * x - np.bincount(rows, weights=x[indices], minlength=n)
        lam = float(np.dot(x, y))
        y -= y.mean()
        norm = math.sqrt(float(np.dot(y, y)))
        if norm == 0.0:
            return lam, it + 1
        x[:] = y / norm
        if it > 0 and abs(lam - lam_old) <= rel_tol * abs(lam):
            return lam, it + 1
        lam_old = lam
    return lam, -1


def power_lambda_max(indptr, indices, degrees, x0, rel_tol=1e-10, max_iter=100_000,
                     backend=None):
    """Largest Laplacian eigenvalue by power iteration with the all-ones
    kernel projected out.  Returns ``(lambda, iterations)``, iterations -1 on
    budget exhaustion."""
    x = np.array(x0, dtype=np.float64, copy=True)
    x -= x.mean()
    x /= np.linalg.norm(x)
    impl = _select(backend, _power_numba, _power_numpy)
    lam, its = impl(indptr, indices, degrees.astype(np.float64), x,
                    float(rel_tol), int(max_iter))
    return float(lam), int(its)


def _select(backend, numba_impl, numpy_impl):
    if backend is None:
        return pick(numba_impl, numpy_impl)
    if backend == "numba":
        if numba_impl is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return numba_impl
    if backend == "numpy":
        return numpy_impl
    raise ValueError(f"unknown backend {backend!r}")
