"""Sequential one-direction-at-a-time envelope solver.

The envelope basis is grown greedily: with g_1..g_k already accepted and
G_0k an orthonormal complement of their span, the next direction minimizes
the scale-invariant objective

    D_k(w) = log(w' M_k w) + log(w' (M_k + U_k)^{-1} w) - 2 log(w' w)

over w in R^{d-k}, where M_k and U_k are M and U compressed onto the
complement.  The accepted direction is G_0k w, so every step enlarges the
span by exactly one dimension and the whole run costs u small smooth
minimizations instead of one Grassmann program.

Each step is solved by a safeguarded Newton iteration (eigenvalue-shifted
Hessian, Armijo backtracking, steepest-descent fallback) started from every
eigenvector of M_k and of (M_k + U_k)^{-1}.  All starts are iterated
together as rows of one array; the winner is the converged candidate with
the smallest final objective, ties resolved by candidate order.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimension, NoConvergence
from .linalg import fix_column_signs, orthonormal_complement, _require_symmetric
from .objective import ObjectivePair

__all__ = ["OneDimSettings", "EnvelopeFit", "solve_direction", "fit"]

_ARMIJO_C1 = 1e-4
_MIN_STEP = 1e-14
_SHIFT_FLOOR = 1e-8


@dataclass(frozen=True)
class OneDimSettings:
    """Knobs for the direction solver.

    num_extra_starts adds that many seeded random unit starts to the
    deterministic eigenvector candidates.
    """

    max_inner_iterations: int = 500
    gradient_tol: float = 1e-10
    num_extra_starts: int = 0
    seed: int = 0


@dataclass
class EnvelopeFit:
    """Result of an envelope basis fit.

    objective_values holds the per-step final objective for the sequential
    algorithm and the single final value for the Grassmann optimizer;
    inner_iterations is aligned with it.  diagnostics collects string flags
    such as ``FlatStep@k``, ``CapReached`` or ``Ridged``.
    """

    basis: np.ndarray
    objective_values: list
    inner_iterations: list
    wall_time_seconds: float
    algorithm_tag: str
    diagnostics: list = field(default_factory=list)


def _values(m, n, w):
    """Row-wise objective values; non-finite results become +inf."""
    qm = np.einsum("ij,ij->i", w @ m, w)
    qn = np.einsum("ij,ij->i", w @ n, w)
    qw = np.einsum("ij,ij->i", w, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(qm) + np.log(qn) - 2.0 * np.log(qw)
    out[~np.isfinite(out)] = np.inf
    return out


def _gradients(m, n, w):
    g, _ = _gradients_with_floor(m, n, w, 0.0, 0.0)
    return g


def _gradients_with_floor(m, n, w, fro_m, fro_n):
    """Row gradients plus a per-row bound on their own roundoff.

    The bound is what float64 can resolve in the gradient at each point:
    machine epsilon times the magnitudes of the three assembled terms.  A
    tangential norm at or below it cannot be distinguished from an exact
    critical point, whatever the requested tolerance says.
    """
    wm = w @ m
    wn = w @ n
    qm = np.einsum("ij,ij->i", wm, w)
    qn = np.einsum("ij,ij->i", wn, w)
    qw = np.einsum("ij,ij->i", w, w)
    g = 2.0 * wm / qm[:, None] + 2.0 * wn / qn[:, None] - 4.0 * w / qw[:, None]
    eps = np.finfo(float).eps
    floor = 32.0 * eps * (
        2.0 * fro_m / qm + 2.0 * fro_n / qn + 4.0 / np.sqrt(qw)
    )
    return g, floor


def _hessians(m, n, w):
    mw = w @ m
    nw = w @ n
    qm = np.einsum("ij,ij->i", mw, w)[:, None, None]
    qn = np.einsum("ij,ij->i", nw, w)[:, None, None]
    qw = np.einsum("ij,ij->i", w, w)[:, None, None]
    eye = np.eye(m.shape[0])
    h = (
        2.0 * m / qm
        - 4.0 * np.einsum("ci,cj->cij", mw, mw) / qm**2
        + 2.0 * n / qn
        - 4.0 * np.einsum("ci,cj->cij", nw, nw) / qn**2
        - 4.0 * eye / qw
        + 8.0 * np.einsum("ci,cj->cij", w, w) / qw**2
    )
    return 0.5 * (h + np.transpose(h, (0, 2, 1)))


def _armijo(m, n, w, f, p, dg):
    """Backtracking line search run on all rows at once.

    Returns (accepted mask, new points, new values).  Rows whose step
    shrinks below the minimum step are reported unaccepted.
    """
    rows = w.shape[0]
    t = np.ones(rows)
    accepted = np.zeros(rows, dtype=bool)
    w_new = w.copy()
    f_new = f.copy()
    pending = np.ones(rows, dtype=bool)
    while pending.any():
        j = np.flatnonzero(pending)
        trial = w[j] + t[j, None] * p[j]
        fv = _values(m, n, trial)
        ok = fv <= f[j] + _ARMIJO_C1 * t[j] * dg[j]
        hit = j[ok]
        w_new[hit] = trial[ok]
        f_new[hit] = fv[ok]
        accepted[hit] = True
        pending[hit] = False
        t[pending] *= 0.5
        dead = pending & (t < _MIN_STEP)
        pending[dead] = False
    return accepted, w_new, f_new


def _candidate_starts(pair, settings):
    starts = [pair.m_eigenvectors.T, pair.m_plus_u_eigenvectors.T]
    if settings.num_extra_starts > 0:
        rng = np.random.default_rng(settings.seed)
        extra = rng.standard_normal((settings.num_extra_starts, pair.dim))
        extra /= np.linalg.norm(extra, axis=1, keepdims=True)
        starts.append(extra)
    return np.concatenate(starts, axis=0)


def _solve_direction(pair, settings):
    """Multistart solve; returns (w, value, iterations-of-winner, flat)."""
    dim = pair.dim
    m, n = pair.m, pair.m_plus_u_inv
    if dim == 1:
        w = np.ones(1)
        return w, float(_values(m, n, w[None, :])[0]), 0, False

    w = _candidate_starts(pair, settings).copy()
    count = w.shape[0]
    f = _values(m, n, w)
    iters = np.zeros(count, dtype=int)
    converged = np.zeros(count, dtype=bool)
    active = np.ones(count, dtype=bool)
    best_gn = np.full(count, np.inf)
    tol = settings.gradient_tol
    fro_m = float(np.linalg.norm(m, "fro"))
    fro_n = float(np.linalg.norm(n, "fro"))
    it = 0

    # all active candidates step together, so one global counter suffices;
    # a candidate's recorded inner-iteration count is the value of ``it``
    # when it converged or was retired
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        wa = w[idx]
        g, floor = _gradients_with_floor(m, n, wa, fro_m, fro_n)
        radial = np.einsum("ij,ij->i", g, wa)
        tang = g - radial[:, None] * wa
        gn = np.linalg.norm(tang, axis=1)
        best_gn[idx] = np.minimum(best_gn[idx], gn)
        done = gn <= np.maximum(tol * np.maximum(1.0, np.abs(f[idx])), floor)
        converged[idx[done]] = True
        active[idx[done]] = False
        iters[idx[done]] = it
        idx = idx[~done]
        if idx.size == 0:
            break
        if it >= settings.max_inner_iterations:
            active[idx] = False
            iters[idx] = it
            break
        it += 1
        wa = wa[~done]
        g = g[~done]

        h = _hessians(m, n, wa)
        lam_min = np.linalg.eigvalsh(h)[:, 0]
        scale = np.maximum(1.0, np.abs(h).max(axis=(1, 2)))
        tau = np.maximum(0.0, _SHIFT_FLOOR * scale - lam_min)
        h[:, np.arange(dim), np.arange(dim)] += tau[:, None]
        p = -np.linalg.solve(h, g[..., None])[..., 0]
        dg = np.einsum("ij,ij->i", p, g)
        bad = dg >= 0.0
        if bad.any():
            p[bad] = -g[bad]
            dg[bad] = -np.einsum("ij,ij->i", g[bad], g[bad])

        acc, w_try, f_try = _armijo(m, n, wa, f[idx], p, dg)
        if not acc.all():
            # Newton step failed to decrease somewhere: steepest descent retry
            miss = ~acc
            p2 = -g[miss]
            dg2 = -np.einsum("ij,ij->i", p2, p2)
            acc2, w2, f2 = _armijo(m, n, wa[miss], f[idx][miss], p2, dg2)
            sub = np.flatnonzero(miss)
            w_try[sub[acc2]] = w2[acc2]
            f_try[sub[acc2]] = f2[acc2]
            acc[sub[acc2]] = True
            # both searches stalled: retire the candidate where it stands
            dead = idx[sub[~acc2]]
            active[dead] = False
            iters[dead] = it
        moved = idx[acc]
        if moved.size:
            wn = w_try[acc]
            wn /= np.linalg.norm(wn, axis=1, keepdims=True)
            w[moved] = wn
            f[moved] = _values(m, n, wn)

    if not converged.any():
        b = int(np.argmin(f))
        raise NoConvergence(
            "no candidate start satisfied the gradient criterion "
            f"(best objective {f[b]:.6g}, gradient norm {best_gn[b]:.3g})",
            best=fix_column_signs(w[b]),
            gradient_norm=float(best_gn[b]),
        )

    # smallest final value among all starts wins (first index on ties);
    # stalled starts stay eligible since a stall only happens where no
    # representable decrease exists, i.e. at a numerical critical point
    win = int(np.argmin(f))
    spread = float(np.max(f) - np.min(f))
    flat = spread <= 1e-10 * max(1.0, abs(float(f[win])))
    return fix_column_signs(w[win]), float(f[win]), int(iters[win]), bool(flat)


def solve_direction(pair, settings=None):
    """Best direction for one deflated (M_k, U_k) pair.

    Returns a unit vector whose tangential gradient meets the relative
    tolerance in ``settings``; raises NoConvergence when no start does.
    """
    if settings is None:
        settings = OneDimSettings()
    w, _, _, _ = _solve_direction(pair, settings)
    return w


def fit(m_hat, u_hat, u, settings=None):
    """Estimate a u-dimensional envelope basis for the pair (m_hat, u_hat).

    m_hat must be symmetric positive definite, u_hat symmetric positive
    semidefinite.  Directions are extracted one at a time; the returned
    basis columns are orthonormal and in extraction order.  u == d skips
    optimization entirely and returns the identity basis.
    """
    if settings is None:
        settings = OneDimSettings()
    m_hat = _require_symmetric(m_hat, "m_hat")
    u_hat = _require_symmetric(u_hat, "u_hat")
    d = m_hat.shape[0]
    if u_hat.shape[0] != d:
        raise InvalidDimension(f"m_hat is {d}x{d} but u_hat is {u_hat.shape[0]}x{u_hat.shape[0]}")
    if not (1 <= u <= d):
        raise InvalidDimension(f"u must be between 1 and {d}, got {u}")

    start = time.perf_counter()
    if u == d:
        return EnvelopeFit(
            basis=np.eye(d),
            objective_values=[],
            inner_iterations=[],
            wall_time_seconds=time.perf_counter() - start,
            algorithm_tag="onedim",
            diagnostics=["FullSpace"],
        )

    basis = np.zeros((d, 0))
    values = []
    iterations = []
    diagnostics = []
    for k in range(u):
        g0 = orthonormal_complement(basis)
        pair_k = ObjectivePair.from_m_u(g0.T @ m_hat @ g0, g0.T @ u_hat @ g0)
        try:
            w, val, its, flat = _solve_direction(pair_k, settings)
        except NoConvergence as exc:
            exc.step_index = k
            raise
        g = g0 @ w
        g /= np.linalg.norm(g)
        basis = np.column_stack([basis, fix_column_signs(g)])
        values.append(val)
        iterations.append(its)
        if flat:
            diagnostics.append(f"FlatStep@{k}")
    elapsed = time.perf_counter() - start
    return EnvelopeFit(
        basis=basis,
        objective_values=values,
        inner_iterations=iterations,
        wall_time_seconds=elapsed,
        algorithm_tag="onedim",
        diagnostics=diagnostics,
    )
