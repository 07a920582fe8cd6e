"""Instance generation, oracle envelopes, and replication harnesses.

The generator builds a single-predictor regression whose error covariance
splits along a drawn basis: Sigma = Gamma Omega Gamma' + Gamma0 Omega0
Gamma0' with Omega = A A' (A uniform on (0,1)), eta fixed at ones, and
beta = Gamma eta.  The population pair is then M = Sigma, U = beta beta',
whose envelope is exactly span(Gamma); sample pairs come from the usual
covariance plug-ins.

The oracle constructs the envelope directly from the spectrum of M: it is
the sum of the images of U under the eigenspace projections of M, taken
over eigen-groups onto which U projects at all.  No optimization is
involved, which makes it the reference answer for the solvers.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BootstrapUnstable, InvalidDimension, InvalidInput
from .estimators import RegressionData, _fit_by_kind, covariance_kit
from .linalg import (
    fix_column_signs,
    orthonormal_complement,
    orthonormalize,
    subspace_distance,
    sym_eig,
    symmetrize,
    _require_symmetric,
)
from .objective import ObjectivePair, j_value
from . import grassmann, onedim

__all__ = [
    "GeneratedInstance",
    "generate_instance",
    "sample_data",
    "oracle_envelope",
    "ReplicationRecord",
    "ExperimentReport",
    "population_experiment",
    "sample_experiment",
    "BootstrapResult",
    "residual_bootstrap",
    "ALGORITHMS",
]

# preset solver configurations used by the experiment harnesses and the
# command line; fg-warm is the sequential fit refined by a short run of
# the full optimizer
ALGORITHMS = ("onedim", "fg", "fg-warm")


@dataclass
class GeneratedInstance:
    """One synthetic envelope problem with its ground truth attached."""

    gamma: np.ndarray
    gamma0: np.ndarray
    omega: np.ndarray
    omega0: np.ndarray
    eta: np.ndarray
    beta: np.ndarray
    m: np.ndarray
    u_mat: np.ndarray
    seed: int


def generate_instance(d, u, seed):
    """Draw one instance of dimension d with a u-dimensional envelope.

    Draw order is fixed: basis normals first, then the Omega factor, then
    the Omega0 factor, so results are reproducible per seed.
    """
    if not (1 <= u < d):
        raise InvalidDimension(f"need 1 <= u < d, got u={u}, d={d}")
    rng = np.random.default_rng(seed)
    gamma = orthonormalize(rng.standard_normal((d, u)))
    gamma0 = orthonormal_complement(gamma)
    a = rng.uniform(0.0, 1.0, (u, u))
    omega = a @ a.T
    a0 = rng.uniform(0.0, 1.0, (d - u, d - u))
    omega0 = a0 @ a0.T
    eta = np.ones(u)
    beta = gamma @ eta
    m = symmetrize(gamma @ omega @ gamma.T + gamma0 @ omega0 @ gamma0.T)
    return GeneratedInstance(
        gamma=gamma,
        gamma0=gamma0,
        omega=omega,
        omega0=omega0,
        eta=eta,
        beta=beta,
        m=m,
        u_mat=np.outer(beta, beta),
        seed=seed,
    )


def sample_data(instance, n, seed):
    """n observations of y = beta x + eps with x standard normal scalar.

    The intercept is zero and eps is drawn through the symmetric square
    root of the instance covariance.
    """
    if n < 2:
        raise InvalidInput(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    z = rng.standard_normal((n, instance.m.shape[0]))
    vals, vecs = np.linalg.eigh(instance.m)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    y = x[:, None] * instance.beta[None, :] + z @ root
    return RegressionData(x=x, y=y)


def oracle_envelope(m, u_mat, tol=1e-9):
    """Envelope basis read directly off the spectrum of M.

    For each eigen-group of M (near-ties merged), project U onto the
    group's eigenspace; groups seeing at least ``tol``-relative mass
    contribute an orthonormal basis of that projected image.  The result
    spans the smallest reducing subspace of M containing span(U).
    """
    m = _require_symmetric(m, "m")
    u_mat = _require_symmetric(u_mat, "u_mat")
    if u_mat.shape != m.shape:
        raise InvalidInput(f"m is {m.shape} but u_mat is {u_mat.shape}")
    dec = sym_eig(m)
    scale = float(np.linalg.norm(u_mat, "fro"))
    if scale == 0.0:
        return np.zeros((m.shape[0], 0))
    blocks = []
    for group in dec.groups:
        v = dec.eigenvectors[:, group]
        coords = v.T @ u_mat  # group-frame image of U
        if np.linalg.norm(coords, "fro") <= tol * scale:
            continue
        left, svals, _ = np.linalg.svd(coords, full_matrices=False)
        keep = svals > tol * scale
        if keep.any():
            blocks.append(v @ left[:, keep])
    if not blocks:
        return np.zeros((m.shape[0], 0))
    return fix_column_signs(np.column_stack(blocks))


@dataclass
class ReplicationRecord:
    """One (replication, algorithm) cell of an experiment."""

    replication: int
    seed: int
    algorithm: str
    distance: float | None
    final_objective: float | None
    wall_time_seconds: float | None
    diagnostics: list = field(default_factory=list)
    error: str | None = None


@dataclass
class ExperimentReport:
    """All replication records plus per-algorithm mean/se summaries."""

    mode: str
    d: int
    u: int
    n: int | None
    replications: int
    seed: int
    records: list
    summary: dict

    def to_dict(self, include_timing=False):
        """Plain-dict view for serialization.

        Wall-clock fields are withheld unless asked for, so that reports
        written from identical configurations are byte-identical.
        """
        records = []
        for rec in self.records:
            row = {
                "replication": rec.replication,
                "seed": rec.seed,
                "algorithm": rec.algorithm,
                "distance": rec.distance,
                "final_objective": rec.final_objective,
                "diagnostics": list(rec.diagnostics),
                "error": rec.error,
            }
            if include_timing:
                row["wall_time_seconds"] = rec.wall_time_seconds
            records.append(row)
        summary = {}
        for algo in sorted(self.summary):
            cell = dict(self.summary[algo])
            if not include_timing:
                cell.pop("mean_time_seconds", None)
                cell.pop("se_time_seconds", None)
            summary[algo] = cell
        return {"records": records, "summary": summary}


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return None, None
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))


def _summarize(records, algo_set):
    summary = {}
    for algo in algo_set:
        rows = [r for r in records if r.algorithm == algo]
        ok = [r for r in rows if r.error is None]
        mean_d, se_d = _mean_se([r.distance for r in ok])
        mean_t, se_t = _mean_se([r.wall_time_seconds for r in ok])
        summary[algo] = {
            "mean_distance": mean_d,
            "se_distance": se_d,
            "mean_time_seconds": mean_t,
            "se_time_seconds": se_t,
            "replications_ok": len(ok),
            "replications_failed": len(rows) - len(ok),
        }
    return summary


def _run_algo(algo, m, u_mat, u, seed):
    """One timed fit.  Start bases for the full optimizer are prepared
    outside the timed call so timings cover optimization only."""
    if algo == "onedim":
        fit = onedim.fit(m, u_mat, u, onedim.OneDimSettings(seed=seed))
    elif algo == "fg":
        start = grassmann.eigenvector_scan_start(m, u_mat, u)
        fit = grassmann.fit(
            m, u_mat, u, grassmann.FgSettings(start_strategy=start, seed=seed)
        )
    elif algo == "fg-warm":
        warm = onedim.fit(m, u_mat, u, onedim.OneDimSettings(seed=seed)).basis
        fit = grassmann.fit(
            m,
            u_mat,
            u,
            grassmann.FgSettings(start_strategy=warm, max_iterations=100, seed=seed),
        )
    else:
        raise InvalidInput(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
    return fit


def _check_algo_set(algo_set):
    algos = list(algo_set)
    if not algos:
        raise InvalidInput("algo_set must name at least one algorithm")
    for algo in algos:
        if algo not in ALGORITHMS:
            raise InvalidInput(
                f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}"
            )
    return algos


def _map_replications(worker, count, max_workers):
    if max_workers is None or max_workers <= 1 or count <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(worker, range(count)))


def population_experiment(d, u, replications, algo_set, seed=0, max_workers=None):
    """Fit exact (M, U) pairs from fresh instances, once per replication.

    Replication i uses seed ``seed + i`` for its instance, so runs split
    across workers reproduce the serial report exactly.  Solver failures
    are recorded on the affected record, never raised.
    """
    algos = _check_algo_set(algo_set)
    if replications < 0:
        raise InvalidInput("replications must be nonnegative")

    def one(i):
        inst = generate_instance(d, u, seed + i)
        pair = ObjectivePair.from_m_u(inst.m, inst.u_mat)
        rows = []
        for algo in algos:
            try:
                fit = _run_algo(algo, inst.m, inst.u_mat, u, seed + i)
                rows.append(
                    ReplicationRecord(
                        replication=i,
                        seed=seed + i,
                        algorithm=algo,
                        distance=subspace_distance(fit.basis, inst.gamma),
                        final_objective=float(j_value(pair, fit.basis)),
                        wall_time_seconds=fit.wall_time_seconds,
                        diagnostics=list(fit.diagnostics),
                    )
                )
            except Exception as exc:
                rows.append(
                    ReplicationRecord(
                        replication=i,
                        seed=seed + i,
                        algorithm=algo,
                        distance=None,
                        final_objective=None,
                        wall_time_seconds=None,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
        return rows

    nested = _map_replications(one, replications, max_workers)
    records = [row for rows in nested for row in rows]
    return ExperimentReport(
        mode="population",
        d=d,
        u=u,
        n=None,
        replications=replications,
        seed=seed,
        records=records,
        summary=_summarize(records, algos),
    )


def sample_experiment(d, u, n, replications, algo_set, seed=0, max_workers=None):
    """One fixed instance, fresh data per replication, sample plug-ins.

    The instance comes from ``seed`` itself; replication i draws its data
    with seed ``seed + 1 + i`` (offset so no replication shares the
    instance stream).  M-hat is S_{Y|X} and U-hat is S_Y - S_{Y|X}.
    """
    algos = _check_algo_set(algo_set)
    if replications < 0:
        raise InvalidInput("replications must be nonnegative")
    inst = generate_instance(d, u, seed)

    def one(i):
        data = sample_data(inst, n, seed + 1 + i)
        kit = covariance_kit(data)
        m_hat = kit.s_y_given_x
        u_hat = symmetrize(kit.s_y - kit.s_y_given_x)
        rows = []
        for algo in algos:
            try:
                fit = _run_algo(algo, m_hat, u_hat, u, seed + 1 + i)
                pair = ObjectivePair.from_pair(m_hat, kit.s_y)
                rows.append(
                    ReplicationRecord(
                        replication=i,
                        seed=seed + 1 + i,
                        algorithm=algo,
                        distance=subspace_distance(fit.basis, inst.gamma),
                        final_objective=float(j_value(pair, fit.basis)),
                        wall_time_seconds=fit.wall_time_seconds,
                        diagnostics=list(fit.diagnostics),
                    )
                )
            except Exception as exc:
                rows.append(
                    ReplicationRecord(
                        replication=i,
                        seed=seed + 1 + i,
                        algorithm=algo,
                        distance=None,
                        final_objective=None,
                        wall_time_seconds=None,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
        return rows

    nested = _map_replications(one, replications, max_workers)
    records = [row for rows in nested for row in rows]
    return ExperimentReport(
        mode="sample",
        d=d,
        u=u,
        n=n,
        replications=replications,
        seed=seed,
        records=records,
        summary=_summarize(records, algos),
    )


@dataclass
class BootstrapResult:
    """Element-wise bootstrap standard errors for both estimators."""

    se_ols: np.ndarray
    se_env: np.ndarray
    replicates: int
    failed: int


def residual_bootstrap(data, kind, u, b, algo="onedim", settings=None, seed=0, p1=None):
    """Residual bootstrap standard errors for beta-hat, OLS and envelope.

    Rows of the OLS residual matrix are resampled with replacement,
    responses rebuilt as alpha + X beta' + resampled residuals, and both
    estimators refit per replicate.  Standard deviations use divisor b-1
    over the successful replicates; more than 20 percent failures raises
    BootstrapUnstable.  For the mean kinds the "OLS" estimator is the
    sample mean and X plays no role.
    """
    if b < 2:
        raise InvalidInput(f"need at least 2 bootstrap replicates, got {b}")
    if kind not in ("response", "partial", "predictor", "mean", "constrained-mean"):
        raise InvalidInput(f"unknown kind {kind!r}")
    # fail fast if the requested fit cannot work before burning b replicates
    _fit_by_kind(kind, data, u, algo, settings, p1)
    y = data.y
    n = y.shape[0]
    if kind in ("mean", "constrained-mean"):
        center = y.mean(axis=0)[None, :]
    else:
        kit = covariance_kit(data)
        beta_ols = np.linalg.solve(kit.s_x, kit.s_xy).T
        alpha_ols = kit.y_mean - beta_ols @ kit.x_mean
        center = alpha_ols[None, :] + data.x @ beta_ols.T
    resid = y - center

    rng = np.random.default_rng(seed)
    ols_draws = []
    env_draws = []
    failed = 0
    for _ in range(b):
        rows = rng.integers(0, n, size=n)
        y_star = center + resid[rows]
        try:
            star = RegressionData(x=data.x, y=y_star)
            refit = _fit_by_kind(kind, star, u, algo, settings, p1)
            env_draws.append(refit.beta_env)
            # align shapes: the partial kind only envelopes the X1 block
            ols = refit.beta_ols[:, :p1] if kind == "partial" else refit.beta_ols
            ols_draws.append(ols)
        except Exception:
            failed += 1
    if failed > 0.2 * b:
        raise BootstrapUnstable(
            f"{failed} of {b} bootstrap replicates failed to refit"
        )
    se_ols = np.std(np.stack(ols_draws), axis=0, ddof=1)
    se_env = np.std(np.stack(env_draws), axis=0, ddof=1)
    return BootstrapResult(se_ols=se_ols, se_env=se_env, replicates=b, failed=failed)
