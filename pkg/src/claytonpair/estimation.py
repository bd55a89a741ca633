"""Maximum-likelihood fitting under the homogeneity null and the alternative.

Rates are optimized as ``logit(pi)`` and the copula parameter as
``log(theta)``, so the search is unconstrained apart from safety boxes.  The
optimizer is a Newton-type (Fisher scoring) iteration: the expected
information supplies the curvature, which is positive definite and arrowhead
shaped, so each step costs O(g).  It runs on whole batches of tables at once;
:func:`fit` is the single-table front end and the Monte Carlo harness calls
:func:`fit_batch` directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .copula import tau_to_theta
from .errors import DegenerateTable, NoConvergence
from .fisher import info_entries, solve_arrowhead_arrays
from .likelihood import Hypothesis, ModelParams, as_counts, batch_loglik, score_terms

THETA_FLOOR = 1e-4
THETA_CAP = 1e3
LOGIT_BOX = 25.0
GTOL = 1e-6
FTOL = 1e-10
XTOL = 1e-10
MAX_ITER = 500
MAX_STEP = 5.0
MAX_HALVINGS = 40
START_THETAS = (0.5, 2.0, 8.0)

_LAM_LO = float(np.log(THETA_FLOOR))
_LAM_HI = float(np.log(THETA_CAP))


def transform(params: ModelParams) -> np.ndarray:
    """``(logit(pi_1), ..., logit(pi_k), log(theta))``."""
    return np.append(logit(np.asarray(params.pis)), np.log(params.theta))


def untransform(x, hypothesis=Hypothesis.ALTERNATIVE) -> ModelParams:
    x = np.asarray(x, dtype=float)
    return ModelParams(tuple(expit(x[:-1])), float(np.exp(x[-1])), Hypothesis(hypothesis))


@dataclass(frozen=True)
class FitResult:
    params_hat: ModelParams
    loglik_hat: float
    converged: bool
    grad_norm: float
    iterations: int
    n_starts_used: int
    boundary_warning: bool

    @property
    def hypothesis(self) -> Hypothesis:
        return self.params_hat.hypothesis


@dataclass
class BatchFit:
    """Per-table optimum of a batch; arrays share the leading batch axis."""

    pis: np.ndarray
    theta: np.ndarray
    loglik: np.ndarray
    converged: np.ndarray
    grad_norm: np.ndarray
    iterations: np.ndarray
    boundary: np.ndarray


def moment_start(counts) -> tuple[np.ndarray, np.ndarray]:
    """Moment initializers for a batch of ``(..., k, 3)`` counts.

    Rates come from the share of affected members per group.  Theta comes
    from the phi coefficient of the pooled 2x2 table (discordant subjects
    split evenly between the two off-diagonal cells), read as Kendall's tau.
    """
    counts = np.asarray(counts, dtype=float)
    m = counts.sum(axis=-1)
    pi = np.clip((counts[..., 1] + 2.0 * counts[..., 2]) / (2.0 * m), 0.02, 0.98)
    s0, s1, s2 = (counts.sum(axis=-2)[..., j] for j in range(3))
    half = 0.5 * s1
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = (s0 * s2 - half * half) / np.sqrt((s0 + half) ** 2 * (s2 + half) ** 2)
    tau = np.clip(np.nan_to_num(phi, nan=0.0), 1e-3, 0.99)
    theta = np.clip(np.vectorize(tau_to_theta, otypes=[float])(tau), 0.1, 20.0)
    return pi, theta


def _objective(counts, x):
    with np.errstate(all="ignore"):
        return batch_loglik(counts, expit(x[..., :-1]), np.exp(x[..., -1]))


def _gradient(counts, x):
    """Gradient of the log-likelihood on the transformed scale."""
    pi = expit(x[..., :-1])
    th = np.exp(x[..., -1])
    with np.errstate(all="ignore"):
        d_pi, t = score_terms(counts, pi, th)
    grad = np.concatenate([d_pi * pi * (1.0 - pi), (t.sum(axis=-1) * th)[..., None]], axis=-1)
    bad = ~np.all(np.isfinite(grad), axis=-1)
    if bad.any():
        grad[bad] = _numeric_gradient(counts[bad], x[bad])
    return grad


def _numeric_gradient(counts, x, step=1e-6):
    grad = np.empty_like(x)
    for j in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[j] = step
        grad[:, j] = (_objective(counts, x + e) - _objective(counts, x - e)) / (2 * step)
    return grad


def _bounds(k):
    lo = np.full(k + 1, -LOGIT_BOX)
    hi = np.full(k + 1, LOGIT_BOX)
    lo[-1], hi[-1] = _LAM_LO, _LAM_HI
    return lo, hi


def optimize_batch(counts, x0, max_iter=MAX_ITER):
    """Projected Fisher scoring from starting points ``x0`` of shape ``(B, k+1)``.

    Returns the final points and per-row diagnostics.  Convergence means the
    projected gradient max-norm is at most ``GTOL`` and the predicted gain of
    a further step is at most ``FTOL`` relative to the objective; iteration
    continues while the step is longer than ``XTOL``.
    """
    counts = np.asarray(counts, dtype=float)
    x = np.array(x0, dtype=float)
    nb, dim = x.shape
    k = dim - 1
    lo, hi = _bounds(k)
    x = np.clip(x, lo, hi)
    m = counts.sum(axis=-1)

    f = _objective(counts, x)
    converged = np.zeros(nb, dtype=bool)
    grad_norm = np.full(nb, np.inf)
    iterations = np.zeros(nb, dtype=np.int64)
    active = np.arange(nb)

    for it in range(max_iter + 1):
        if active.size == 0:
            break
        xa, ca, fa = x[active], counts[active], f[active]
        g = _gradient(ca, xa)
        fixed = ((xa <= lo + 1e-12) & (g < 0)) | ((xa >= hi - 1e-12) & (g > 0))
        g = np.where(fixed, 0.0, g)
        gn = np.max(np.abs(g), axis=-1)
        grad_norm[active] = gn

        pi = expit(xa[:, :-1])
        th = np.exp(xa[:, -1])
        jac = pi * (1.0 - pi)
        with np.errstate(all="ignore"):
            diag, border, corner = info_entries(m[active], pi, th)
        diag = diag * jac**2
        border = border * jac * th[:, None]
        corner = corner * th**2
        fixed_eta, fixed_lam = fixed[:, :-1], fixed[:, -1]
        diag = np.where(fixed_eta, 1.0, diag)
        border = np.where(fixed_eta | fixed_lam[:, None], 0.0, border)
        corner = np.where(fixed_lam, 1.0, corner)
        with np.errstate(all="ignore"):
            step, schur = solve_arrowhead_arrays(diag, border, corner, g)
        broken = ~(np.all(np.isfinite(step), axis=-1) & (schur > 0) & np.all(diag > 0, axis=-1))
        if broken.any():
            # Scaled gradient ascent where the curvature model fails.
            scale = np.maximum(np.abs(np.concatenate([diag, corner[:, None]], axis=-1)), 1e-8)
            step[broken] = (g / scale)[broken]
        gain = np.sum(g * step, axis=-1)

        loose = (gn <= GTOL) & (0.5 * gain <= FTOL * np.maximum(1.0, np.abs(fa)))
        # Keep polishing until the scoring step itself is negligible, so
        # that equivalent problems (e.g. permuted groups) land on the same point.
        done = loose & (np.max(np.abs(step), axis=-1) <= XTOL)
        iterations[active] = it
        if it == max_iter:
            converged[active[loose]] = True
            break
        converged[active[done]] = True
        keep = ~done
        active, xa, fa, g, step = active[keep], xa[keep], fa[keep], g[keep], step[keep]
        if active.size == 0:
            break

        longest = np.max(np.abs(step), axis=-1)
        step *= np.minimum(1.0, MAX_STEP / np.maximum(longest, 1e-300))[:, None]
        alpha = np.ones(active.size)
        pending = np.arange(active.size)
        new_x = xa.copy()
        new_f = fa.copy()
        moved = np.zeros(active.size, dtype=bool)
        # Near the optimum the predicted gain is below the rounding noise of
        # the objective, so an Armijo test cannot tell; trust the full step.
        tiny = (0.5 * gain[keep] <= FTOL * np.maximum(1.0, np.abs(fa))) & ~broken[keep]
        if tiny.any():
            trial = np.clip(xa[tiny] + step[tiny], lo, hi)
            ft = _objective(counts[active[tiny]], trial)
            ok = np.isfinite(ft) & (ft >= fa[tiny] - 1e-9 * np.maximum(1.0, np.abs(fa[tiny])))
            acc = np.flatnonzero(tiny)[ok]
            new_x[acc] = trial[ok]
            new_f[acc] = ft[ok]
            moved[acc] = True
            pending = pending[~moved]
        for _ in range(MAX_HALVINGS):
            if pending.size == 0:
                break
            trial = np.clip(xa[pending] + alpha[pending, None] * step[pending], lo, hi)
            ft = _objective(counts[active[pending]], trial)
            rise = np.sum(g[pending] * (trial - xa[pending]), axis=-1)
            ok = np.isfinite(ft) & (ft >= fa[pending] + 1e-4 * rise)
            acc = pending[ok]
            new_x[acc] = trial[ok]
            new_f[acc] = ft[ok]
            moved[acc] = True
            pending = pending[~ok]
            alpha[pending] *= 0.5
        x[active] = new_x
        f[active] = new_f
        # Rows whose line search failed cannot improve further.
        stalled = ~moved
        if stalled.any():
            converged[active[stalled]] = grad_norm[active[stalled]] <= GTOL
            active = active[~stalled]

    at_bound = np.any((x <= lo + 1e-9) | (x >= hi - 1e-9), axis=-1)
    return x, f, converged, grad_norm, iterations, at_bound


def fit_batch(counts, hypothesis=Hypothesis.ALTERNATIVE, start_thetas=START_THETAS) -> BatchFit:
    """Fit every table in a ``(B, g, 3)`` batch under one hypothesis.

    Each table is started from the moment initializer and from the moment
    rates paired with each of ``start_thetas``; the converged start with the
    highest log-likelihood wins (lowest start index on ties).
    """
    counts = np.asarray(counts, dtype=float)
    if Hypothesis(hypothesis) is Hypothesis.NULL:
        counts = counts.sum(axis=-2, keepdims=True)
    nb, k, _ = counts.shape
    pi0, th0 = moment_start(counts)
    thetas = [th0] + [np.full(nb, t) for t in start_thetas]
    ns = len(thetas)
    x0 = np.concatenate(
        [np.concatenate([logit(pi0), np.log(t)[:, None]], axis=-1) for t in thetas]
    )
    rep_counts = np.concatenate([counts] * ns)
    x, f, conv, gnorm, iters, bound = optimize_batch(rep_counts, x0)

    f = f.reshape(ns, nb)
    conv = conv.reshape(ns, nb)
    score = np.where(conv, f, -np.inf)
    none = ~conv.any(axis=0)
    score[:, none] = np.where(np.isfinite(f[:, none]), f[:, none], -np.inf)
    best = np.argmax(score, axis=0)
    pick = best * nb + np.arange(nb)
    return BatchFit(
        pis=expit(x[pick, :-1]),
        theta=np.exp(x[pick, -1]),
        loglik=f.reshape(-1)[pick],
        converged=conv.reshape(-1)[pick],
        grad_norm=gnorm[pick],
        iterations=iters[pick],
        boundary=bound[pick],
    )


def _degenerate_groups(counts) -> list[int]:
    m = counts.sum(axis=1)
    return [i for i in range(len(m)) if counts[i, 0] == m[i] or counts[i, 2] == m[i]]


def fit(table, hypothesis=Hypothesis.ALTERNATIVE, *, strict: bool = False) -> FitResult:
    """Maximum-likelihood fit of one table.

    Groups whose subjects all sit in one extreme cell push their rate to the
    edge of the box; such fits carry ``boundary_warning``.  With
    ``strict=True`` they raise :class:`DegenerateTable` instead.

    Raises :class:`NoConvergence` if no start reaches the gradient tolerance.
    """
    hypothesis = Hypothesis(hypothesis)
    counts = as_counts(table)
    degenerate = _degenerate_groups(
        counts if hypothesis is Hypothesis.ALTERNATIVE else counts.sum(axis=0, keepdims=True)
    )
    if strict and degenerate:
        raise DegenerateTable(f"groups {degenerate} have all subjects in one extreme cell")
    res = fit_batch(counts[None], hypothesis)
    if not res.converged[0]:
        raise NoConvergence(
            f"no start reached gradient norm {GTOL:g} (best {res.grad_norm[0]:.3g})"
        )
    params = ModelParams(tuple(res.pis[0]), float(res.theta[0]), hypothesis)
    return FitResult(
        params_hat=params,
        loglik_hat=float(res.loglik[0]),
        converged=True,
        grad_norm=float(res.grad_norm[0]),
        iterations=int(res.iterations[0]),
        n_starts_used=1 + len(START_THETAS),
        boundary_warning=bool(res.boundary[0]) or bool(degenerate),
    )
