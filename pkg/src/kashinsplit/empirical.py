"""Monte Carlo estimation of sign-process suprema and moment deviations.

`bernoulli_sup` estimates E sup over the mixed-norm ball of
|sum_j eps_j |<X_j, y>|^2| by drawing sign vectors and maximizing the
resulting quadratic form heuristically; the estimate is a lower bound of
the truth and every report says so. `bernoulli_sup_bound` assembles the
matching product bound (with unit calibration), and `moment_deviation`
does the same for the empirical second-moment deviation of random draws
from an orthonormal family.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map, worker_count
from ._rng import child_seed, substream
from .errors import ConfigError
from .metrics import (
    MixSpace,
    VectorSet,
    max_abs_quad_on_ball,
    pairing_matrix,
)
from .systems import OrthonormalSystem

EXHAUSTIVE_SIGN_CAP = 16


@dataclass
class DeviationReport:
    """Estimate of a process supremum next to its assembled product bound.

    The estimate is a lower bound (heuristic inner maximization); the bound
    side uses the declared dual-norm bound and the cached L2-ball quadratic
    supremum, with the calibration constant recorded in `components`.
    """

    lhs_estimate: float
    lhs_stderr: float
    rhs: float
    components: dict
    A: float | None = None
    sigma: float | None = None
    trials: int = 0
    nonconverged: int = 0
    semantics: str = "lower-estimate"
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def ratio(self) -> float:
        return self.lhs_estimate / self.rhs if self.rhs > 0 else math.inf

    def to_dict(self) -> dict:
        out = {
            "lhs_estimate": self.lhs_estimate,
            "lhs_stderr": self.lhs_stderr,
            "rhs": self.rhs,
            "components": dict(self.components),
            "ratio": self.ratio,
            "trials": self.trials,
            "nonconverged": self.nonconverged,
            "semantics": self.semantics,
        }
        if self.A is not None:
            out["A"] = self.A
        if self.sigma is not None:
            out["sigma"] = self.sigma
        return out


def bernoulli_sup_bound(xs: VectorSet, space: MixSpace, c_cal: float = 1.0):
    """Product bound lambda^4 * T2 * sqrt(log m) * L * sqrt(M) with calibration c_cal.

    M is the L2-unit-ball quadratic supremum cached on the vector set; it is
    a proxy for the mixed-ball supremum and is flagged as such in the
    components.
    """
    if xs.m < 2:
        raise ConfigError("the bound needs at least two vectors (log m > 0)")
    components = {
        "c_cal": c_cal,
        "convexity4": space.convexity_constant**4,
        "dual_type2": space.dual_type2,
        "sqrt_log_m": math.sqrt(math.log(xs.m)),
        "dual_bound": xs.bound,
        "sqrt_quad_sup": math.sqrt(xs.l2_quad_sup),
        "quad_sup_kind": "l2_unit_ball_eigenvalue",
    }
    rhs = (
        c_cal
        * components["convexity4"]
        * components["dual_type2"]
        * components["sqrt_log_m"]
        * components["dual_bound"]
        * components["sqrt_quad_sup"]
    )
    return rhs, components


def _sign_vectors(m: int, trials: int, seed: int, exhaustive: bool):
    if exhaustive:
        if m > EXHAUSTIVE_SIGN_CAP:
            raise ConfigError(f"exhaustive signs limited to m <= {EXHAUSTIVE_SIGN_CAP}")
        # the objective only sees |sum eps_j q_j|, so each sign vector and its
        # negation contribute equally; enumerating the half with leading +1
        # covers the full expectation
        return [np.array((1.0,) + s, dtype=float)
                for s in itertools.product((-1.0, 1.0), repeat=m - 1)]
    return [
        substream(seed, 1, t).integers(0, 2, size=m) * 2.0 - 1.0
        for t in range(trials)
    ]


def sign_trial_value(C: np.ndarray, eps: np.ndarray, sys, space, ball="mix",
                     support=None, restarts=8, iters=150, seed=0):
    """One sign draw: heuristic sup of |sum_j eps_j |(C a)_j|^2| over the ball.

    Exactly invariant under eps -> -eps (both quadratic signs are optimized
    with the same starts).
    """
    A = C.conj().T @ (eps[:, None] * C)
    res = max_abs_quad_on_ball(A, sys, space, support=support, ball=ball,
                               restarts=restarts, iters=iters, seed=seed)
    return res.value, res.converged


def bernoulli_sup(
    xs: VectorSet,
    space: MixSpace,
    sys: OrthonormalSystem,
    sign_trials: int = 64,
    restarts: int = 8,
    iters: int = 150,
    seed: int = 0,
    exhaustive: bool = False,
    ball: str = "mix",
    support=None,
    workers: int | None = None,
    c_cal: float = 1.0,
) -> DeviationReport:
    """Estimate E sup over the ball of |sum_j eps_j |<X_j, y>|^2|.

    Outer Monte Carlo over independent uniform sign vectors (or full
    enumeration with `exhaustive`); the inner maximization is projected
    ascent on the ball from multiple starts, so each trial value is a lower
    estimate. Non-convergent inner runs are counted and kept at their best
    value. Invariant under a global sign flip by construction (both signs of
    the quadratic are optimized).
    """
    if sign_trials < 1 or restarts < 1:
        raise ConfigError("sign_trials and restarts must be positive")
    C = pairing_matrix(xs, sys, support)
    signs = _sign_vectors(xs.m, sign_trials, seed, exhaustive)

    def one_trial(item):
        t, eps = item
        return sign_trial_value(C, eps, sys, space, ball=ball, support=support,
                                restarts=restarts, iters=iters,
                                seed=child_seed(seed, 2, t))

    pairs = ordered_map(one_trial, enumerate(signs), worker_count(workers))
    values = np.array([v for v, _ in pairs])
    nonconv = sum(0 if ok else 1 for _, ok in pairs)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    try:
        rhs, comps = bernoulli_sup_bound(xs, space, c_cal)
    except ConfigError:
        rhs, comps = math.inf, {"note": "bound undefined for m < 2"}
    return DeviationReport(
        lhs_estimate=mean,
        lhs_stderr=stderr,
        rhs=rhs,
        components=comps,
        trials=len(signs),
        nonconverged=nonconv,
        values=values,
    )


def moment_deviation(
    sys: OrthonormalSystem,
    k: int,
    space: MixSpace,
    trials: int = 200,
    restarts: int = 6,
    iters: int = 150,
    seed: int = 0,
    picks=None,
    support=None,
    ball: str = "mix",
    workers: int | None = None,
    c_cal: float = 1.0,
) -> DeviationReport:
    """Estimate E sup over the ball of |(1/k) sum_j |<X_j, y>|^2 - E |<X, y>|^2|.

    X is uniform over the family, so the exact second moment of a pairing is
    the full-family quadratic mean. Fixed designs can be passed via `picks`
    (then `trials` is ignored). The assembled bound is A^2 + sigma * A with
    A = c_cal * lambda^4 * T2 * sqrt(log k / k) * L and the certified upper
    bound sigma = sqrt(2) * rho / sqrt(n).
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    full = VectorSet.from_system(sys)
    C_full = pairing_matrix(full, sys, support)  # (n, d)
    mean_mat = (C_full.conj().T @ C_full) / sys.n

    if picks is not None:
        picks_list = [np.asarray(picks, dtype=int)]
    else:
        picks_list = [substream(seed, 3, t).integers(0, sys.n, size=k) for t in range(trials)]

    def one_trial(item):
        t, pk = item
        Ck = C_full[pk]
        D = (Ck.conj().T @ Ck) / k - mean_mat
        res = max_abs_quad_on_ball(
            D, sys, space, support=support, ball=ball,
            restarts=restarts, iters=iters, seed=child_seed(seed, 4, t),
        )
        return res.value, res.converged

    pairs = ordered_map(one_trial, enumerate(picks_list), worker_count(workers))
    values = np.array([v for v, _ in pairs])
    nonconv = sum(0 if ok else 1 for _, ok in pairs)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0

    A = (
        c_cal
        * space.convexity_constant**4
        * space.dual_type2
        * math.sqrt(math.log(max(k, 2)) / k)
        * sys.linf_bound
    )
    sigma = math.sqrt(2.0) * space.rho / math.sqrt(sys.n)
    bound = A * A + sigma * A
    comps = {
        "c_cal": c_cal,
        "convexity4": space.convexity_constant**4,
        "dual_type2": space.dual_type2,
        "sqrt_log_k_over_k": math.sqrt(math.log(max(k, 2)) / k),
        "dual_bound": sys.linf_bound,
        "sigma_kind": "upper_bound_sqrt2_rho_over_sqrt_n",
    }
    return DeviationReport(
        lhs_estimate=mean,
        lhs_stderr=stderr,
        rhs=bound,
        components=comps,
        A=A,
        sigma=sigma,
        trials=len(picks_list),
        nonconverged=nonconv,
        values=values,
    )


@dataclass
class ScalingRow:
    m: int
    lhs: float
    stderr: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    def to_dict(self) -> dict:
        return {"m": self.m, "lhs": self.lhs, "stderr": self.stderr,
                "rhs": self.rhs, "ratio": self.ratio}


@dataclass
class ScalingStudy:
    rows: list[ScalingRow]
    slope: float  # least-squares fit of lhs against sqrt(M log m), through origin
    residuals: list[float]
    loglog_slope: float  # slope of log(ratio) against log(m)
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "slope": self.slope,
            "residuals": self.residuals,
            "loglog_slope": self.loglog_slope,
            "degenerate": self.degenerate,
        }


def scaling_study(
    systems: list[OrthonormalSystem],
    p: float,
    rho,
    sign_trials: int = 48,
    restarts: int = 6,
    iters: int = 150,
    seed: int = 0,
    workers: int | None = None,
) -> ScalingStudy:
    """Sweep full-family sign-process estimates against the product bound.

    `rho` may be a constant or a callable of the family size. Fits lhs
    against sqrt(M log m) through the origin and reports the log-log trend
    of the ratio column; a single-row grid is flagged degenerate.
    """
    if not systems:
        raise ConfigError("the grid of systems must be nonempty")
    rows = []
    quad_sups = []
    for j, sys in enumerate(systems):
        xs = VectorSet.from_system(sys)
        r = rho(sys.n) if callable(rho) else float(rho)
        space = MixSpace(p, r)
        rep = bernoulli_sup(
            xs, space, sys, sign_trials=sign_trials, restarts=restarts,
            iters=iters, seed=child_seed(seed, 5, j), workers=workers,
        )
        rows.append(ScalingRow(xs.m, rep.lhs_estimate, rep.lhs_stderr, rep.rhs))
        quad_sups.append(xs.l2_quad_sup)

    degenerate = len(rows) < 2
    x = np.array([math.sqrt(q * math.log(r.m)) for q, r in zip(quad_sups, rows)])
    y = np.array([r.lhs for r in rows])
    if degenerate or not np.any(x):
        slope, residuals = math.nan, [math.nan] * len(rows)
        loglog = math.nan
    else:
        slope = float((x * y).sum() / (x * x).sum())
        residuals = [float(v) for v in (y - slope * x)]
        lr = np.log(np.array([r.ratio for r in rows]))
        lm = np.log(np.array([r.m for r in rows], dtype=float))
        lm_c = lm - lm.mean()
        loglog = float((lm_c * (lr - lr.mean())).sum() / (lm_c * lm_c).sum())
    return ScalingStudy(rows, slope, residuals, loglog, degenerate)
