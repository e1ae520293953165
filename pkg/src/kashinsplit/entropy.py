"""Greedy packing and covering estimates with ratio diagnostics.

Greedy scans give a lower bound on the maximal separated-set size and an
upper bound on the covering number; the sandwich report chains the two.
The two `packing_ratio_*` diagnostics pack the mixed-norm ball in the
max-pairing seminorm and in the data ellipsoid seminorm and normalize
eps * sqrt(log count) by the matching product of constants, which should
stay bounded as the scale varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .errors import ConfigError
from .metrics import MixSpace, VectorSet, pairing_matrix, sample_mix_ball
from .systems import OrthonormalSystem


def sqrt_log(count: int) -> float:
    """sqrt(log count), with the count-1 case pinned to 0."""
    return 0.0 if count <= 1 else math.sqrt(math.log(count))


@dataclass
class PackingResult:
    eps: float
    centers: list
    count: int
    metric_id: str
    rejections: int = 0
    exhausted: bool = False  # the sampler ran dry (finite set scanned fully)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "count": self.count, "metric_id": self.metric_id,
                "rejections": self.rejections, "exhausted": self.exhausted}


def greedy_packing(sampler, metric, eps: float, budget: int = 10_000,
                   metric_id: str = "", max_samples: int | None = None) -> PackingResult:
    """Greedy eps-separated subset of the sampled points.

    Accepts a candidate when it is at least eps away from every accepted
    center; stops after `budget` consecutive rejections, after `max_samples`
    candidates, or when a finite sampler is exhausted. The count is a lower
    bound on the maximal packing.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if budget < 1:
        raise ConfigError("budget must be at least 1")
    centers: list = []
    consecutive = 0
    seen = 0
    exhausted = True
    for x in sampler:
        seen += 1
        if all(metric(x, c) >= eps for c in centers):
            centers.append(x)
            consecutive = 0
        else:
            consecutive += 1
            if consecutive >= budget:
                exhausted = False
                break
        if max_samples is not None and seen >= max_samples:
            exhausted = False
            break
    return PackingResult(eps, centers, len(centers), metric_id, consecutive, exhausted)


def greedy_cover(sampler, metric, eps: float, budget: int = 10_000) -> PackingResult:
    """Greedy cover: a point is covered when within eps of an existing center."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    centers: list = []
    consecutive = 0
    exhausted = True
    for x in sampler:
        if all(metric(x, c) > eps for c in centers):
            centers.append(x)
            consecutive = 0
        else:
            consecutive += 1
            if consecutive >= budget:
                exhausted = False
                break
    return PackingResult(eps, centers, len(centers), "cover", consecutive, exhausted)


@dataclass
class SandwichReport:
    eps: float
    cover_count: int
    packing_count: int
    packing_half_count: int  # an eps/2 packing is an eps/2 cover
    chain_ok: bool

    def to_dict(self) -> dict:
        return {"eps": self.eps, "cover_count": self.cover_count,
                "packing_count": self.packing_count,
                "packing_half_count": self.packing_half_count,
                "chain_ok": self.chain_ok}


def packing_sandwich(points, metric, eps: float) -> SandwichReport:
    """Empirical chain cover(eps) <= packing(eps) <= packing(eps/2) on a finite set."""
    pts = list(points)
    cover = greedy_cover(pts, metric, eps, budget=len(pts) + 1)
    pack = greedy_packing(pts, metric, eps, budget=len(pts) + 1)
    half = greedy_packing(pts, metric, eps / 2.0, budget=len(pts) + 1)
    ok = cover.count <= pack.count <= half.count
    return SandwichReport(eps, cover.count, pack.count, half.count, ok)


def covering_volume_bound(n: int, t: float) -> float:
    """(1 + 2/t)^n, the volumetric cap on covering a ball by t-scaled copies."""
    if t <= 0:
        raise ConfigError("t must be positive")
    return (1.0 + 2.0 / t) ** n


def gaussian_width(support_fn, dim: int, trials: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo E sup_{z in T} <G, z> given the support function of T.

    Returns (mean, standard error). `support_fn` maps a Gaussian draw to the
    supremum of the pairing over the set (exact for analytic sets, a
    heuristic maximum for sampled ones).
    """
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    vals = np.empty(trials)
    for t in range(trials):
        g = substream(seed, 6, t).standard_normal(dim)
        vals[t] = support_fn(g)
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()), se


def finite_set_support(points: np.ndarray):
    """Support function of a finite point set (exact maximum of the pairing)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    def fn(g):
        return float((pts @ g).max())

    return fn


def l2_ball_support(radius: float = 1.0):
    def fn(g):
        return radius * float(np.linalg.norm(g))

    return fn


def type2_ratio(vectors, norm_fn, trials: int, seed: int = 0) -> tuple[float, float]:
    """E |sum_i g_i x_i| / (sum_i |x_i|^2)^(1/2), a lower estimate of the type-2 constant.

    Returns (ratio, standard error of the ratio).
    """
    vecs = [np.asarray(v) for v in vectors]
    if not vecs:
        raise ConfigError("need at least one vector")
    denom = math.sqrt(sum(norm_fn(v) ** 2 for v in vecs))
    stacked = np.stack(vecs)
    vals = np.empty(trials)
    for t in range(trials):
        g = substream(seed, 7, t).standard_normal(len(vecs))
        vals[t] = norm_fn(np.tensordot(g, stacked, axes=1))
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()) / denom, se / denom


@dataclass
class PackingRatioReport:
    eps: float
    count: int
    numerator: float  # eps * sqrt(log count)
    denominator: float
    metric_id: str

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator if self.denominator > 0 else math.inf

    def to_dict(self) -> dict:
        return {"eps": self.eps, "count": self.count, "numerator": self.numerator,
                "denominator": self.denominator, "ratio": self.ratio,
                "metric_id": self.metric_id}


def _pack_ball_features(sys, space, eps, feature_fn, dist_fn, budget, max_samples, seed,
                        chunk=128):
    """Greedy packing of mixed-ball points described by feature vectors.

    `feature_fn` maps a block of coefficient rows to feature rows;
    `dist_fn(F, f)` gives distances of one candidate to all kept features,
    vectorized. Returns (count, consecutive-rejection budget left flag).
    """
    buf: np.ndarray | None = None
    nk = 0
    consecutive = 0
    seen = 0
    block = 0
    while seen < max_samples:
        rng = substream(seed, 8, block)
        block += 1
        coeffs = sample_mix_ball(sys, space, chunk, rng)
        for f in feature_fn(coeffs):
            seen += 1
            dmin = float(dist_fn(buf[:nk], f).min()) if nk else math.inf
            if dmin >= eps:
                if buf is None:
                    buf = np.empty((256,) + f.shape, dtype=f.dtype)
                elif nk == buf.shape[0]:
                    buf = np.concatenate([buf, np.empty_like(buf)])
                buf[nk] = f
                nk += 1
                consecutive = 0
            else:
                consecutive += 1
                if consecutive >= budget:
                    return nk, True
            if seen >= max_samples:
                break
    return nk, False


def packing_ratio_maxpair(
    xs: VectorSet, space: MixSpace, sys: OrthonormalSystem,
    eps: float, budget: int = 2000, seed: int = 0, max_samples: int = 4000,
) -> PackingRatioReport:
    """Pack the mixed ball in the max-pairing seminorm; normalized log-ratio.

    The reference scale is lambda^2 * T2 * L * sqrt(log m); the reported
    ratio should stay bounded as eps and m vary.
    """
    if xs.m < 2:
        raise ConfigError("need at least two vectors (log m > 0)")
    C = pairing_matrix(xs, sys)
    count, _ = _pack_ball_features(
        sys, space, eps,
        feature_fn=lambda coeffs: coeffs @ C.T,
        dist_fn=lambda F, f: np.abs(F - f).max(axis=1),
        budget=budget, max_samples=max_samples, seed=seed,
    )
    denom = (space.convexity_constant**2 * space.dual_type2 * xs.bound
             * math.sqrt(math.log(xs.m)))
    return PackingRatioReport(eps, count, eps * sqrt_log(count), denom, "maxpair")


def packing_ratio_ellipsoid(
    xs: VectorSet, u, space: MixSpace, sys: OrthonormalSystem,
    eps: float, budget: int = 2000, seed: int = 0, max_samples: int = 4000,
) -> PackingRatioReport:
    """Pack the mixed ball in the ellipsoid seminorm weighted by <X_l, u>.

    Requires sum_l |<X_l, u>|^2 <= 1. Reference scale is T2 * L.
    """
    alpha2 = np.abs(xs.pair(u)) ** 2
    if float(alpha2.sum()) > 1.0 + 1e-9:
        raise ConfigError("u must satisfy sum of squared pairings <= 1")
    C = pairing_matrix(xs, sys)
    count, _ = _pack_ball_features(
        sys, space, eps,
        feature_fn=lambda coeffs: coeffs @ C.T,
        dist_fn=lambda F, f: np.sqrt((np.abs(F - f) ** 2 * alpha2).sum(axis=1)),
        budget=budget, max_samples=max_samples, seed=seed,
    )
    denom = space.dual_type2 * xs.bound
    return PackingRatioReport(eps, count, eps * sqrt_log(count), denom, "ellipsoid")


def packing_ratio_l2(
    xs: VectorSet, space: MixSpace, sys: OrthonormalSystem,
    eps: float, budget: int = 2000, seed: int = 0, max_samples: int = 4000,
) -> PackingRatioReport:
    """Pack the mixed ball in the plain L2 metric; numerator reported unnormalized."""
    scale = 1.0 / math.sqrt(sys.m0)
    count, _ = _pack_ball_features(
        sys, space, eps,
        feature_fn=lambda coeffs: coeffs @ sys.values * scale,
        dist_fn=lambda F, f: np.linalg.norm(F - f, axis=1),
        budget=budget, max_samples=max_samples, seed=seed,
    )
    return PackingRatioReport(eps, count, eps * sqrt_log(count), 1.0, "l2")
