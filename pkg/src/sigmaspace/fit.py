"""SSIM degradation profiling and linearity-based transform selection.

For a transform ``phi`` the corpus is corrupted at the levels of
``phi_schedule(phi, ...)``; the mean SSIM per level is regressed on
``phi(sigma)`` and the coefficient of determination scores how evenly that
schedule spreads perceptual damage across its steps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as rngmod
from . import transforms as T
from .errors import DegenerateInput, EmptyCorpus
from .imaging import ImageBuffer
from .metrics import DEFAULT_SSIM, ReferenceStats, SsimParams, ssim_batch
from .schedule import SIGMA_MAX, SIGMA_MIN, phi_schedule
from .transforms import TransformSpec


@dataclass(frozen=True)
class DegradationProfile:
    spec: TransformSpec
    points: tuple  # ((sigma, phi, mean_ssim), ...), sigma ascending
    r_squared: float

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def phis(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def mean_ssim(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])


def r_squared(points) -> float:
    """Coefficient of determination of an ordinary least-squares line ``y ~ x``.

    When every ``y`` is identical the line fits exactly and 1.0 is returned.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DegenerateInput("r_squared needs at least two (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("r_squared got non-finite points")
    if np.ptp(x) == 0:
        raise DegenerateInput("all x values are equal")
    if np.ptp(y) == 0:
        return 1.0
    dx = x - x.mean()
    dy = y - y.mean()
    slope = (dx @ dy) / (dx @ dx)
    resid = dy - slope * dx
    ss_res = float(resid @ resid)
    ss_tot = float(dy @ dy)
    return 1.0 - ss_res / ss_tot


def _clean_to_diffusion(img: ImageBuffer) -> np.ndarray:
    return 2.0 * img.data - 1.0


def profile_sigmas(
    corpus: Sequence[ImageBuffer],
    sigmas: Sequence[float],
    draws_per_level: int,
    seed,
    ssim_params: SsimParams = DEFAULT_SSIM,
) -> np.ndarray:
    """Mean SSIM over ``corpus x draws`` at each noise level in ``sigmas``.

    The noise for (level ``i``, image ``j``, draw ``k``) comes from its own
    stream ``fork(seed, i, j, k)``, so the result does not depend on the
    transform that produced the grid or on evaluation order.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot profile an empty corpus")
    if draws_per_level < 1:
        raise ValueError("draws_per_level must be >= 1")
    sigmas = [float(s) for s in sigmas]
    n_lev = len(sigmas)
    scores = np.empty((n_lev, len(corpus), draws_per_level))
    for j, img in enumerate(corpus):
        ref = ReferenceStats(img, ssim_params)
        x0 = _clean_to_diffusion(img)
        batch = np.empty((n_lev * draws_per_level,) + x0.shape)
        for i, s in enumerate(sigmas):
            for k in range(draws_per_level):
                eps = rngmod.stream(seed, i, j, k).standard_normal(x0.shape)
                batch[i * draws_per_level + k] = x0 + s * eps
        np.clip((batch + 1.0) * 0.5, 0.0, 1.0, out=batch)
        scores[:, j, :] = ssim_batch(ref, batch).reshape(n_lev, draws_per_level)
    # fixed reduction order: images then draws, in index order
    return scores.reshape(n_lev, -1).mean(axis=1)


def profile(
    corpus: Sequence[ImageBuffer],
    spec: TransformSpec,
    n_levels: int = 50,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
    draws_per_level: int = 2,
    seed=0,
    ssim_params: SsimParams = DEFAULT_SSIM,
) -> DegradationProfile:
    """Degradation curve of ``corpus`` along the ``spec``-induced schedule."""
    if len(corpus) == 0:
        raise EmptyCorpus("cannot profile an empty corpus")
    if n_levels < 3:
        raise ValueError("n_levels must be >= 3")
    sched = phi_schedule(spec, sigma_min, sigma_max, n_levels)
    sig = sched.sigmas
    phis = np.asarray(T.apply(spec, sig))
    means = profile_sigmas(corpus, sig, draws_per_level, seed, ssim_params)
    pts = tuple((float(s), float(p), float(m)) for s, p, m in zip(sig, phis, means))
    r2 = r_squared(np.column_stack([phis, means]))
    return DegradationProfile(spec, pts, r2)


def select_phi(
    corpus: Sequence[ImageBuffer],
    candidates: Sequence[TransformSpec] | None = None,
    n_levels: int = 50,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
    draws: int = 2,
    seed=0,
    ssim_params: SsimParams = DEFAULT_SSIM,
    return_profiles: bool = False,
):
    """Rank candidates by R² of their degradation curves, best first.

    Ties keep the candidates' input order. With ``return_profiles=True`` a
    second list with the per-candidate :class:`DegradationProfile` (input
    order) is returned as well.
    """
    if candidates is None:
        candidates = T.candidate_set()
    profiles = [
        profile(corpus, spec, n_levels, sigma_min, sigma_max, draws,
                rngmod.fork(seed, "select-phi", str(spec)), ssim_params)
        for spec in candidates
    ]
    order = sorted(range(len(profiles)), key=lambda i: (-profiles[i].r_squared, i))
    ranking = [(profiles[i].spec, profiles[i].r_squared) for i in order]
    if return_profiles:
        return ranking, profiles
    return ranking


def corruption_curve(
    image: ImageBuffer,
    kind: str,
    n_steps: int = 25,
    seed=0,
    spec: TransformSpec = T.PHI_STAR,
    rho: float = 7.0,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
    ssim_params: SsimParams = DEFAULT_SSIM,
):
    """Forward corruption of one image along a ``kind`` schedule, mildest level first.

    ``kind`` is ``"phi"`` (levels equidistant in ``spec``-space), ``"edm"``
    (rho schedule) or ``"ddpm"`` (variance-preserving cosine process, scored
    on ``sqrt(abar) x + sqrt(1 - abar) eps`` rather than an equivalent sigma).
    Returns ``(levels, ssims, noisy_images)`` where ``levels`` holds sigma, or
    the equivalent noise-to-signal ratio for ``ddpm``. Step ``t`` uses noise
    from ``fork(seed, "curve", t)``.
    """
    from .imaging import from_diffusion
    from .metrics import ssim
    from .schedule import corrupt, corrupt_ddpm, ddpm_cosine_alpha_bar, ddpm_cosine_equivalent_sigmas, edm_rho_schedule

    x0 = _clean_to_diffusion(image)
    if kind == "ddpm":
        abar = ddpm_cosine_alpha_bar(n_steps)
        levels = ddpm_cosine_equivalent_sigmas(n_steps).sigmas
        noisy = [corrupt_ddpm(x0, float(a), rngmod.stream(seed, "curve", t)) for t, a in enumerate(abar)]
    else:
        if kind == "phi":
            levels = phi_schedule(spec, sigma_min, sigma_max, n_steps).sigmas
        elif kind == "edm":
            levels = edm_rho_schedule(rho, sigma_min, sigma_max, n_steps).ascending().sigmas
        else:
            raise ValueError(f"unknown schedule kind {kind!r}; expected phi, edm or ddpm")
        noisy = [corrupt(x0, float(s), rngmod.stream(seed, "curve", t)) for t, s in enumerate(levels)]
    images = [from_diffusion(x) for x in noisy]
    scores = np.array([ssim(image, im, ssim_params) for im in images])
    return np.asarray(levels, dtype=np.float64), scores, images
