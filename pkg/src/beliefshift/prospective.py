"""Expected learning from a study that has not happened yet.

A decision maker blends a consensus prior with a pioneer prior, imagines
the data a proposed design would produce, and asks how far beliefs are
expected to move. The Monte Carlo engine draws each replicate from its
own counter-based RNG stream keyed by (seed, replicate index), so runs
are deterministic and parallel execution would be bit-identical to a
serial one; the all-normal identity case has an exact closed form to
check the machinery against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy import special

from .distributions import (
    Distribution1D,
    MixtureDist,
    NormalDist,
    norm_logpdf,
)
from .metrics import t_nodes, w2_normal, wp_quantile
from .updating import SamplingModel, Study, update_conjugate, update_grid, update_mixture

__all__ = [
    "PioneerSetup",
    "ExpectedLearning",
    "CurvePoint",
    "decision_maker_prior",
    "expected_learning_mc",
    "expected_learning_bound_sq",
    "weight_sweep",
    "curve_points_to_csv",
]

DEFAULT_REPLICATES = 10_000
DEFAULT_W2_NODES = 512


@dataclass(frozen=True)
class PioneerSetup:
    """Consensus prior, pioneer prior, pioneer weight, and the design."""

    consensus: Distribution1D
    pioneer: Distribution1D
    weight: float
    model: SamplingModel

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", float(self.weight))
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("pioneer weight must lie in [0, 1]")


@dataclass(frozen=True)
class ExpectedLearning:
    """Monte Carlo estimate of expected W2 with its sampling uncertainty."""

    estimate: float
    mc_std_error: float
    second_moment: float
    second_moment_std_error: float
    replicates: int
    seed: int

    def __post_init__(self) -> None:
        for name in ("estimate", "mc_std_error", "second_moment",
                     "second_moment_std_error"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        # Jensen: E[W2] cannot exceed sqrt(E[W2^2]) beyond MC noise.
        ceiling = math.sqrt(self.second_moment) + 3.0 * self.mc_std_error + 1e-12
        if self.estimate > ceiling:
            raise ValueError("estimate exceeds sqrt(second_moment) beyond MC noise")


@dataclass(frozen=True)
class CurvePoint:
    """One (weight, sample size) cell of an expected-learning sweep."""

    w: float
    n: int
    expected_learning: float
    mc_std_error: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        if not (math.isfinite(self.expected_learning) and math.isfinite(self.mc_std_error)):
            raise ValueError("curve point values must be finite")


def decision_maker_prior(setup: PioneerSetup) -> Distribution1D:
    """w * pioneer + (1 - w) * consensus; degenerate weights collapse."""
    if setup.weight == 0.0:
        return setup.consensus
    if setup.weight == 1.0:
        return setup.pioneer
    return MixtureDist((
        (setup.weight, setup.pioneer),
        (1.0 - setup.weight, setup.consensus),
    ))


def expected_learning_bound_sq(sigma_prior: float, sigma: float, n: int) -> float:
    """Closed-form E[W2^2] when predictive, update, and reference priors all
    equal Normal(mu, sigma_prior) and the design observes n draws of noise
    sd sigma. n = 0 means no data and returns 0; the n -> inf limit is
    2 * sigma_prior^2."""
    sigma_prior = float(sigma_prior)
    sigma = float(sigma)
    if sigma_prior <= 0.0 or sigma <= 0.0:
        raise ValueError("scale parameters must be positive")
    n = int(n)
    if n < 0:
        raise ValueError("sample size cannot be negative")
    if n == 0:
        return 0.0
    shrink = sigma**2 / (n * sigma_prior**2)
    mean_term = sigma_prior**2 / (shrink + 1.0)
    scale_term = sigma_prior**2 * (1.0 - 1.0 / math.sqrt(1.0 + sigma_prior**2 * n / sigma**2)) ** 2
    return mean_term + scale_term


def _replicate_uniforms(seed: int, replicates: int, cols: int) -> np.ndarray:
    """One Philox stream per replicate, keyed (seed, index); fixed column layout."""
    key_hi = np.uint64(int(seed) % (1 << 64))
    out = np.empty((replicates, cols))
    for i in range(replicates):
        key = np.array([key_hi, i], dtype=np.uint64)
        out[i] = Generator(Philox(key=key)).random(cols)
    # Quantile transforms need the open interval.
    np.clip(out, 1e-16, 1.0 - 1e-16, out=out)
    return out


def _theta_from_uniforms(predictive_prior: Distribution1D, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-cdf draws of theta. Mixtures burn uniform 0 on the component
    pick and uniform 1 on the component quantile; other priors use uniform 0."""
    if isinstance(predictive_prior, MixtureDist):
        cum_w = np.cumsum(predictive_prior.weights())
        picks = np.searchsorted(cum_w, uniforms[:, 0], side="right")
        picks = np.minimum(picks, len(predictive_prior.components) - 1)
        theta = np.empty(uniforms.shape[0])
        for k, (_, comp) in enumerate(predictive_prior.components):
            mask = picks == k
            if mask.any():
                theta[mask] = comp.quantile(uniforms[mask, 1])
        return theta
    return np.asarray(predictive_prior.quantile(uniforms[:, 0]), dtype=float)


def _update_any(prior: Distribution1D, study: Study) -> Distribution1D:
    if isinstance(prior, NormalDist):
        return update_conjugate(prior, study)
    if isinstance(prior, MixtureDist):
        return update_mixture(prior, study)
    return update_grid(prior, study)


def _w2_normal_update(update_prior: NormalDist, reference: Distribution1D,
                      ybar: np.ndarray, se: float, nodes: int) -> np.ndarray:
    prior_prec = 1.0 / update_prior.sigma**2
    data_prec = 1.0 / se**2
    post_var = 1.0 / (prior_prec + data_prec)
    post_sd = math.sqrt(post_var)
    post_mu = post_var * (update_prior.mu * prior_prec + ybar * data_prec)
    if isinstance(reference, NormalDist):
        return np.hypot(post_mu - reference.mu, post_sd - reference.sigma)
    t, wq = t_nodes(nodes)
    q_ref = np.asarray(reference.quantile(t), dtype=float)
    q_post = post_mu[:, None] + post_sd * special.ndtri(t)[None, :]
    return np.sqrt((q_post - q_ref[None, :]) ** 2 @ wq)


def _w2_mixture_update(update_prior: MixtureDist, reference: Distribution1D,
                       ybar: np.ndarray, se: float, nodes: int) -> np.ndarray:
    """Batched W2 for a mixture-of-normals update prior.

    Per replicate the posterior is again a normal mixture whose component
    sds are replicate-independent; quantiles come from a shared-cdf table
    inverted by interpolation and polished with Newton sweeps at the same
    t-nodes the scalar quantile route uses.
    """
    weights = update_prior.weights()
    mus = np.array([comp.mu for _, comp in update_prior.components])
    sds = np.array([comp.sigma for _, comp in update_prior.components])
    post_var = 1.0 / (1.0 / sds**2 + 1.0 / se**2)
    post_sd = np.sqrt(post_var)
    post_mu = post_var * (mus / sds**2 + ybar[:, None] / se**2)
    log_w = np.log(weights) + norm_logpdf(ybar[:, None], mus, np.hypot(sds, se))
    log_w -= log_w.max(axis=1, keepdims=True)
    post_w = np.exp(log_w)
    post_w /= post_w.sum(axis=1, keepdims=True)

    t, wq = t_nodes(nodes)
    q_ref = np.asarray(reference.quantile(t), dtype=float)
    grid_size = max(2048, 4 * nodes)
    x_lo = min(float((post_mu - 8.0 * post_sd).min()), float(q_ref[0]))
    x_hi = max(float((post_mu + 8.0 * post_sd).max()), float(q_ref[-1]))
    x_grid = np.linspace(x_lo, x_hi, grid_size)
    cell = (x_hi - x_lo) / (grid_size - 1)

    n_rep = ybar.size
    n_comp = weights.size
    w2_sq = np.empty(n_rep)
    chunk = 512
    for start in range(0, n_rep, chunk):
        stop = min(start + chunk, n_rep)
        mu_c = post_mu[start:stop]
        w_c = post_w[start:stop]
        rows = stop - start
        cdf = np.zeros((rows, grid_size))
        for k in range(n_comp):
            cdf += w_c[:, k:k + 1] * special.ndtr((x_grid[None, :] - mu_c[:, k:k + 1]) / post_sd[k])
        q = np.empty((rows, t.size))
        for r in range(rows):
            q[r] = np.interp(t, cdf[r], x_grid)
        for _ in range(3):
            f_cdf = np.zeros_like(q)
            f_pdf = np.zeros_like(q)
            for k in range(n_comp):
                z = (q - mu_c[:, k:k + 1]) / post_sd[k]
                f_cdf += w_c[:, k:k + 1] * special.ndtr(z)
                f_pdf += w_c[:, k:k + 1] * np.exp(-0.5 * z * z) / (post_sd[k] * math.sqrt(2.0 * math.pi))
            step = (f_cdf - t[None, :]) / np.maximum(f_pdf, 1e-300)
            q -= np.clip(step, -4.0 * cell, 4.0 * cell)
        w2_sq[start:stop] = (q - q_ref[None, :]) ** 2 @ wq
    return np.sqrt(w2_sq)


def _batched_w2(update_prior: Distribution1D, reference: Distribution1D,
                ybar: np.ndarray, se: float, nodes: int) -> np.ndarray:
    if isinstance(update_prior, NormalDist):
        return _w2_normal_update(update_prior, reference, ybar, se, nodes)
    if isinstance(update_prior, MixtureDist) and all(
        isinstance(comp, NormalDist) for _, comp in update_prior.components
    ):
        return _w2_mixture_update(update_prior, reference, ybar, se, nodes)
    # General fallback: exact per-replicate updates, no silent skipping.
    out = np.empty(ybar.size)
    for i, y in enumerate(ybar):
        post = _update_any(update_prior, Study(float(y), se))
        if isinstance(reference, NormalDist) and isinstance(post, NormalDist):
            out[i] = w2_normal(reference, post)
        else:
            out[i] = wp_quantile(reference, post, p=2.0, nodes=nodes)
    return out


def expected_learning_mc(predictive_prior: Distribution1D,
                         update_prior: Distribution1D,
                         reference_prior: Distribution1D,
                         model: SamplingModel,
                         replicates: int = DEFAULT_REPLICATES,
                         seed: int = 0,
                         w2_nodes: int = DEFAULT_W2_NODES) -> ExpectedLearning:
    """Monte Carlo E[W2(reference, posterior)] over imagined study outcomes.

    Each replicate draws theta from ``predictive_prior``, simulates the
    sample mean ybar ~ Normal(theta, sigma/sqrt(n)), updates
    ``update_prior`` by Study(ybar, sigma/sqrt(n)), and measures W2 from
    ``reference_prior`` to that posterior. Deterministic given the seed;
    a replicate failure aborts the run.
    """
    replicates = int(replicates)
    if replicates < 100:
        raise ValueError("expected_learning_mc needs at least 100 replicates")
    se = model.std_error()
    cols = 3 if isinstance(predictive_prior, MixtureDist) else 2
    uniforms = _replicate_uniforms(seed, replicates, cols)
    theta = _theta_from_uniforms(predictive_prior, uniforms)
    ybar = theta + se * special.ndtri(uniforms[:, -1])
    w2 = _batched_w2(update_prior, reference_prior, ybar, se, w2_nodes)
    root_n = math.sqrt(replicates)
    w2_sq = w2**2
    return ExpectedLearning(
        estimate=float(w2.mean()),
        mc_std_error=float(w2.std(ddof=1)) / root_n,
        second_moment=float(w2_sq.mean()),
        second_moment_std_error=float(w2_sq.std(ddof=1)) / root_n,
        replicates=replicates,
        seed=int(seed),
    )


def weight_sweep(setup: PioneerSetup,
                 weights: Sequence[float],
                 ns: Sequence[int],
                 replicates: int = DEFAULT_REPLICATES,
                 seed: int = 0,
                 w2_nodes: int = DEFAULT_W2_NODES) -> list[CurvePoint]:
    """Expected-learning curve over pioneer weights and sample sizes.

    For each (w, n) the decision-maker prior (weight w) is both the
    predictive and the update prior while the consensus prior is the
    reference. Point seeds are seed + row-major index, so a singleton
    sweep reproduces a direct expected_learning_mc call exactly.
    """
    weights = list(weights)
    ns = list(ns)
    if not weights or not ns:
        raise ValueError("weight_sweep needs nonempty weight and n lists")
    points = []
    index = 0
    for w in weights:
        for n in ns:
            model = SamplingModel(setup.model.sigma, int(n))
            blended = decision_maker_prior(
                PioneerSetup(setup.consensus, setup.pioneer, float(w), model)
            )
            result = expected_learning_mc(
                blended, blended, setup.consensus, model,
                replicates=replicates, seed=seed + index, w2_nodes=w2_nodes,
            )
            points.append(CurvePoint(float(w), int(n), result.estimate, result.mc_std_error))
            index += 1
    return points


def curve_points_to_csv(points: Sequence[CurvePoint]) -> str:
    """CSV with the declared header, one row per curve point."""
    lines = ["w,n,expected_learning,mc_std_error"]
    for pt in points:
        lines.append(f"{pt.w!r},{pt.n},{pt.expected_learning!r},{pt.mc_std_error!r}")
    return "\n".join(lines) + "\n"
