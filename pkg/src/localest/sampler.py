"""Metropolis-Hastings with independence proposals drawn from a box prior."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .models import ModelError

__all__ = [
    "BoxPrior",
    "LikelihoodSpec",
    "Chain",
    "log_likelihood",
    "log_posterior",
    "mh_run",
    "chain_diagnostics",
    "write_chain_csv",
    "read_chain_csv",
]


@dataclass(frozen=True)
class BoxPrior:
    """Uniform density on ``[lower, upper]`` (component-wise)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("prior bounds must be vectors of equal length")
        if not np.all(lower < upper):
            raise ValueError(f"prior requires lower < upper component-wise, got {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return self.lower.size

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)


@dataclass(frozen=True)
class LikelihoodSpec:
    """``exp(-|y - F(x)|^p / (2 sigma^2))`` summed over components.

    ``sigma = inf`` switches the likelihood off (flat posterior).
    """

    sigma: float
    exponent: int = 2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.exponent not in (1, 2):
            raise ValueError(f"exponent must be 1 or 2, got {self.exponent}")

    @property
    def weight(self):
        return 1.0 / (2.0 * self.sigma * self.sigma)


@dataclass
class Chain:
    states: np.ndarray
    accepted: np.ndarray
    log_posteriors: np.ndarray
    burn_in: int = 0
    seed: int = None
    n_invalid: int = 0

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        self.accepted = np.asarray(self.accepted, dtype=bool)
        self.log_posteriors = np.asarray(self.log_posteriors, dtype=float)
        n = len(self.states)
        if len(self.accepted) != n or len(self.log_posteriors) != n:
            raise ValueError("states, accepted and log_posteriors must have equal length")
        if not 0 <= self.burn_in <= n:
            raise ValueError(f"burn_in must lie in [0, {n}], got {self.burn_in}")

    def __len__(self):
        return len(self.states)

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def samples(self):
        """Post-burn-in states, shape ``(n, dim)``."""
        return self.states[self.burn_in:]


def log_likelihood(model, like, data, x):
    """Unnormalised log-likelihood; model failures give ``-inf``."""
    try:
        pred = np.asarray(model.forward(x), dtype=float)
    except ModelError:
        return -math.inf
    if not np.all(np.isfinite(pred)):
        return -math.inf
    resid = np.abs(data.values - pred)
    if like.exponent == 2:
        resid = resid * resid
    weight = like.weight
    return -weight * float(np.sum(resid)) if weight else 0.0


def log_posterior(model, prior, like, data, x):
    """Log of ``pi_eta(y - F(x)) pi_0(x)`` up to an additive constant."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not prior.contains(x):
        return -math.inf
    return log_likelihood(model, like, data, x)


def mh_run(model, prior, like, data, K, burn_in=None, seed=0, initial=None):
    """Run ``K`` Metropolis-Hastings iterations with prior-draw proposals.

    Each iteration draws ``x' ~ U(box)`` and ``t ~ U[0, 1]`` and moves to
    ``x'`` iff ``log pi(x') - log pi(x_k) >= log t``. Because the proposal is
    the (flat) prior itself, the ratio of posteriors is the Hastings ratio.

    The returned chain holds the ``K`` post-iteration states; the initial
    state is not recorded. ``burn_in`` defaults to ``K // 10``.
    """
    K = int(K)
    if K < 1:
        raise ValueError(f"K must be positive, got {K}")
    if burn_in is None:
        burn_in = K // 10
    if not 0 <= burn_in < K:
        raise ValueError(f"burn_in must satisfy 0 <= burn_in < K, got {burn_in} (K={K})")
    x = prior.center if initial is None else np.atleast_1d(np.asarray(initial, dtype=float))
    if x.shape != prior.lower.shape or not prior.contains(x):
        raise ValueError(f"initial state {x} is not inside the prior box")
    lp = log_posterior(model, prior, like, data, x)
    if lp == -math.inf:
        raise ValueError(f"initial state {x} has zero posterior density")

    rng = np.random.default_rng(seed)
    states = np.empty((K, prior.dim))
    accepted = np.zeros(K, dtype=bool)
    log_posts = np.empty(K)
    n_invalid = 0
    for i in range(K):
        proposal = prior.sample(rng)
        t = rng.uniform()
        lp_new = log_posterior(model, prior, like, data, proposal)
        if lp_new == -math.inf:
            n_invalid += 1
        elif lp_new - lp >= (math.log(t) if t > 0.0 else -math.inf):
            x, lp = proposal, lp_new
            accepted[i] = True
        states[i] = x
        log_posts[i] = lp
    return Chain(states, accepted, log_posts, burn_in=burn_in, seed=seed, n_invalid=n_invalid)


def chain_diagnostics(chain):
    if len(chain) == 0:
        raise ValueError("chain is empty")
    samples = chain.samples
    return {
        "iterations": len(chain),
        "acceptance_rate": float(np.mean(chain.accepted)),
        "post_burn_in": int(len(samples)),
        "mean": samples.mean(axis=0).tolist() if len(samples) else None,
        "variance": samples.var(axis=0).tolist() if len(samples) else None,
        "invalid_proposals": int(chain.n_invalid),
    }


def _fmt(v):
    return repr(float(v))


def write_chain_csv(chain, path):
    """One row per iteration: ``iter,accepted,log_post,x1[,x2...]``."""
    header = ["iter", "accepted", "log_post"] + [f"x{j + 1}" for j in range(chain.dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(chain)):
            row = [str(i + 1), "1" if chain.accepted[i] else "0", _fmt(chain.log_posteriors[i])]
            row += [_fmt(v) for v in chain.states[i]]
            writer.writerow(row)


def read_chain_csv(path, burn_in=0):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["iter", "accepted", "log_post"] or len(header) < 4:
            raise ValueError(f"{path}: not a chain file (header {header})")
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: chain file has no rows")
    accepted = [row[1] == "1" for row in rows]
    log_posts = [float(row[2]) for row in rows]
    states = [[float(v) for v in row[3:]] for row in rows]
    return Chain(states, accepted, log_posts, burn_in=burn_in)
