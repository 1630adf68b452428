"""Forward operators for the three inverse problems, plus synthetic data.

Every model maps a parameter vector ``x`` to a real observation vector via
``model.forward(x)``. Complex observations are stored as interleaved
``(re, im)`` pairs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import bessel_j_array, hankel1_0

__all__ = [
    "ModelError",
    "NearDirichletError",
    "CoincidenceError",
    "ForwardModel",
    "StekloffModel",
    "SourceSpec",
    "WaveMediumModel",
    "PointSourceModel",
    "PolynomialModel",
    "Observation",
    "stekloff_eigenvalues",
    "stekloff_closest",
    "eigenvalue_multiplicity",
    "wave_field",
    "mode_gamma",
    "point_source_field",
    "synthesize_data",
    "NOISE_KINDS",
    "IP2_SENSORS",
]


class ModelError(ValueError):
    """Forward model cannot be evaluated at the requested parameter."""


class NearDirichletError(ModelError):
    """k^2 n is (numerically) a Dirichlet eigenvalue of the unit disk."""


class CoincidenceError(ModelError):
    """Point source placed on the receiver."""


class ForwardModel:
    """Base class. Subclasses set ``param_dim`` and implement ``forward``."""

    param_dim = 1

    def forward(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.forward(x)


# --------------------------------------------------------------------------
# Stekloff eigenvalues of the unit disk


@dataclass(frozen=True)
class StekloffModel(ForwardModel):
    """Closest Stekloff eigenvalue of the unit disk with constant index n.

    Separation of variables on the disk gives one eigenvalue per Bessel
    order m, ``lambda_m = -k sqrt(n) J_m'(k sqrt(n)) / J_m(k sqrt(n))``.
    Orders ``m >= 1`` carry the cos/sin pair, so they are double.
    """

    k: float = 1.0
    target_eigenvalue: float = 0.62
    max_order: int = 25
    dirichlet_guard: float = 1e-12

    param_dim = 1

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"wavenumber k must be positive, got {self.k}")
        if int(self.max_order) != self.max_order or self.max_order < 1:
            raise ValueError(f"max_order must be an integer >= 1, got {self.max_order}")
        if not self.dirichlet_guard > 0:
            raise ValueError("dirichlet_guard must be positive")

    def forward(self, x):
        n = float(np.ravel(x)[0])
        return np.array([stekloff_closest(self, n)])


def eigenvalue_multiplicity(order):
    return 1 if order == 0 else 2


def stekloff_eigenvalues(model, n):
    """Eigenvalues ``lambda_0 .. lambda_M`` (index = Bessel order).

    Raises
    ------
    NearDirichletError
        If ``|J_m(k sqrt n)|`` is too small relative to ``|k sqrt(n) J_m'|``,
        i.e. the eigenvalue would exceed ``1 / dirichlet_guard`` in size.
    """
    n = float(n)
    if not n > 0:
        raise ModelError(f"index of refraction must be positive, got {n}")
    x = model.k * math.sqrt(n)
    js = bessel_j_array(model.max_order, x)
    lam = np.empty(model.max_order + 1)
    for m in range(model.max_order + 1):
        # x J_m'(x): -x J_1 for m = 0, x J_{m-1} - m J_m otherwise
        xdj = -x * js[1] if m == 0 else x * js[m - 1] - m * js[m]
        if abs(js[m]) <= model.dirichlet_guard * abs(xdj):
            raise NearDirichletError(
                f"k^2 n = {x * x:.12g} is within the guard of a Dirichlet eigenvalue (order {m})"
            )
        lam[m] = -xdj / js[m]
    return lam


def stekloff_closest(model, n):
    """Eigenvalue closest to ``model.target_eigenvalue``; ties go to the smaller."""
    lam = stekloff_eigenvalues(model, n)
    dist = np.abs(lam - model.target_eigenvalue)
    best = dist.min()
    return float(lam[dist == best].min())


# --------------------------------------------------------------------------
# Wave equation on the square (0, pi)^2 with Neumann boundary


IP2_SENSORS = tuple((i + 1) / 10 - 1 / 20 for i in range(1, 11))


def mode_gamma(m1, m2):
    """Normalisation of the Neumann eigenfunction cos(m1 x1) cos(m2 x2)."""
    if m1 == 0 and m2 == 0:
        return 1.0 / math.pi
    if m1 == 0 or m2 == 0:
        return math.sqrt(2.0) / math.pi
    return 2.0 / math.pi


def _impulse_difference(lam):
    """Mode response at c=1 minus c=2 for unit impulse at t=1, per unit g."""
    s = math.sqrt(lam)
    return (math.sin(s) - 2.0 * math.sin(2.0 * s)) / s


@dataclass(frozen=True)
class SourceSpec:
    """Impulsive source ``f(x, t) = delta(t) sum_m g_m phi_m(x)``.

    ``modes`` maps ``(m1, m2)`` to the modal coefficient ``g_m``.
    """

    modes: dict = field(default_factory=lambda: {(0, 2): 1.0})
    profile: str = "impulse"

    def __post_init__(self):
        if self.profile != "impulse":
            raise ValueError(f"unsupported temporal profile {self.profile!r}")
        for (m1, m2), g in self.modes.items():
            if min(m1, m2) < 0 or int(m1) != m1 or int(m2) != m2:
                raise ValueError(f"mode indices must be non-negative integers, got {(m1, m2)}")
            if not math.isfinite(g):
                raise ValueError(f"coefficient of mode {(m1, m2)} is not finite")

    @property
    def max_index(self):
        nonzero = [max(m) for m, g in self.modes.items() if g != 0.0]
        return max(nonzero, default=0)

    @classmethod
    def single(cls, m1=0, m2=2, g=1.0):
        return cls({(m1, m2): g})

    @classmethod
    def aliasing(cls):
        """Source whose sensor data at t = 1 coincide for c = 1 and c = 2.

        Two modes per spatial group ``m1 in {0, 1}``: ``(m1, 1)`` and
        ``(m1, 2)`` with coefficients chosen so the c=1 and c=2 responses
        cancel within the group. Largest coefficient is 1.
        """
        modes = {}
        for m1 in (0, 1):
            a, b = (m1, 1), (m1, 2)
            ha = _impulse_difference(a[0] ** 2 + a[1] ** 2) * mode_gamma(*a)
            hb = _impulse_difference(b[0] ** 2 + b[1] ** 2) * mode_gamma(*b)
            scale = max(abs(ha), abs(hb))
            modes[a] = hb / scale
            modes[b] = -ha / scale
        return cls(modes)


@dataclass(frozen=True)
class WaveMediumModel(ForwardModel):
    """Sensor readings ``u(x1, 0, t)`` of the Neumann wave problem.

    Parameter is the constant wave speed ``c``.
    """

    sensors: tuple = IP2_SENSORS
    time: float = 1.0
    truncation: int = 8
    source: SourceSpec = field(default_factory=SourceSpec)

    param_dim = 1

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(float(s) for s in self.sensors))
        if not self.sensors:
            raise ValueError("at least one sensor is required")
        for s in self.sensors:
            if not 0.0 < s < math.pi:
                raise ValueError(f"sensor position {s} outside (0, pi)")
        if not self.time > 0:
            raise ValueError(f"observation time must be positive, got {self.time}")
        if int(self.truncation) != self.truncation or self.truncation < 1:
            raise ValueError(f"truncation must be an integer >= 1, got {self.truncation}")

    def forward(self, x):
        return wave_field(self, float(np.ravel(x)[0]))


def _modal_amplitude(c, lam, g, t):
    if lam == 0:
        return c * c * g * t
    s = math.sqrt(lam)
    return c * g * math.sin(c * s * t) / s


def wave_field(model, c):
    """Truncated modal sum at every sensor for wave speed ``c``."""
    c = float(c)
    if not c > 0:
        raise ModelError(f"wave speed must be positive, got {c}")
    xs = np.asarray(model.sensors)
    out = np.zeros(xs.size)
    for (m1, m2), g in sorted(model.source.modes.items()):
        if g == 0.0 or m1 > model.truncation or m2 > model.truncation:
            continue
        amp = _modal_amplitude(c, m1 * m1 + m2 * m2, g, model.time)
        out += amp * mode_gamma(m1, m2) * np.cos(m1 * xs)
    return out


# --------------------------------------------------------------------------
# Point source in free space


@dataclass(frozen=True)
class PointSourceModel(ForwardModel):
    """Field ``(i/4) H_0^(1)(k |x0 - z|)`` at a single receiver ``x0``.

    Observation is ``(re, im)``; parameter is the source location ``z``.
    """

    receiver: tuple = (0.0, 3.0)
    k: float = 1.0

    param_dim = 2

    def __post_init__(self):
        object.__setattr__(self, "receiver", tuple(float(v) for v in self.receiver))
        if len(self.receiver) != 2:
            raise ValueError("receiver must be a point in R^2")
        if not self.k > 0:
            raise ValueError(f"wavenumber k must be positive, got {self.k}")

    def forward(self, x):
        u = point_source_field(self, x)
        return np.array([u.real, u.imag])


def point_source_field(model, z):
    z = np.asarray(z, dtype=float).ravel()
    r = math.hypot(model.receiver[0] - z[0], model.receiver[1] - z[1])
    if r == 0.0:
        raise CoincidenceError(f"source location {tuple(z)} coincides with the receiver")
    return 0.25j * hankel1_0(model.k * r)


# --------------------------------------------------------------------------
# Scalar polynomial, for exercising the estimators without a PDE


@dataclass(frozen=True)
class PolynomialModel(ForwardModel):
    """``F(x) = sum_i coefficients[i] x**i`` for scalar ``x``."""

    coefficients: tuple = (0.0, 1.0)

    param_dim = 1

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
        if not self.coefficients:
            raise ValueError("at least one coefficient is required")

    def forward(self, x):
        v = float(np.ravel(x)[0])
        return np.array([np.polynomial.polynomial.polyval(v, self.coefficients)])


# --------------------------------------------------------------------------
# Data


@dataclass(frozen=True)
class Observation:
    values: np.ndarray
    noise_sigma: float = None

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size < 1:
            raise ValueError("observation must be a non-empty vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("observation values must be finite")
        object.__setattr__(self, "values", values)
        if self.noise_sigma is not None and not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")

    def __len__(self):
        return self.values.size


NOISE_KINDS = ("gaussian-relative", "uniform-relative", "gaussian-absolute")


def synthesize_data(model, true_param, noise_kind="gaussian-relative", noise_level=0.0, seed=0):
    """Evaluate ``model`` at ``true_param`` and perturb component-wise.

    * gaussian-relative: ``y (1 + level xi)``, ``xi ~ N(0, 1)``
    * uniform-relative: ``y (1 + level xi)``, ``xi ~ U(-1, 1)``
    * gaussian-absolute: ``y + level xi``, ``xi ~ N(0, 1)``
    """
    if noise_kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {noise_kind!r}; expected one of {NOISE_KINDS}")
    if not noise_level >= 0:
        raise ValueError(f"noise level must be non-negative, got {noise_level}")
    clean = np.asarray(model.forward(np.atleast_1d(np.asarray(true_param, dtype=float))), dtype=float)
    rng = np.random.default_rng(seed)
    if noise_kind == "uniform-relative":
        xi = rng.uniform(-1.0, 1.0, size=clean.size)
    else:
        xi = rng.standard_normal(clean.size)
    if noise_kind == "gaussian-absolute":
        noisy = clean + noise_level * xi
    else:
        noisy = clean * (1.0 + noise_level * xi)
    return Observation(noisy)

