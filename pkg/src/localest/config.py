"""Flat ``section.key = value`` experiment configs.

Example::

    model.kind = stekloff
    model.target_eigenvalue = 0.62
    prior.lower = 0
    prior.upper = 6
    likelihood.sigma = 0.05
    sampler.K = 10000
    data.values = 0.62

Lists are comma separated. Manual regions are ``;``-separated groups of
``lo, hi`` pairs per axis, e.g. ``estimators.regions = 0, 3; 3, 6``.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .estimators import Region
from .models import (
    IP2_SENSORS,
    NOISE_KINDS,
    Observation,
    PointSourceModel,
    PolynomialModel,
    SourceSpec,
    StekloffModel,
    WaveMediumModel,
    synthesize_data,
)
from .sampler import BoxPrior, LikelihoodSpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "validate_config", "load_config"]

MODEL_KEYS = {
    "stekloff": {"k", "target_eigenvalue", "max_order", "dirichlet_guard"},
    "wave-medium": {"sensors", "time", "truncation", "source", "source.modes"},
    "point-source": {"receiver", "k"},
    "polynomial": {"coefficients"},
}

GENERAL_KEYS = {
    "model.kind",
    "prior.lower",
    "prior.upper",
    "likelihood.sigma",
    "likelihood.relative_sigma",
    "likelihood.exponent",
    "sampler.K",
    "sampler.burn_in",
    "sampler.seed",
    "sampler.initial",
    "estimators.bins",
    "estimators.epsilon",
    "estimators.min_separation",
    "estimators.regions",
    "data.values",
    "data.path",
    "data.synthesize.true_param",
    "data.synthesize.noise_kind",
    "data.synthesize.noise_level",
    "data.synthesize.data_seed",
    "output.dir",
}


class ConfigError(ValueError):
    """Carries every problem found in a config, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    model: object
    prior: BoxPrior
    sigma: float = None
    relative_sigma: float = None
    exponent: int = 2
    K: int = 10000
    burn_in: int = None
    seed: int = 0
    initial: np.ndarray = None
    bins: tuple = None
    epsilon: float = 0.2
    min_separation: int = 3
    regions: list = None
    data_values: np.ndarray = None
    data_path: str = None
    synthesize: dict = None
    output_dir: str = "out"
    source_path: str = None
    raw: dict = field(default_factory=dict)

    def observation(self):
        """Observed data from whichever source the config names."""
        if self.data_values is not None:
            return Observation(self.data_values)
        if self.data_path is not None:
            return Observation(_read_numbers(self.data_path))
        syn = self.synthesize
        return synthesize_data(
            self.model,
            syn["true_param"],
            noise_kind=syn["noise_kind"],
            noise_level=syn["noise_level"],
            seed=syn["data_seed"],
        )

    def likelihood(self, data):
        if self.sigma is not None:
            return LikelihoodSpec(self.sigma, self.exponent)
        scale = float(np.max(np.abs(data.values)))
        return LikelihoodSpec(self.relative_sigma * scale, self.exponent)


def _read_numbers(path):
    with open(path) as fh:
        text = fh.read()
    tokens = text.replace(",", " ").split()
    return np.array([float(t) for t in tokens])


def parse_config(text):
    """Split config text into ``{key: value}``; returns ``(entries, errors)``."""
    entries, errors = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            errors.append(f"line {lineno}: empty key")
        elif key in entries:
            errors.append(f"line {lineno}: duplicate key {key!r}")
        else:
            entries[key] = value
    return entries, errors


class _Reader:
    """Typed access to raw entries that records errors instead of raising."""

    def __init__(self, entries):
        self.entries = entries
        self.errors = []

    def has(self, key):
        return key in self.entries

    def get(self, key, convert, default=None, required=False):
        if key not in self.entries:
            if required:
                self.errors.append(f"{key}: missing required key")
            return default
        try:
            return convert(self.entries[key])
        except (TypeError, ValueError) as exc:
            self.errors.append(f"{key}: {exc}")
            return default


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _floats(text):
    parts = [p for p in text.replace(",", " ").split()]
    if not parts:
        raise ValueError("expected at least one number")
    return np.array([_float(p) for p in parts])


def _ints(text):
    return tuple(_int(p) for p in text.replace(",", " ").split())


def _modes(text):
    modes = {}
    for group in text.split(";"):
        parts = group.replace(",", " ").split()
        if not parts:
            continue
        if len(parts) != 3:
            raise ValueError(f"mode entries are 'm1 m2 g', got {group.strip()!r}")
        modes[(_int(parts[0]), _int(parts[1]))] = _float(parts[2])
    if not modes:
        raise ValueError("no modes given")
    return modes


def _regions(text):
    out = []
    for group in text.split(";"):
        if not group.strip():
            continue
        vals = _floats(group)
        if vals.size % 2:
            raise ValueError(f"region needs lo, hi pairs per axis, got {group.strip()!r}")
        out.append(Region(tuple(vals[0::2]), tuple(vals[1::2])))
    if not out:
        raise ValueError("no regions given")
    return out


def _build_model(r, kind):
    get = r.get
    try:
        if kind == "stekloff":
            target = get("model.target_eigenvalue", _float, required=True)
            if target is None:
                return None
            return StekloffModel(
                k=get("model.k", _float, 1.0),
                target_eigenvalue=target,
                max_order=get("model.max_order", _int, 25),
                dirichlet_guard=get("model.dirichlet_guard", _float, 1e-12),
            )
        if kind == "wave-medium":
            preset = get("model.source", str, None)
            explicit = get("model.source.modes", _modes, None)
            if preset is not None and explicit is not None:
                r.errors.append("model.source: give either a preset or model.source.modes, not both")
            if explicit is not None:
                source = SourceSpec(explicit)
            elif preset in (None, "single"):
                source = SourceSpec.single()
            elif preset == "aliasing":
                source = SourceSpec.aliasing()
            else:
                r.errors.append(f"model.source: unknown preset {preset!r} (expected single or aliasing)")
                source = SourceSpec.single()
            return WaveMediumModel(
                sensors=tuple(get("model.sensors", _floats, np.array(IP2_SENSORS))),
                time=get("model.time", _float, 1.0),
                truncation=get("model.truncation", _int, 8),
                source=source,
            )
        if kind == "polynomial":
            return PolynomialModel(tuple(get("model.coefficients", _floats, np.array([0.0, 1.0]))))
        return PointSourceModel(
            receiver=tuple(get("model.receiver", _floats, np.array([0.0, 3.0]))),
            k=get("model.k", _float, 1.0),
        )
    except ValueError as exc:
        r.errors.append(f"model: {exc}")
        return None


def validate_config(path):
    """Parse and check a config file.

    Returns ``(config, errors)``; ``config`` is ``None`` whenever ``errors``
    is non-empty. Unknown keys are errors.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        return None, [f"{path}: cannot read config ({exc.strerror})"]
    entries, errors = parse_config(text)
    r = _Reader(entries)
    r.errors = errors
    base = os.path.dirname(os.path.abspath(path))

    kind = r.get("model.kind", str, required=True)
    if kind is not None and kind not in MODEL_KEYS:
        r.errors.append(f"model.kind: unknown model {kind!r} (expected one of {sorted(MODEL_KEYS)})")
        kind = None
    allowed = set(GENERAL_KEYS)
    if kind is not None:
        allowed |= {f"model.{k}" for k in MODEL_KEYS[kind]}
    for key in entries:
        if key not in allowed:
            if key.startswith("model.") and kind is not None and any(
                key[6:] in keys for keys in MODEL_KEYS.values()
            ):
                r.errors.append(f"{key}: not a {kind} model key")
            else:
                r.errors.append(f"{key}: unknown key")

    model = _build_model(r, kind) if kind is not None else None

    lower = r.get("prior.lower", _floats, required=True)
    upper = r.get("prior.upper", _floats, required=True)
    prior = None
    if lower is not None and upper is not None:
        if lower.shape != upper.shape:
            r.errors.append("prior.lower/prior.upper: dimensions differ")
        elif not np.all(lower < upper):
            r.errors.append("prior.lower: must be strictly below prior.upper on every axis")
        else:
            prior = BoxPrior(lower, upper)
            if model is not None and prior.dim != model.param_dim:
                r.errors.append(
                    f"prior.lower: prior has {prior.dim} dimensions, model expects {model.param_dim}"
                )
            if isinstance(model, PointSourceModel) and prior.contains(model.receiver):
                r.errors.append("model.receiver: receiver must lie outside the prior box")

    sigma = r.get("likelihood.sigma", _float)
    rel_sigma = r.get("likelihood.relative_sigma", _float)
    if r.has("likelihood.sigma") + r.has("likelihood.relative_sigma") != 1:
        r.errors.append("likelihood: exactly one of likelihood.sigma or likelihood.relative_sigma is required")
    for key, val in (("likelihood.sigma", sigma), ("likelihood.relative_sigma", rel_sigma)):
        if val is not None and not val > 0:
            r.errors.append(f"{key}: must be positive")
    exponent = r.get("likelihood.exponent", _int, 2)
    if exponent not in (1, 2):
        r.errors.append("likelihood.exponent: must be 1 or 2")

    K = r.get("sampler.K", _int, 10000)
    burn_in = r.get("sampler.burn_in", _int, None)
    if K is not None and K < 1:
        r.errors.append("sampler.K: must be positive")
    elif K is not None:
        if burn_in is None:
            burn_in = K // 10
        if burn_in < 0 or burn_in >= K:
            r.errors.append(f"sampler.burn_in: must satisfy 0 <= burn_in < K (burn_in={burn_in}, K={K})")
    seed = r.get("sampler.seed", _int, 0)
    initial = r.get("sampler.initial", _floats, None)
    if initial is not None and prior is not None:
        if initial.shape != prior.lower.shape or not prior.contains(initial):
            r.errors.append("sampler.initial: must be a point inside the prior box")

    dim = prior.dim if prior is not None else (model.param_dim if model is not None else 1)
    bins = r.get("estimators.bins", _ints, None)
    if bins is None:
        bins = (60,) if dim == 1 else (40,) * dim
    elif len(bins) == 1:
        bins = bins * dim
    if len(bins) != dim or any(b < 1 for b in bins):
        r.errors.append(f"estimators.bins: need {dim} positive bin counts")
    epsilon = r.get("estimators.epsilon", _float, 0.2)
    if epsilon is not None and not 0.0 < epsilon <= 1.0:
        r.errors.append("estimators.epsilon: must lie in (0, 1]")
    min_sep = r.get("estimators.min_separation", _int, 3)
    if min_sep is not None and min_sep < 1:
        r.errors.append("estimators.min_separation: must be >= 1")
    regions = r.get("estimators.regions", _regions, None)
    if regions is not None and any(len(reg.lo) != dim for reg in regions):
        r.errors.append(f"estimators.regions: every region needs {dim} lo/hi pairs")

    sources = [
        name
        for name, present in (
            ("values", r.has("data.values")),
            ("path", r.has("data.path")),
            ("synthesize", any(k.startswith("data.synthesize.") for k in entries)),
        )
        if present
    ]
    values = path_ = synth = None
    if len(sources) != 1:
        found = ", ".join(sources) if sources else "none"
        r.errors.append(f"data: exactly one data source is required (found: {found})")
    elif sources[0] == "values":
        values = r.get("data.values", _floats)
    elif sources[0] == "path":
        path_ = os.path.join(base, entries["data.path"])
        if not os.path.isfile(path_):
            r.errors.append(f"data.path: file not found: {path_}")
        else:
            try:
                _read_numbers(path_)
            except ValueError as exc:
                r.errors.append(f"data.path: {exc}")
    else:
        synth = {
            "true_param": r.get("data.synthesize.true_param", _floats, required=True),
            "noise_kind": r.get("data.synthesize.noise_kind", str, "gaussian-relative"),
            "noise_level": r.get("data.synthesize.noise_level", _float, 0.0),
            "data_seed": r.get("data.synthesize.data_seed", _int, 0),
        }
        if synth["noise_kind"] not in NOISE_KINDS:
            r.errors.append(f"data.synthesize.noise_kind: expected one of {', '.join(NOISE_KINDS)}")
        if synth["noise_level"] is not None and synth["noise_level"] < 0:
            r.errors.append("data.synthesize.noise_level: must be non-negative")
        tp = synth["true_param"]
        if tp is not None and model is not None and tp.size != model.param_dim:
            r.errors.append(f"data.synthesize.true_param: model expects {model.param_dim} values")

    output_dir = r.get("output.dir", str, "out")

    if r.errors:
        return None, r.errors
    cfg = ExperimentConfig(
        model=model,
        prior=prior,
        sigma=sigma,
        relative_sigma=rel_sigma,
        exponent=exponent,
        K=K,
        burn_in=burn_in,
        seed=seed,
        initial=initial,
        bins=tuple(bins),
        epsilon=epsilon,
        min_separation=min_sep,
        regions=regions,
        data_values=values,
        data_path=path_,
        synthesize=synth,
        output_dir=output_dir,
        source_path=os.path.abspath(path),
        raw=entries,
    )
    return cfg, []


def load_config(path):
    """Like ``validate_config`` but raises ``ConfigError``."""
    cfg, errors = validate_config(path)
    if errors:
        raise ConfigError(errors)
    return cfg
