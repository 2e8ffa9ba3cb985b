"""INI-style experiment configuration.

Sections and keys (all optional, defaults in brackets)::

    [graph]    model [rbf] | n [100] | sigma [0.5] | threshold [0.15] | m0 [10] | m [3]
    [process]  kernel [diffusion] | tau [5] | alpha | mask_fraction [0.2]
               sigma_e [0.1] or noise_var
    [learner]  mu [0.01] | delta [0.01] | R [sqrt_n] | S | K [4] | T0 [5]
               confidence [exact-logdet]
    [run]      horizon [100] | selector [walk] | max_iter [100] | aal_lengths [10, 20]
               base_seed [0] | realizations [per command] | seeds | enum_budget [2000000]
    [study]    parameter [ba_m] | levels [1, 3, 5] | n_train [300] | n_test [100]
               observability [full, partial] | partial_fraction [0.4]
    [bench]    sizes [50, 100, 200, 400] | warmup_rounds [10] | enum_budget [3000000]

``R`` accepts a number, ``sqrt_n`` (``sqrt(n) * sigma_e``) or ``sigma`` (``sigma_e``).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .bench import STUDY_PARAMETERS, ExperimentConfig
from .errors import InvalidParameterError


@dataclass(frozen=True)
class StudyConfig:
    parameter: str = "ba_m"
    levels: tuple = (1, 3, 5)
    n_train: int = 300
    n_test: int = 100
    observability: tuple = ("full", "partial")
    partial_fraction: float = 0.4


@dataclass(frozen=True)
class BenchConfig:
    sizes: tuple = (50, 100, 200, 400)
    warmup_rounds: int = 10
    enum_budget: int = 3_000_000


# (section, key) -> ExperimentConfig field
_EXPERIMENT_KEYS = {
    ("graph", "model"): "graph_model",
    ("graph", "n"): "n",
    ("graph", "sigma"): "rbf_sigma",
    ("graph", "threshold"): "rbf_threshold",
    ("graph", "m0"): "ba_m0",
    ("graph", "m"): "ba_m",
    ("process", "kernel"): "kernel",
    ("process", "tau"): "tau",
    ("process", "alpha"): "alpha",
    ("process", "mask_fraction"): "mask_fraction",
    ("process", "sigma_e"): "sigma_e",
    ("learner", "mu"): "mu",
    ("learner", "delta"): "delta",
    ("learner", "S"): "S",
    ("learner", "K"): "K",
    ("learner", "T0"): "T0",
    ("learner", "confidence"): "confidence",
    ("run", "horizon"): "horizon",
    ("run", "selector"): "selector",
    ("run", "max_iter"): "max_iter",
    ("run", "aal_lengths"): "aal_lengths",
    ("run", "enum_budget"): "enum_budget",
}
_EXTRA_KEYS = {
    ("process", "noise_var"), ("learner", "R"), ("run", "base_seed"), ("run", "realizations"),
    ("run", "seeds"),
}



@dataclass(frozen=True)
class LoadedConfig:
    experiment: ExperimentConfig
    study: StudyConfig
    bench: BenchConfig
    base_seed: int
    explicit_seeds: bool

    def to_dict(self) -> dict:
        return {"experiment": asdict(self.experiment), "study": asdict(self.study),
                "bench": asdict(self.bench)}


def _convert(name: str, raw: str, target_type):
    raw = raw.strip()
    try:
        if target_type in ("tuple_int",):
            return tuple(int(x) for x in raw.replace(",", " ").split())
        if target_type == "tuple_float":
            return tuple(float(x) for x in raw.replace(",", " ").split())
        if target_type == "tuple_str":
            return tuple(x for x in raw.replace(",", " ").split())
        if target_type == "optional_float":
            return None if raw.lower() in ("", "none", "auto") else float(raw)
        return target_type(raw)
    except ValueError as exc:
        raise InvalidParameterError(f"{name}: cannot parse {raw!r}: {exc}") from None


_FIELD_TYPES = {
    "graph_model": str, "n": int, "rbf_sigma": float, "rbf_threshold": float, "ba_m0": int,
    "ba_m": int, "kernel": str, "tau": float, "alpha": "tuple_float", "mask_fraction": float,
    "sigma_e": float, "mu": float, "delta": float, "S": "optional_float", "K": int, "T0": int,
    "confidence": str, "horizon": int, "selector": str, "max_iter": int,
    "aal_lengths": "tuple_int", "enum_budget": int,
}
_STUDY_TYPES = {"parameter": str, "levels": "tuple_float", "n_train": int, "n_test": int,
                "observability": "tuple_str", "partial_fraction": float}
_BENCH_TYPES = {"sizes": "tuple_int", "warmup_rounds": int, "enum_budget": int}


def parse_config(text: str = "", overrides: dict | None = None, seed: int | None = None,
                 default_realizations: int = 20) -> LoadedConfig:
    """Parse config text, apply ``section.key`` overrides, then the seed flag.

    ``seed`` sets the base seed; the run uses ``realizations`` consecutive
    seeds starting there unless an explicit ``seeds`` list is given.
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep 'K', 'T0', 'R', 'S' case-sensitive
    cp.read_string(text)
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise InvalidParameterError(f"override {dotted!r} must look like section.key")
        sec, key = dotted.split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, key, str(value))

    known_sections = {"graph", "process", "learner", "run", "study", "bench"}
    for sec in cp.sections():
        if sec not in known_sections:
            raise InvalidParameterError(f"unknown config section [{sec}]")

    kwargs = {}
    for sec in ("graph", "process", "learner", "run"):
        if not cp.has_section(sec):
            continue
        for key, raw in cp.items(sec):
            if (sec, key) in _EXTRA_KEYS:
                continue
            if (sec, key) not in _EXPERIMENT_KEYS:
                raise InvalidParameterError(f"unknown config key {sec}.{key}")
            fname = _EXPERIMENT_KEYS[(sec, key)]
            kwargs[fname] = _convert(f"{sec}.{key}", raw, _FIELD_TYPES[fname])

    if cp.has_option("process", "noise_var"):
        if cp.has_option("process", "sigma_e"):
            raise InvalidParameterError("give process.sigma_e or process.noise_var, not both")
        var = _convert("process.noise_var", cp.get("process", "noise_var"), float)
        if var < 0:
            raise InvalidParameterError(f"process.noise_var must be >= 0, got {var}")
        kwargs["sigma_e"] = math.sqrt(var)

    r_raw = cp.get("learner", "R", fallback="sqrt_n").strip().lower()
    if r_raw in ("sqrt_n", "auto", "none", ""):
        kwargs["R"], kwargs["noise_bound"] = None, "sqrt_n"
    elif r_raw == "sigma":
        kwargs["R"], kwargs["noise_bound"] = None, "sigma"
    else:
        kwargs["R"] = _convert("learner.R", r_raw, float)

    base_seed = _convert("run.base_seed", cp.get("run", "base_seed", fallback="0"), int)
    explicit = cp.has_option("run", "seeds")
    if seed is not None:
        base_seed, explicit = seed, False
    if explicit:
        kwargs["seeds"] = _convert("run.seeds", cp.get("run", "seeds"), "tuple_int")
    else:
        reps = _convert("run.realizations", cp.get("run", "realizations", fallback=str(default_realizations)), int)
        if reps < 1:
            raise InvalidParameterError(f"run.realizations must be >= 1, got {reps}")
        kwargs["seeds"] = tuple(range(base_seed, base_seed + reps))

    try:
        exp = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise InvalidParameterError(str(exc)) from None

    study = _section_dataclass(cp, "study", StudyConfig, _STUDY_TYPES)
    bench = _section_dataclass(cp, "bench", BenchConfig, _BENCH_TYPES)
    if study.parameter not in STUDY_PARAMETERS:
        raise InvalidParameterError(f"study.parameter must be one of {STUDY_PARAMETERS}, got {study.parameter!r}")
    for obs in study.observability:
        if obs not in ("full", "partial"):
            raise InvalidParameterError(f"study.observability entries must be full/partial, got {obs!r}")
    return LoadedConfig(exp, study, bench, base_seed, explicit)


def _section_dataclass(cp, sec, cls, types):
    kw = {}
    if cp.has_section(sec):
        for key, raw in cp.items(sec):
            if key not in types:
                raise InvalidParameterError(f"unknown config key {sec}.{key}")
            kw[key] = _convert(f"{sec}.{key}", raw, types[key])
    return cls(**kw)


def load_config(path=None, overrides=None, seed=None, default_realizations: int = 20) -> LoadedConfig:
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidParameterError(f"cannot read config file {path}: {exc}") from None
    else:
        text = ""
    return parse_config(text, overrides, seed, default_realizations)


def experiment_from_dict(d: dict) -> ExperimentConfig:
    """Rebuild an :class:`ExperimentConfig` from its JSON echo."""
    d = dict(d)
    for key in ("alpha", "aal_lengths", "seeds"):
        if key in d:
            d[key] = tuple(d[key])
    return ExperimentConfig(**d)


def with_seeds(cfg: ExperimentConfig, seeds) -> ExperimentConfig:
    return replace(cfg, seeds=tuple(seeds))
