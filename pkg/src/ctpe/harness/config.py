"""Experiment configuration: an INI schema with typed, validated fields.

Sections and keys (defaults in brackets)::

    [experiment]  name, preset, dt, horizon [preset], zeta [1.0], discount [preset]
    [data]        train [256], val [128], test [128], seeds [8], substeps [16]
    [estimators]  names [BE, Gen2], features [quadratic], bandwidths [1],
                  ridge [auto], startup [bellman], transitions [sample]
    [truth]       mode [auto], rollouts [256], substeps [16], max_states [64]
    [perturbation] kind [gain_shift], magnitude [1.0]
    [sweep]       one key per axis, e.g. ``kappa = 0.5, 1.0, 1.5``

``seeds`` is either a count ``N`` (seeds ``0..N-1``) or a comma list.
Sweep axes are ``M, zeta, dt, kappa, family, startup, order``.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import json
from dataclasses import dataclass, field

from ..dynamics.presets import PRESETS
from ..dynamics.truth import ControllerPerturbation
from ..estimators.moments import TRANSITION_MODES
from ..estimators.recursions import STARTUP_MODES
from ..features import FAMILIES

ESTIMATORS = ("BE", "Gen1", "Gen2", "Gen3", "MBLinear", "MBQuadratic")
TRUTH_MODES = ("auto", "analytic", "mc")
SWEEP_AXES = {
    "M": "train",
    "zeta": "zeta",
    "dt": "dt",
    "kappa": "magnitude",
    "family": "features",
    "startup": "startup",
    "order": "order",
}


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _strings(text: str) -> list[str]:
    return [x.strip() for x in str(text).replace(";", ",").split(",") if x.strip()]


def _seeds(text) -> list[int]:
    items = _strings(text)
    if len(items) == 1 and "-" not in items[0]:
        return list(range(int(items[0])))
    out = []
    for item in items:
        if "-" in item:
            lo, hi = item.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(item))
    return out


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    preset: str = "ou1"
    dt: float = 0.1
    horizon: float | None = None
    zeta: float = 1.0
    discount: float | None = None
    train: int = 256
    val: int = 128
    test: int = 128
    seeds: list = field(default_factory=lambda: list(range(8)))
    substeps: int = 16
    estimators: list = field(default_factory=lambda: ["BE", "Gen2"])
    features: str = "quadratic"
    bandwidths: list = field(default_factory=lambda: [1])
    ridge: object = "auto"
    startup: str = "bellman"
    transitions: str = "sample"
    truth: str = "auto"
    truth_rollouts: int = 256
    truth_substeps: int = 16
    max_states: int = 64
    perturbation: str = "gain_shift"
    magnitude: float = 1.0
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    # -- derived ------------------------------------------------------
    @property
    def orders(self) -> list[int]:
        return sorted({int(e[3:]) for e in self.estimators if e.startswith("Gen")})

    @property
    def n_steps(self) -> int:
        from ..dynamics.models import make_grid

        return make_grid(self.resolved_horizon(), self.dt).n_steps

    def resolved_horizon(self) -> float:
        if self.horizon is not None:
            return float(self.horizon)
        return float(PRESETS[self.preset]().horizon)

    def perturbation_spec(self) -> ControllerPerturbation | None:
        neutral = 0.0 if self.perturbation == "time_shift" else 1.0
        if self.magnitude == neutral:
            return None
        return ControllerPerturbation(self.perturbation, self.magnitude)

    def validate(self) -> None:
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; available: {sorted(PRESETS)}")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown estimators {bad}; expected a subset of {ESTIMATORS}")
        if self.features not in FAMILIES:
            raise ValueError(f"unknown feature family {self.features!r}")
        if self.startup not in STARTUP_MODES:
            raise ValueError(f"startup must be one of {STARTUP_MODES}")
        if self.transitions not in TRANSITION_MODES:
            raise ValueError(f"transitions must be one of {TRANSITION_MODES}")
        if self.truth not in TRUTH_MODES:
            raise ValueError(f"truth mode must be one of {TRUTH_MODES}")
        if not self.bandwidths or any(int(h) < 1 for h in self.bandwidths):
            raise ValueError("bandwidth candidates must be integers >= 1")
        self.bandwidths = sorted(int(h) for h in self.bandwidths)
        if min(self.train, self.val, self.test) < 1:
            raise ValueError("every split needs at least one episode")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        N = self.n_steps
        need = max(self.orders, default=0) + 1
        if N < need:
            raise ValueError(f"grid has N_T={N} steps but order {need - 1} needs N_T >= {need}")
        unknown = set(self.sweep) - set(SWEEP_AXES)
        if unknown:
            raise ValueError(f"unknown sweep axes {sorted(unknown)}; expected {sorted(SWEEP_AXES)}")
        if len(self.sweep) > 2:
            raise ValueError("at most two sweep axes are supported")
        ControllerPerturbation(self.perturbation, self.magnitude)

    # -- identity -----------------------------------------------------
    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Stable short hash of every field that affects results."""
        payload = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- INI io ---------------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["experiment"] = {"name": self.name, "preset": self.preset, "dt": repr(self.dt),
                            "horizon": repr(self.resolved_horizon()), "zeta": repr(self.zeta)}
        if self.discount is not None:
            cp["experiment"]["discount"] = repr(self.discount)
        cp["data"] = {"train": str(self.train), "val": str(self.val), "test": str(self.test),
                      "seeds": ", ".join(map(str, self.seeds)), "substeps": str(self.substeps)}
        cp["estimators"] = {"names": ", ".join(self.estimators), "features": self.features,
                            "bandwidths": ", ".join(map(str, self.bandwidths)), "ridge": str(self.ridge),
                            "startup": self.startup, "transitions": self.transitions}
        cp["truth"] = {"mode": self.truth, "rollouts": str(self.truth_rollouts),
                       "substeps": str(self.truth_substeps), "max_states": str(self.max_states)}
        cp["perturbation"] = {"kind": self.perturbation, "magnitude": repr(self.magnitude)}
        if self.sweep:
            cp["sweep"] = {k: ", ".join(map(str, v)) for k, v in self.sweep.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_ini())


def _ridge(text: str):
    text = str(text).strip()
    return "auto" if text in ("auto", "") else float(text)


_SWEEP_PARSERS = {
    "M": lambda v: [int(x) for x in _floats(v)],
    "zeta": _floats,
    "dt": _floats,
    "kappa": _floats,
    "family": _strings,
    "startup": _strings,
    "order": lambda v: [int(x) for x in _floats(v)],
}


def parse_config(text: str) -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig` from INI text."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    kw = {}
    if cp.has_section("experiment"):
        s = cp["experiment"]
        kw.update(name=s.get("name", "experiment"), preset=s.get("preset", "ou1"), dt=s.getfloat("dt", 0.1),
                  zeta=s.getfloat("zeta", 1.0))
        if "horizon" in s:
            kw["horizon"] = s.getfloat("horizon")
        if "discount" in s:
            kw["discount"] = s.getfloat("discount")
    if cp.has_section("data"):
        s = cp["data"]
        kw.update(train=s.getint("train", 256), val=s.getint("val", 128), test=s.getint("test", 128),
                  seeds=_seeds(s.get("seeds", "8")), substeps=s.getint("substeps", 16))
    if cp.has_section("estimators"):
        s = cp["estimators"]
        kw.update(estimators=_strings(s.get("names", "BE, Gen2")), features=s.get("features", "quadratic"),
                  bandwidths=[int(x) for x in _floats(s.get("bandwidths", "1"))], ridge=_ridge(s.get("ridge", "auto")),
                  startup=s.get("startup", "bellman"), transitions=s.get("transitions", "sample"))
    if cp.has_section("truth"):
        s = cp["truth"]
        kw.update(truth=s.get("mode", "auto"), truth_rollouts=s.getint("rollouts", 256),
                  truth_substeps=s.getint("substeps", 16), max_states=s.getint("max_states", 64))
    if cp.has_section("perturbation"):
        s = cp["perturbation"]
        kw.update(perturbation=s.get("kind", "gain_shift"), magnitude=s.getfloat("magnitude", 1.0))
    if cp.has_section("sweep"):
        sweep = {}
        for key, value in cp["sweep"].items():
            axis = {k.lower(): k for k in SWEEP_AXES}.get(key.lower())
            if axis is None:
                raise ValueError(f"unknown sweep axis {key!r}; expected one of {sorted(SWEEP_AXES)}")
            sweep[axis] = _SWEEP_PARSERS[axis](value)
        kw["sweep"] = sweep
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
