"""INI experiment configuration with one flat namespace of keys.

Keys live under section headers in the file, but every key name is unique so
the CLI can expose each one as ``--key`` (underscores become hyphens).
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields

from .experiments import SWEEP_VARIABLES
from .synth import SCENARIOS, ConfigError

KINDS = (
    "synthetic-node-prior",
    "synthetic-edge-prior",
    "seed-targeting",
    "facebook-style",
    "feature-pipeline",
    "baseline-compare",
)

# section -> keys; used for reading files and writing the resolved config
SECTIONS = {
    "experiment": ("kind", "prior", "sweep", "values", "runs", "seed", "threads"),
    "synthetic": (
        "benign_size",
        "sybil_size",
        "avg_degree",
        "attack_edges",
        "benign_seeds",
        "sybil_seeds",
        "benign_scenario",
        "sybil_scenario",
    ),
    "noise": ("fpr", "fnr"),
    "lbp": ("lbp_iters",),
    "classifier": ("benign_weight", "sybil_weight", "C", "train_per_class"),
    "io": ("graph", "labels", "out_dir", "ks"),
}


@dataclass
class ExperimentConfig:
    kind: str = "synthetic-node-prior"
    prior: str = "node"
    sweep: str = "fpr_fnr"
    values: str = "0,0.1,0.2,0.3,0.4,0.5"
    runs: int = 100
    seed: int = 0
    threads: int = 1
    benign_size: int = 1000
    sybil_size: int = 400
    avg_degree: int = 10
    attack_edges: int = 1000
    benign_seeds: int = 1
    sybil_seeds: int = 1
    benign_scenario: str = "SI"
    sybil_scenario: str = "SI"
    fpr: float = 0.3
    fnr: float = 0.3
    lbp_iters: int = 6
    benign_weight: float = 1.0
    sybil_weight: float = 1.0
    C: float = 1.0
    train_per_class: int = 0  # 0 means scale to the data
    graph: str = ""
    labels: str = ""
    out_dir: str = "runs"
    ks: str = ""

    def sweep_values(self):
        vals = [v.strip() for v in self.values.split(",") if v.strip()]
        if not vals:
            raise ConfigError("sweep range is empty")
        cast = int if self.sweep in ("attack_edges", "sybil_size", "benign_size", "avg_degree") else float
        try:
            return [cast(v) for v in vals]
        except ValueError as exc:
            raise ConfigError(f"bad sweep value: {exc}") from None

    def topk(self):
        try:
            return [int(k) for k in self.ks.split(",") if k.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad ks: {exc}") from None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.prior not in ("node", "edge"):
            raise ConfigError(f"prior must be 'node' or 'edge', got {self.prior!r}")
        if self.sweep not in SWEEP_VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.sweep!r}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.lbp_iters < 1:
            raise ConfigError("lbp_iters must be >= 1")
        for s in (self.benign_scenario, self.sybil_scenario):
            if s not in SCENARIOS:
                raise ConfigError(f"unknown seed scenario {s!r}")
        for name in ("fpr", "fnr"):
            if not 0.0 <= getattr(self, name) <= 0.5:
                raise ConfigError(f"{name} must lie in [0, 0.5]")
        if self.benign_weight <= 0 or self.sybil_weight <= 0 or self.C <= 0:
            raise ConfigError("classifier weights and C must be positive")
        self.sweep_values()
        self.topk()
        return self

    def digest(self):
        """Short hash of everything that affects results."""
        skip = {"threads", "out_dir"}
        text = ";".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self) if f.name not in skip)
        return hashlib.sha256(text.encode()).hexdigest()[:10]

    def to_ini(self, path):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for section, keys in SECTIONS.items():
            cp[section] = {k: str(getattr(self, k)) for k in keys}
        with open(path, "w") as fh:
            cp.write(fh)


ATTACK_SWEEP = "200,400,600,800,1000"
EDGE_NOISE = {"fpr": 0.1, "fnr": 0.5}

# applied for keys the file and the flags leave unset
KIND_DEFAULTS = {
    "synthetic-node-prior": {"prior": "node"},
    "synthetic-edge-prior": {"prior": "edge", **EDGE_NOISE},
    "seed-targeting": {"sweep": "attack_edges", "values": ATTACK_SWEEP},
    "facebook-style": {
        "sweep": "attack_edges",
        "values": "1000,5000,10000,15000,20000",
        "runs": 20,
    },
    "feature-pipeline": {"benign_seeds": 1000, "sybil_seeds": 1000, "ks": "100,200,500,1000"},
    "baseline-compare": {"sweep": "attack_edges", "values": "0," + ATTACK_SWEEP},
}


FIELD_TYPES = {f.name: type(f.default) for f in fields(ExperimentConfig)}


def coerce(key, raw):
    kind = FIELD_TYPES[key]
    try:
        return kind(raw) if kind is not bool else raw.lower() in ("1", "true", "yes")
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def load_config(path=None, overrides=None, default_kind=None):
    """Defaults, then the INI file, then explicit overrides (``None`` skipped).

    ``default_kind`` is used only when neither the file nor the overrides name one.
    """
    values = {}
    if path:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in cp.sections():
            for key, raw in cp[section].items():
                if key not in FIELD_TYPES:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                values[key] = coerce(key, raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = coerce(key, val) if isinstance(val, str) else val
    if default_kind is not None:
        values.setdefault("kind", default_kind)
    kind = values.get("kind", ExperimentConfig.kind)
    for key, val in KIND_DEFAULTS.get(kind, {}).items():
        values.setdefault(key, val)
    if values.get("prior") == "edge":
        for key, val in EDGE_NOISE.items():
            values.setdefault(key, val)
    return ExperimentConfig(**values).validate()
