"""PSO hyperparameter grid, topology-dependent parameters and serialisation."""

from __future__ import annotations

import csv
import enum
import io
import itertools
from dataclasses import astuple, dataclass, fields

import numpy as np


class TopologyKind(str, enum.Enum):
    STAR = "Star"
    RING = "Ring"
    VON_NEUMANN = "VonNeumann"

    @classmethod
    def parse(cls, text: str) -> "TopologyKind":
        key = text.replace(" ", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown topology {text!r}")

    @property
    def index(self) -> int:
        return list(TopologyKind).index(self)


@dataclass(frozen=True, order=False)
class HyperParams:
    c1: float
    c2: float
    w: float
    n_particles: int
    k: int = 1
    p: int = 1
    r: int = 1


PARAM_NAMES = tuple(f.name for f in fields(HyperParams))

# Domains in table order; w is deliberately not sorted.
DOMAINS: dict[str, tuple] = {
    "c1": (0.3, 0.5, 0.7, 0.9),
    "c2": (0.2, 0.4, 0.6, 0.7),
    "w": (0.9, 0.5, 0.7),
    "n_particles": (50, 100, 150),
    "k": (1, 2, 3),
    "p": (1, 2),
    "r": (1, 2),
}

_INT_PARAMS = {"n_particles", "k", "p", "r"}


def config_key(hp: HyperParams) -> tuple:
    """Sort key reproducing grid order; off-grid values sort after grid values."""
    key = []
    for name, value in zip(PARAM_NAMES, astuple(hp)):
        dom = DOMAINS[name]
        key.append((dom.index(value), 0.0) if value in dom else (len(dom), float(value)))
    return tuple(key)


@dataclass(frozen=True)
class ConfigSpace:
    configs: tuple[HyperParams, ...]
    topology: TopologyKind | None = None

    def __len__(self) -> int:
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)

    def __getitem__(self, i):
        return self.configs[i]

    def index(self, hp: HyperParams) -> int:
        return self.configs.index(hp)


def full_grid(topology: TopologyKind | None = None) -> ConfigSpace:
    combos = itertools.product(*(DOMAINS[n] for n in PARAM_NAMES))
    return ConfigSpace(tuple(HyperParams(*c) for c in combos), topology)


def random_configs(n: int, seed: int, topology: TopologyKind | None = None) -> ConfigSpace:
    """``n`` distinct grid configurations drawn without replacement, in grid order."""
    grid = full_grid().configs
    if not 1 <= n <= len(grid):
        raise ValueError(f"n must be in 1..{len(grid)}")
    idx = np.sort(np.random.default_rng(seed).choice(len(grid), size=n, replace=False))
    return ConfigSpace(tuple(grid[i] for i in idx), topology)


def effective_params(config: HyperParams, topology: TopologyKind) -> HyperParams:
    """Reset parameters the topology ignores to their first grid value."""
    topology = TopologyKind(topology)
    if topology is TopologyKind.STAR:
        return HyperParams(config.c1, config.c2, config.w, config.n_particles, 1, 1, 1)
    if topology is TopologyKind.RING:
        return HyperParams(config.c1, config.c2, config.w, config.n_particles, config.k, config.p, 1)
    return HyperParams(config.c1, config.c2, config.w, config.n_particles, 1, config.p, config.r)


def validate(config: HyperParams) -> list[str]:
    """Return every violated bound; an empty list means the config is usable."""
    problems = []
    for name in ("c1", "c2", "w"):
        if getattr(config, name) < 0:
            problems.append(f"{name} out of range")
    if config.n_particles < 1:
        problems.append("n_particles out of range")
    if config.k < 1:
        problems.append("k out of range")
    if config.p not in (1, 2):
        problems.append("p out of range")
    if config.r < 0:
        problems.append("r out of range")
    if config.c1 + config.c2 >= 4:
        problems.append("c1+c2 ≥ 4")
    return problems


# --------------------------------------------------------------------------
# serialisation


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def to_record(config: HyperParams) -> str:
    """Flat ``key=value`` encoding, ``;``-separated so it fits in a CSV cell."""
    return ";".join(f"{n}={_fmt(v)}" for n, v in zip(PARAM_NAMES, astuple(config)))


def _coerce(name: str, text: str):
    return int(text) if name in _INT_PARAMS else float(text)


def from_record(text: str) -> HyperParams:
    values = {}
    for part in text.strip().split(";"):
        if not part:
            continue
        name, _, raw = part.partition("=")
        name = name.strip()
        if name not in PARAM_NAMES:
            raise ValueError(f"unknown hyperparameter {name!r}")
        values[name] = _coerce(name, raw.strip())
    missing = set(PARAM_NAMES) - set(values)
    if missing:
        raise ValueError(f"missing hyperparameters: {sorted(missing)}")
    return HyperParams(**values)


def config_from_mapping(row) -> HyperParams:
    return HyperParams(**{n: _coerce(n, str(row[n])) for n in PARAM_NAMES})


CSV_COLUMNS = PARAM_NAMES + ("topology",)


def dumps_space(space: ConfigSpace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    topo = space.topology.value if space.topology is not None else ""
    for hp in space:
        w.writerow([_fmt(v) for v in astuple(hp)] + [topo])
    return buf.getvalue()


def loads_space(text: str) -> ConfigSpace:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"config CSV header must be {','.join(CSV_COLUMNS)}")
    configs, topos = [], set()
    for row in reader:
        configs.append(config_from_mapping(row))
        topos.add(row["topology"])
    if len(topos) > 1:
        raise ValueError("config CSV mixes topologies")
    topo = topos.pop() if topos else ""
    if len(set(configs)) != len(configs):
        raise ValueError("duplicate configurations")
    return ConfigSpace(tuple(configs), TopologyKind.parse(topo) if topo else None)
