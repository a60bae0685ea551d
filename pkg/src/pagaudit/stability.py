"""Bootstrap replication of discovery runs and edge-stability aggregation.

Each replicate resamples the rows with replacement, reruns FCI with the
target declared a non-ancestor of every feature, and classifies every
feature against the target.  The report tallies, per feature, how often each
classification occurred; the headline number is the combined frequency of
definite- and possible-cause edges.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError, PagauditError
from .fci import FciConfig, fci_run
from .graph import BackgroundKnowledge, EdgeClass, classify_edge

__all__ = [
    "StabilityConfig",
    "FeatureStability",
    "StabilityReport",
    "bootstrap_replicate",
    "run_stability",
]

_CLASS_ORDER = (
    EdgeClass.DEFINITE_CAUSE,
    EdgeClass.POSSIBLE_CAUSE,
    EdgeClass.CONFOUNDED_ONLY,
    EdgeClass.NO_RELATION,
)


@dataclass
class StabilityConfig:
    """Replication settings: how many bootstrap replicates, the base seed the
    per-replicate generators derive from, the FCI settings, and the target."""

    target: str
    replicates: int = 50
    base_seed: int = 0
    fci: FciConfig = field(default_factory=FciConfig)
    subsample_fraction: float | None = None  # None: bootstrap with replacement, size n

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise InputError("need at least one replicate")
        if self.subsample_fraction is not None and not 0.0 < self.subsample_fraction <= 1.0:
            raise InputError("subsample fraction must be in (0, 1]")


@dataclass
class FeatureStability:
    """Classification counts for one feature over the successful replicates."""

    counts: dict[EdgeClass, int]
    denominator: int

    def frequency(self, cls: EdgeClass) -> float:
        return self.counts[cls] / self.denominator if self.denominator else 0.0

    @property
    def cause_frequency(self) -> float:
        return self.frequency(EdgeClass.DEFINITE_CAUSE) + self.frequency(
            EdgeClass.POSSIBLE_CAUSE
        )

    @property
    def modal_class(self) -> EdgeClass:
        return max(_CLASS_ORDER, key=lambda c: self.counts[c])


@dataclass
class StabilityReport:
    target: str
    replicates: int
    successes: int
    features: dict[str, FeatureStability]
    failures: list[tuple[int, str]] = field(default_factory=list)

    def to_json(self) -> str:
        obj = {
            "target": self.target,
            "replicates": self.replicates,
            "successes": self.successes,
            "failures": [{"replicate": i, "error": msg} for i, msg in self.failures],
            "features": {
                name: {
                    "counts": {c.value: fs.counts[c] for c in _CLASS_ORDER},
                    "frequencies": {
                        c.value: round(fs.frequency(c), 10) for c in _CLASS_ORDER
                    },
                    "cause_frequency": round(fs.cause_frequency, 10),
                }
                for name, fs in self.features.items()
            },
        }
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["feature", "def_cause", "poss_cause", "confounded", "none", "cause_frequency"]
        )
        for name, fs in self.features.items():
            writer.writerow(
                [name]
                + [f"{fs.frequency(c):.6f}" for c in _CLASS_ORDER]
                + [f"{fs.cause_frequency:.6f}"]
            )
        return buf.getvalue()


def bootstrap_replicate(d: Dataset, base_seed: int, index: int = 0) -> Dataset:
    """Resample n rows with replacement using a counter-based generator keyed
    by (base_seed, replicate index); the schema is unchanged."""
    if d.n < 1:
        raise InputError("cannot resample an empty dataset")
    key = np.array(
        [np.uint64(base_seed % (1 << 64)), np.uint64(index % (1 << 64))], dtype=np.uint64
    )
    rng = np.random.Generator(np.random.Philox(key=key))
    idx = rng.integers(0, d.n, size=d.n)
    return d.take_rows(idx)


def _subsample_replicate(d: Dataset, base_seed: int, index: int, fraction: float) -> Dataset:
    key = np.array(
        [np.uint64(base_seed % (1 << 64)), np.uint64(index % (1 << 64))], dtype=np.uint64
    )
    rng = np.random.Generator(np.random.Philox(key=key))
    m = max(1, int(round(fraction * d.n)))
    idx = rng.permutation(d.n)[:m]
    return d.take_rows(np.sort(idx))


def _one_replicate(
    d: Dataset, cfg: StabilityConfig, knowledge: BackgroundKnowledge | None, index: int
) -> dict[str, EdgeClass]:
    if cfg.subsample_fraction is None:
        rep = bootstrap_replicate(d, cfg.base_seed, index)
    else:
        rep = _subsample_replicate(d, cfg.base_seed, index, cfg.subsample_fraction)
    result = fci_run(rep, knowledge=knowledge, cfg=cfg.fci, target=cfg.target)
    return {
        name: classify_edge(result.graph, name, cfg.target)
        for name in d.names
        if name != cfg.target
    }


def run_stability(
    d: Dataset,
    cfg: StabilityConfig,
    knowledge: BackgroundKnowledge | None = None,
    threads: int = 1,
) -> StabilityReport:
    """Aggregate per-feature edge classifications over bootstrap replicates.

    Replicates are independent; ``threads`` bounds concurrent evaluation and
    never changes the result because aggregation folds in replicate order.
    Failed replicates are recorded and excluded from the denominators.
    """
    if not d.has(cfg.target):
        raise InputError(f"target {cfg.target!r} is not a column")
    features = [n for n in d.names if n != cfg.target]
    if not features:
        raise InputError("no feature columns besides the target")

    outcomes: list[dict[str, EdgeClass] | Exception] = [None] * cfg.replicates  # type: ignore

    def work(i: int):
        try:
            return _one_replicate(d, cfg, knowledge, i)
        except PagauditError as exc:
            return exc

    if threads <= 1:
        for i in range(cfg.replicates):
            outcomes[i] = work(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, res in enumerate(pool.map(work, range(cfg.replicates))):
                outcomes[i] = res

    counts = {name: {c: 0 for c in _CLASS_ORDER} for name in features}
    failures: list[tuple[int, str]] = []
    successes = 0
    for i, res in enumerate(outcomes):
        if isinstance(res, Exception):
            failures.append((i, str(res)))
            continue
        successes += 1
        for name, cls in res.items():
            counts[name][cls] += 1
    report = StabilityReport(
        target=cfg.target,
        replicates=cfg.replicates,
        successes=successes,
        features={
            name: FeatureStability(counts[name], successes) for name in features
        },
        failures=failures,
    )
    return report
