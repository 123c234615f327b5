"""Monte-Carlo harness: empirical rejection rates grouped by true coefficient."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ._seeds import derive_seed
from .dataset import Dataset, center_columns
from .errors import ConfigError
from .inference import StatKind, analyze_variable
from .simgen import (
    SIGNAL_VALUES,
    Regression,
    Setting,
    block_precision,
    generate_coefficients,
    generate_response,
    sample_gaussian,
    smallworld_precision,
)
from .slicing import slices_for

GROUPS = (*SIGNAL_VALUES, 0.0)
GROUP_LABELS = ("0.2", "-0.4", "0.6", "-0.8", "1.0", "0")


@dataclass(frozen=True)
class PrecisionSpec:
    kind: str = "block"  # "block" or "smallworld"
    q: int = 5
    e: int = 5
    rewire_prob: float = 0.25
    tau: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("block", "smallworld"):
            raise ConfigError(f"unknown precision kind {self.kind!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    p: int
    precision: PrecisionSpec = field(default_factory=PrecisionSpec)
    setting: str = "S1"  # S1, S2, or "null" for b = 0
    q: int = 5
    regression: str = "R1"
    replicates: int = 200
    alpha: float = 0.05
    seed: int = 0
    h: int | None = None
    draws: int = 1000
    folds: int = 10
    tested: tuple[int, ...] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if isinstance(self.precision, dict):
            object.__setattr__(self, "precision", PrecisionSpec(**self.precision))
        try:
            Regression(self.regression)
        except ValueError:
            raise ConfigError(f"unknown regression tag {self.regression!r}") from None
        if self.setting != "null":
            try:
                Setting(self.setting)
            except ValueError:
                raise ConfigError(f"unknown coefficient setting {self.setting!r}") from None
            if self.p < 5 * self.q:
                raise ConfigError(f"setting {self.setting} needs p >= 5q")
        if self.n < 4 or self.p < 2:
            raise ConfigError("need n >= 4 and p >= 2")
        if self.replicates < 1 or self.draws < 1:
            raise ConfigError("replicates and draws must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.precision.kind == "block" and self.p % self.precision.q:
            raise ConfigError("block size must divide p")
        if self.tested is not None:
            t = tuple(int(j) for j in self.tested)
            if any(not 0 <= j < self.p for j in t):
                raise ConfigError("tested index out of range")
            object.__setattr__(self, "tested", t)

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tested"] = list(self.tested) if self.tested is not None else None
        return d

    def coefficients(self) -> np.ndarray:
        if self.setting == "null":
            return np.zeros(self.p)
        return generate_coefficients(self.setting, self.q, self.p)

    def tested_indices(self) -> np.ndarray:
        if self.tested is not None:
            return np.array(self.tested, dtype=int)
        return np.arange(min(100, self.p))


def load_scenario(name_or_path: str | Path) -> ScenarioConfig:
    """Load a bundled scenario by name, or a JSON scenario file by path."""
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"scenario file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad scenario JSON: {exc}") from None
    else:
        res = resources.files("sda") / "scenarios" / f"{name_or_path}.json"
        if not res.is_file():
            raise ConfigError(f"unknown bundled scenario {name_or_path!r}")
        data = json.loads(res.read_text())
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    return ScenarioConfig.from_dict(data)


def bundled_scenarios() -> list[str]:
    root = resources.files("sda") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


@dataclass
class ReplicateResult:
    index: int
    ks: np.ndarray
    cvm: np.ndarray
    delta: float = 0.0


def simulate_dataset(cfg: ScenarioConfig, r: int) -> tuple[Dataset, float]:
    """Replicate ``r`` of a scenario as a centered dataset, plus the PD repair shift."""
    delta = 0.0
    if cfg.precision.kind == "block":
        theta = block_precision(cfg.p, cfg.precision.q)
    else:
        sw = smallworld_precision(
            cfg.p, cfg.precision.e, derive_seed(cfg.seed, r, 2),
            rewire_prob=cfg.precision.rewire_prob, tau=cfg.precision.tau,
        )
        theta, delta = sw.theta, sw.delta
    x = sample_gaussian(theta, cfg.n, derive_seed(cfg.seed, r, 0))
    y = generate_response(x, cfg.coefficients(), cfg.regression, derive_seed(cfg.seed, r, 1))
    return center_columns(Dataset(x=x, y=y)), delta


def run_replicate(cfg: ScenarioConfig, r: int) -> ReplicateResult:
    d, delta = simulate_dataset(cfg, r)
    plan = slices_for(d, cfg.h)
    tested = cfg.tested_indices()
    ks = np.zeros(tested.size, dtype=bool)
    cvm = np.zeros(tested.size, dtype=bool)
    test_seed = derive_seed(cfg.seed, r, 3)
    for k, i in enumerate(tested):
        res = analyze_variable(
            d, int(i), plan=plan, l_draws=cfg.draws, alpha=cfg.alpha, seed=test_seed, folds=cfg.folds
        )
        ks[k] = res.outcomes[StatKind.KS].rejected
        cvm[k] = res.outcomes[StatKind.CVM].rejected
    return ReplicateResult(r, ks, cvm, delta)


def _run_one(args: tuple[ScenarioConfig, int]) -> ReplicateResult:
    return run_replicate(*args)


@dataclass
class GroupRate:
    beta: float
    label: str
    variables: int
    ks_rate: float
    cvm_rate: float
    ks_se: float
    cvm_se: float


@dataclass
class PowerReport:
    config: ScenarioConfig
    groups: list[GroupRate]
    ks_rejections: np.ndarray  # replicates x tested
    cvm_rejections: np.ndarray
    deltas: list[float]
    runtime_seconds: float = 0.0

    def group(self, beta: float) -> GroupRate:
        for g in self.groups:
            if np.isclose(g.beta, beta):
                return g
        raise KeyError(beta)

    def table_row(self) -> dict:
        cfg = self.config
        row = {
            "scenario": cfg.name,
            "setting": cfg.setting,
            "regression": cfg.regression,
            "precision": cfg.precision.kind,
            "n": cfg.n,
            "p": cfg.p,
        }
        for g in self.groups:
            row[f"ks_{g.label}"] = "" if np.isnan(g.ks_rate) else f"{g.ks_rate:.3f}"
            row[f"cvm_{g.label}"] = "" if np.isnan(g.cvm_rate) else f"{g.cvm_rate:.3f}"
        return row

    def metadata(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "groups": [asdict(g) for g in self.groups],
            "pd_repair_deltas": self.deltas,
            "timing": {"runtime_seconds": self.runtime_seconds},
        }

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        row = self.table_row()
        csv_path = out / "power.csv"
        with csv_path.open("w", newline="") as fh:
            fh.write("# config: " + json.dumps(self.config.to_dict(), sort_keys=True) + "\n")
            w = csv.DictWriter(fh, fieldnames=list(row), lineterminator="\n")
            w.writeheader()
            w.writerow(row)
        json_path = out / "power.json"
        json_path.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _rate(rejections: np.ndarray, cols: np.ndarray) -> tuple[float, float]:
    if cols.size == 0:
        return float("nan"), float("nan")
    per_rep = rejections[:, cols].mean(axis=1)
    se = float(per_rep.std(ddof=1) / np.sqrt(per_rep.size)) if per_rep.size > 1 else 0.0
    return float(per_rep.mean()), se


def summarize(cfg: ScenarioConfig, results: list[ReplicateResult], runtime: float = 0.0) -> PowerReport:
    results = sorted(results, key=lambda r: r.index)
    ks = np.array([r.ks for r in results])
    cvm = np.array([r.cvm for r in results])
    b = cfg.coefficients()[cfg.tested_indices()]
    groups = []
    for beta, label in zip(GROUPS, GROUP_LABELS):
        cols = np.flatnonzero(np.isclose(b, beta))
        ks_rate, ks_se = _rate(ks, cols)
        cvm_rate, cvm_se = _rate(cvm, cols)
        groups.append(GroupRate(beta, label, int(cols.size), ks_rate, cvm_rate, ks_se, cvm_se))
    return PowerReport(cfg, groups, ks, cvm, [r.delta for r in results], runtime)


def run_scenario(cfg: ScenarioConfig, workers: int = 1) -> PowerReport:
    """Run every replicate and tabulate KS/CvM rejection rates by coefficient group.

    Replicate ``r`` draws all of its randomness from seeds derived from
    ``(cfg.seed, r)``, so the report does not depend on ``workers``.
    """
    start = time.perf_counter()
    jobs = [(cfg, r) for r in range(cfg.replicates)]
    if workers <= 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return summarize(cfg, results, time.perf_counter() - start)
