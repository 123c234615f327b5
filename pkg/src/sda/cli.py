"""Command-line entry point: ``sda test``, ``sda simulate``, ``sda screen``.

Exit status is 0 on success, 2 for an invalid configuration and 3 for bad
input data. Every table carries the full run configuration on a leading
``# config:`` line; wall-clock timing is kept in a separate JSON field so
that re-running a configuration reproduces the tables byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset, OutcomeKind, center_columns, load_csv
from .errors import ConfigError, DataError, DegenerateVarianceError, SdaError
from .inference import DEFAULT_DRAWS, DEFAULT_FDR_DRAWS, StatKind, analyze_variable
from .screening import CorrMethod, auto_gamma, bh_adjust, outcome_screen, sis_screen
from .simulation import load_scenario, run_scenario
from .slicing import SlicePlan, slices_for

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3


@dataclasses.dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None = None
    outcome: tuple[str, ...] = ()
    outcome_kind: str = "continuous"
    delimiter: str = ","
    stat: str = "cvm"
    h: int | None = None
    draws: int = DEFAULT_DRAWS
    alpha: float = 0.05
    fdr_q: float | None = None
    screen_keep: int | None = None
    gamma: float | str | None = None  # a fraction or "auto"
    method: str | None = None
    targets: tuple[str, ...] = ()
    scale: bool = False
    folds: int = 10
    seed: int | None = 0
    workers: int = 1
    out: str = "."
    scenario: str | None = None
    replicates: int | None = None
    dump_fits: bool = False
    dump_slices: bool = False

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["outcome"] = list(self.outcome)
        d["targets"] = list(self.targets)
        # workers never changes results, so it stays out of the reproducible record
        d.pop("workers")
        return d


def _parse_gamma(text: str) -> str | float:
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gamma must be a number or 'auto', got {text!r}") from None


def _env_workers() -> int:
    raw = os.environ.get("SDA_WORKERS")
    if raw is None:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SDA_WORKERS must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None, help="worker processes (default $SDA_WORKERS or 1)")
        p.add_argument("--out", default=".", help="output directory")

    def data_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="CSV/TSV file with a header row")
        p.add_argument("--outcome", required=True, nargs="+", help="outcome column (time and event for survival)")
        p.add_argument("--outcome-kind", choices=[k.value for k in OutcomeKind], default="continuous")
        p.add_argument("--delimiter", default=",")
        p.add_argument(
            "--method", choices=[m.value for m in CorrMethod], default=None,
            help="correlation for screening (default: spearman against the outcome, pearson for SIS)",
        )
        p.add_argument("--scale", action="store_true", help="scale predictors to unit variance after centering")

    t = sub.add_parser("test", help="test each candidate predictor for conditional association")
    data_args(t)
    t.add_argument("--stat", choices=["ks", "cvm", "both"], default="cvm")
    t.add_argument("--h", type=int, default=None, help="number of slices (default ceil(n^(1/3)))")
    t.add_argument("--draws", type=int, default=None, help="bootstrap draws (default 1000, 10000 with --fdr-q)")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--fdr-q", type=float, default=None, help="apply Benjamini-Hochberg at this FDR level")
    t.add_argument("--screen-keep", type=int, default=None, help="test only the top-K predictors by outcome correlation")
    t.add_argument("--gamma", type=_parse_gamma, default=None, help="SIS fraction for conditioning sets, or 'auto'")
    t.add_argument("--targets", nargs="+", default=(), help="predictor names or 0-based indices to test")
    t.add_argument("--folds", type=int, default=10)
    t.add_argument("--dump-fits", action="store_true")
    t.add_argument("--dump-slices", action="store_true")
    common(t)

    s = sub.add_parser("simulate", help="run a Monte-Carlo power scenario")
    s.add_argument("--scenario", required=True, help="bundled scenario name or JSON file")
    s.add_argument("--replicates", type=int, default=None, help="override the scenario's replicate count")
    common(s)

    c = sub.add_parser("screen", help="correlation screening against the outcome or a predictor")
    data_args(c)
    c.add_argument("--keep", "--screen-keep", dest="screen_keep", type=int, default=None)
    c.add_argument("--gamma", type=_parse_gamma, default=None)
    c.add_argument("--targets", nargs="+", default=(), help="predictors to SIS-screen (default all)")
    common(c)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    workers = args.workers if args.workers is not None else _env_workers()
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    kw = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    kw["workers"] = workers
    if "outcome" in kw:
        kw["outcome"] = tuple(kw["outcome"])
    if "targets" in kw:
        kw["targets"] = tuple(str(t) for t in kw["targets"])
    if args.command == "test":
        if args.draws is None:
            kw["draws"] = DEFAULT_FDR_DRAWS if args.fdr_q is not None else DEFAULT_DRAWS
    if args.command == "simulate":
        kw.setdefault("seed", None)
    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.seed is not None and cfg.seed < 0:
        raise ConfigError("seed must be >= 0")
    if cfg.command == "simulate":
        if cfg.replicates is not None and cfg.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        return
    if cfg.outcome_kind == "survival" and len(cfg.outcome) != 2:
        raise ConfigError("survival outcome needs two columns: --outcome TIME EVENT")
    if cfg.outcome_kind != "survival" and len(cfg.outcome) != 1:
        raise ConfigError("--outcome takes exactly one column for this outcome kind")
    if not 0 < cfg.alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {cfg.alpha}")
    if cfg.draws < 1:
        raise ConfigError("draws must be >= 1")
    if cfg.fdr_q is not None and not 0 < cfg.fdr_q < 1:
        raise ConfigError(f"fdr-q must lie in (0, 1), got {cfg.fdr_q}")
    if cfg.h is not None and cfg.h < 1:
        raise ConfigError("h must be >= 1")
    if cfg.folds < 2:
        raise ConfigError("folds must be >= 2")
    if cfg.screen_keep is not None and cfg.screen_keep < 1:
        raise ConfigError("screen-keep must be >= 1")
    if isinstance(cfg.gamma, float) and not 0 < cfg.gamma < 1:
        raise ConfigError(f"gamma must lie in (0, 1), got {cfg.gamma}")
    if cfg.command == "screen" and cfg.screen_keep is None and cfg.gamma is None:
        raise ConfigError("screen needs --keep or --gamma")


def _config_line(cfg: RunConfig) -> str:
    return "# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n"


def _write_table(path: Path, cfg: RunConfig, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with path.open("w", newline="") as fh:
        fh.write(_config_line(cfg))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _load(cfg: RunConfig) -> Dataset:
    outcome = cfg.outcome[0] if len(cfg.outcome) == 1 else cfg.outcome
    d = load_csv(cfg.input, outcome, cfg.outcome_kind, cfg.delimiter)
    return center_columns(d, scale=cfg.scale)


def _gamma_value(cfg: RunConfig, n: int) -> float | None:
    if cfg.gamma == "auto":
        return auto_gamma(n)
    return cfg.gamma


# Per-process state for the test worker pool.
_WORKER: dict = {}


def _init_worker(d: Dataset, plan: SlicePlan, cfg: RunConfig, gamma: float | None) -> None:
    _WORKER.update(d=d, plan=plan, cfg=cfg, gamma=gamma)


def _test_one(i: int) -> tuple[int, dict, dict, int]:
    d, plan, cfg, gamma = _WORKER["d"], _WORKER["plan"], _WORKER["cfg"], _WORKER["gamma"]
    kinds = (StatKind.KS, StatKind.CVM) if cfg.stat == "both" else (StatKind(cfg.stat),)
    screen = None
    if gamma is not None:
        screen = sis_screen(d, i, gamma, cfg.method or "pearson").kept
    res = analyze_variable(
        d, i, kinds=kinds, plan=plan, l_draws=cfg.draws, alpha=cfg.alpha,
        screen=screen, seed=cfg.seed, folds=cfg.folds,
    )
    outcomes = {k.value: o.to_dict() for k, o in res.outcomes.items()}
    return i, outcomes, res.fit.to_dict(), int(res.fit.predictors.size)


def _candidates(cfg: RunConfig, d: Dataset) -> tuple[list[int], dict]:
    info: dict = {}
    if cfg.targets:
        idx = [d.column_index(t) for t in cfg.targets]
    else:
        idx = list(range(d.p))
    if cfg.screen_keep is not None:
        if cfg.screen_keep > d.p:
            raise ConfigError(f"screen-keep {cfg.screen_keep} exceeds p={d.p}")
        kept, corr = outcome_screen(d, cfg.screen_keep, cfg.method or "spearman")
        chosen = set(int(j) for j in kept)
        idx = [j for j in idx if j in chosen]
        info = {"outcome_screen": {"kept": [int(j) for j in kept], "correlations": corr.tolist()}}
    return idx, info


def cmd_test(cfg: RunConfig) -> int:
    start = time.perf_counter()
    d = _load(cfg)
    gamma = _gamma_value(cfg, d.n)
    plan = slices_for(d, cfg.h)
    targets, screen_info = _candidates(cfg, d)
    if cfg.workers > 1 and len(targets) > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(d, plan, cfg, gamma)) as pool:
            results = list(pool.map(_test_one, targets))
    else:
        _init_worker(d, plan, cfg, gamma)
        results = [_test_one(i) for i in targets]

    kinds = ["ks", "cvm"] if cfg.stat == "both" else [cfg.stat]
    fdr: dict[str, dict] = {}
    adjusted: dict[str, np.ndarray] = {}
    fdr_rejected: dict[str, np.ndarray] = {}
    if cfg.fdr_q is not None and results:
        for k in kinds:
            rep = bh_adjust([r[1][k]["p_value"] for r in results], cfg.fdr_q)
            adjusted[k] = rep.adjusted
            fdr_rejected[k] = rep.rejected_mask
            fdr[k] = {
                "q": cfg.fdr_q,
                "threshold_rank": rep.threshold_rank,
                "rejected": [int(results[j][0]) for j in rep.rejected],
            }

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["index", "name", "kind", "statistic", "p_value", "critical_value", "rejected",
              "conditioning_size", "H", "degenerate_slices"]
    if fdr:
        header += ["adjusted_p", "fdr_rejected"]
    rows = []
    for pos, (i, outcomes, _, csize) in enumerate(results):
        for k in kinds:
            o = outcomes[k]
            row = [i, d.column_names[i], k, _fmt(o["statistic"]), _fmt(o["p_value"]), _fmt(o["critical_value"]),
                   int(o["rejected"]), csize, o["H"], ";".join(str(h) for h in o["degenerate_slices"])]
            if fdr:
                row += [_fmt(adjusted[k][pos]), int(fdr_rejected[k][pos])]
            rows.append(row)
    _write_table(out / "results.csv", cfg, header, rows)
    if fdr:
        fdr_rows = [[results[pos][0], k, _fmt(results[pos][1][k]["p_value"]), _fmt(adjusted[k][pos]),
                     int(fdr_rejected[k][pos])] for k in kinds for pos in range(len(results))]
        _write_table(out / "fdr.csv", cfg, ["index", "kind", "p_value", "adjusted_p", "rejected"], fdr_rows)
    if cfg.dump_fits:
        _write_json(out / "fits.json", {"config": cfg.to_dict(), "fits": [r[2] for r in results]})
    if cfg.dump_slices:
        _write_json(out / "slices.json", {"config": cfg.to_dict(), "plan": plan.to_dict()})
    summary = {
        "config": cfg.to_dict(),
        "n": d.n,
        "p": d.p,
        "h": plan.h_count,
        "gamma": gamma,
        "constant_columns": list(d.constant_columns),
        "results": [dict(r[1], conditioning_size=r[3]) for r in results],
        "fdr": fdr,
        **screen_info,
        "timing": {"runtime_seconds": time.perf_counter() - start, "workers": cfg.workers},
    }
    _write_json(out / "summary.json", summary)

    for i, outcomes, _, csize in results:
        parts = " ".join(
            f"{k}={outcomes[k]['statistic']:.4f} p={outcomes[k]['p_value']:.4g}"
            f"{' *' if outcomes[k]['rejected'] else ''}"
            for k in kinds
        )
        print(f"{d.column_names[i]}: {parts} conditioning={csize}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    scenario = load_scenario(cfg.scenario)
    if cfg.replicates is not None:
        scenario = dataclasses.replace(scenario, replicates=cfg.replicates)
    if cfg.seed is not None:
        scenario = dataclasses.replace(scenario, seed=cfg.seed)
    report = run_scenario(scenario, workers=cfg.workers)
    csv_path, _ = report.write(cfg.out)
    print(f"wrote {csv_path}")
    for g in report.groups:
        if g.variables:
            print(f"beta={g.label:>5}  ks={g.ks_rate:.3f}  cvm={g.cvm_rate:.3f}  (variables={g.variables})")
    return EXIT_OK


def cmd_screen(cfg: RunConfig) -> int:
    d = _load(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    if cfg.screen_keep is not None:
        if cfg.screen_keep > d.p:
            raise ConfigError(f"keep {cfg.screen_keep} exceeds p={d.p}")
        kept, corr = outcome_screen(d, cfg.screen_keep, cfg.method or "spearman")
        rows += [["outcome", rank, int(j), d.column_names[j], _fmt(c)] for rank, (j, c) in enumerate(zip(kept, corr))]
    gamma = _gamma_value(cfg, d.n)
    if gamma is not None:
        targets = [d.column_index(t) for t in cfg.targets] if cfg.targets else range(d.p)
        for i in targets:
            s = sis_screen(d, i, gamma, cfg.method or "pearson")
            rows += [[d.column_names[i], rank, int(j), d.column_names[j], _fmt(c)]
                     for rank, (j, c) in enumerate(zip(s.kept, s.correlations))]
    _write_table(out / "screen.csv", cfg, ["target", "rank", "index", "name", "correlation"], rows)
    _write_json(out / "screen.json", {"config": cfg.to_dict(), "gamma": gamma, "rows": len(rows)})
    print(f"wrote {out / 'screen.csv'} ({len(rows)} rows)")
    return EXIT_OK


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "screen": cmd_screen}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DegenerateVarianceError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
