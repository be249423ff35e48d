"""Command-line front end: ``run``, ``sweep``, ``report`` and ``ingest-criteo``.

Outputs (all under ``--out``):

``summary.csv``
    ``policy,m,cost_spec,reward_model,T,reps,mean_regret,ci_low,ci_high``
``regret_path.csv``
    ``t,policy,mean_cum_regret``
``replications.csv``
    ``policy,m,cost_spec,rep,regret,follow_rate,fairness_violations``
``manifest.jsonl``
    One resolved config per line; any line re-fed via ``--config`` reproduces its summary row.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, ExperimentConfig
from .core import ValidationError
from .engine import AggregateResult, replicate

log = logging.getLogger("incentive_rec")

SUMMARY_HEADER = ("policy", "m", "cost_spec", "reward_model", "T", "reps", "mean_regret", "ci_low", "ci_high")
PATH_HEADER = ("t", "policy", "mean_cum_regret")
REPS_HEADER = ("policy", "m", "cost_spec", "rep", "regret", "follow_rate", "fairness_violations")
GRID_KEYS = ("policy", "m", "cost", "cost_b", "reward_model", "T")


def read_mapping(path) -> dict:
    """Flat YAML or JSON mapping (JSON is valid YAML)."""
    data = yaml.safe_load(Path(path).read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return data


def parse_config(path=None, overrides=None, env=None) -> ExperimentConfig:
    data = read_mapping(path) if path else {}
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_mapping(data, env=env)


def _flag_overrides(args) -> dict:
    out = {"seed": args.seed, "jobs": args.jobs, "out": args.out}
    if args.strict:
        out["strict"] = True
    for item in args.set or []:
        key, _, raw = item.partition("=")
        out[key.strip()] = yaml.safe_load(raw)
    return out


def summary_row(cfg: ExperimentConfig, agg: AggregateResult) -> list:
    return [
        cfg.policy, cfg.m, cfg.cost_spec, cfg.reward_model, cfg.T, cfg.n_reps,
        f"{agg.mean_regret:.4f}", f"{agg.ci_low:.4f}", f"{agg.ci_high:.4f}",
    ]


class OutputSet:
    """Append-mode writers for the three CSVs and the manifest."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        probe = self.dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
        self._init("summary.csv", SUMMARY_HEADER)
        self._init("regret_path.csv", PATH_HEADER)
        self._init("replications.csv", REPS_HEADER)
        (self.dir / "manifest.jsonl").write_text("")

    def _init(self, name, header):
        with open(self.dir / name, "w", newline="") as fh:
            csv.writer(fh).writerow(header)

    def _append(self, name, rows):
        with open(self.dir / name, "a", newline="") as fh:
            csv.writer(fh).writerows(rows)

    def add(self, cfg: ExperimentConfig, agg: AggregateResult):
        self._append("summary.csv", [summary_row(cfg, agg)])
        self._append(
            "regret_path.csv",
            ([t, cfg.policy, f"{v:.4f}"] for t, v in enumerate(agg.mean_path, start=1)),
        )
        self._append(
            "replications.csv",
            (
                [cfg.policy, cfg.m, cfg.cost_spec, rep, repr(float(r)), f"{f:.4f}", v]
                for rep, (r, f, v) in enumerate(zip(agg.regrets, agg.follow_rates, agg.violations_per_run))
            ),
        )
        with open(self.dir / "manifest.jsonl", "a") as fh:
            fh.write(json.dumps(cfg.to_mapping(), sort_keys=True) + "\n")


def run_cell(cfg: ExperimentConfig) -> AggregateResult:
    log.info("running %s m=%d %s T=%d reps=%d", cfg.policy, cfg.m, cfg.cost_spec, cfg.T, cfg.n_reps)
    return replicate(cfg, cfg.n_reps, jobs=cfg.jobs, label=cfg.label or cfg.policy)


def cmd_run(args) -> int:
    cfg = parse_config(args.config, _flag_overrides(args))
    if args.dry_run:
        print(yaml.safe_dump(cfg.to_mapping(), sort_keys=True), end="")
        return 0
    out = OutputSet(cfg.out)
    agg = run_cell(cfg)
    out.add(cfg, agg)
    print(",".join(SUMMARY_HEADER))
    print(",".join(str(x) for x in summary_row(cfg, agg)))
    return 0


def expand_grid(spec: dict) -> list:
    """Cartesian product of the list-valued grid keys over the base config."""
    grid = spec.get("grid") or {}
    if not grid or any(not v for v in grid.values()):
        raise ConfigError(["sweep needs a non-empty 'grid' mapping of lists"])
    bad = sorted(set(grid) - set(GRID_KEYS))
    if bad:
        raise ConfigError([f"grid key {k!r} not in {GRID_KEYS}" for k in bad])
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def cmd_sweep(args) -> int:
    spec = read_mapping(args.config) if args.config else {}
    base = {k: v for k, v in spec.items() if k not in ("grid", "per_policy")}
    per_policy = spec.get("per_policy") or {}
    cells = expand_grid(spec)
    overrides = _flag_overrides(args)
    if args.dry_run:
        for cell in cells:
            print(json.dumps(cell, sort_keys=True))
        return 0
    out = OutputSet(overrides.get("out") or base.get("out") or ExperimentConfig.out)
    failures = 0
    for cell in cells:
        try:
            data = {**base, **per_policy.get(cell.get("policy", base.get("policy")), {}), **cell}
            data.update({k: v for k, v in overrides.items() if v is not None})
            cfg = ExperimentConfig.from_mapping(data)
            out.add(cfg, run_cell(cfg))
        except (ValidationError, ValueError) as exc:
            failures += 1
            log.error("cell %s failed: %s", cell, exc)
    log.info("%d cells, %d failed", len(cells), failures)
    return 1 if failures == len(cells) else 0


def cmd_report(args) -> int:
    """Re-aggregate ``replications.csv`` into a summary, without re-running."""
    src = Path(args.out or "results")
    reps_path = src / "replications.csv"
    manifest_path = src / "manifest.jsonl"
    if not reps_path.exists():
        raise ValidationError(f"{reps_path} not found")
    configs = {}
    if manifest_path.exists():
        for line in manifest_path.read_text().splitlines():
            if line.strip():
                cfg = ExperimentConfig.from_mapping(json.loads(line), env={})
                configs[(cfg.policy, str(cfg.m), cfg.cost_spec)] = cfg
    groups = {}
    with open(reps_path, newline="") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault((row["policy"], row["m"], row["cost_spec"]), []).append(float(row["regret"]))
    writer = csv.writer(sys.stdout)
    writer.writerow(SUMMARY_HEADER)
    from .engine import percentile_band

    for key, values in groups.items():
        cfg = configs.get(key)
        lo, hi = percentile_band(values)
        mean = float(np.mean(values))
        writer.writerow([
            key[0], key[1], key[2],
            cfg.reward_model if cfg else "", cfg.T if cfg else "", len(values),
            f"{mean:.4f}", f"{min(lo, mean):.4f}", f"{max(hi, mean):.4f}",
        ])
    return 0


def cmd_ingest(args) -> int:
    from .criteo import ClusterArms, load_rows, write_manifest

    rng = np.random.default_rng(args.seed)
    rows = load_rows(args.path, args.max_rows, rng)
    if args.k > len(rows):
        raise ValidationError(f"K={args.k} exceeds the {len(rows)} rows")
    est = ClusterArms(n_clusters=args.k, random_state=args.seed).fit(rows)
    manifest = est.manifest()
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, out / "arms.json")
    print(json.dumps(manifest))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="incentive-rec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--strict", action="store_true", help="warn when k is below the incentive bound")
        p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    common(sub.add_parser("run", help="run one experiment cell"))
    common(sub.add_parser("sweep", help="run a grid of cells"))
    rep = sub.add_parser("report", help="re-aggregate existing replications")
    rep.add_argument("--out", help="directory holding replications.csv")
    ing = sub.add_parser("ingest-criteo", help="cluster an uplift CSV into arm means")
    ing.add_argument("path")
    ing.add_argument("-k", "--k", type=int, default=20)
    ing.add_argument("--seed", type=int, default=0)
    ing.add_argument("--max-rows", type=int, default=100_000)
    ing.add_argument("--out")
    return parser


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "report": cmd_report, "ingest-criteo": cmd_ingest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
