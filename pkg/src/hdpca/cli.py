"""Command-line front end.

Four subcommands: ``simulate`` (synthetic sweep), ``analyze`` (sweep by
subsampling a data file), ``estimate`` (estimators on one dataset, with
a comparison summary), ``report`` (merge a prior run's CSVs into one
ranked document).

Configs are flat key=value text mapping one-to-one onto ExperimentConfig;
a manifest.json from an earlier run is accepted anywhere a config is. All
numeric output is 17 significant digits, every file opens with the
resolved config's hash, and rerunning a manifest reproduces the same
bytes no matter the thread count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .core import (
    METHOD_ORDER,
    condition_number,
    fmt17,
    frobenius_distance,
    matrix_to_csv,
    numerical_rank,
    sym_eigen,
)
from .errors import HdpcaError, InputError, NumericalError, SweepError
from .estimators import estimate
from .ingest import load_expression_table
from .simlab import (
    ExperimentConfig,
    SweepResult,
    generate_population_sigma,
    run_sweep,
    sample_mvn,
)
from .stats_tests import levene_test, matrix_element_groups

CONFIG_KEYS = (
    "p",
    "n_values",
    "m",
    "estimators",
    "master_seed",
    "sigma_seed",
    "sigma_entry_mean",
    "data_source",
    "pcs_reported",
)

TABLE_FILES = {
    "overdispersion": "overdispersion.csv",
    "explained_pct": "explained.csv",
    "cse": "cse.csv",
}


# ---------------------------------------------------------------------------
# config parsing and canonicalization
# ---------------------------------------------------------------------------

def _parse_kv_text(text: str, source: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise InputError(f"{source}: line {lineno}: expected key=value")
        key, _, val = s.partition("=")
        key = key.strip().lower()
        if key not in CONFIG_KEYS:
            raise InputError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in raw:
            raise InputError(f"{source}: line {lineno}: duplicate key {key!r}")
        raw[key] = val.strip()
    return raw


def load_raw_config(path) -> dict:
    """Read a config file or a manifest.json; returns key -> string."""
    fp = Path(path)
    if not fp.exists():
        raise InputError(f"config not found: {path}")
    text = fp.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
        if "config" in obj and isinstance(obj["config"], dict):
            obj = obj["config"]
        raw = {}
        for key, val in obj.items():
            k = str(key).lower()
            if k not in CONFIG_KEYS:
                raise InputError(f"{path}: unknown key {key!r}")
            raw[k] = str(val)
        return raw
    return _parse_kv_text(text, str(path))


def _parse_int(raw: dict, key: str, default=None) -> int:
    if key not in raw:
        if default is None:
            raise InputError(f"config is missing required key {key!r}")
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise InputError(f"config key {key}={raw[key]!r} is not an integer") from None


def _parse_n_values(text: str):
    text = text.strip()
    if ":" in text:
        lo_s, _, hi_s = text.partition(":")
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError:
            raise InputError(f"bad n_values range {text!r}") from None
        if hi < lo:
            raise InputError(f"bad n_values range {text!r}: end below start")
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise InputError(f"bad n_values list {text!r}") from None


def resolve_config(
    raw: dict,
    seed_override: int | None = None,
    pcs_override: int | None = None,
    defaults: dict | None = None,
) -> ExperimentConfig:
    """Build a validated ExperimentConfig from raw strings plus overrides."""
    raw = dict(raw)
    for key, val in (defaults or {}).items():
        raw.setdefault(key, val)

    p = _parse_int(raw, "p")
    if "n_values" not in raw:
        raise InputError("config is missing required key 'n_values'")
    n_values = _parse_n_values(raw["n_values"])
    m = _parse_int(raw, "m")
    estimators = tuple(
        tok.strip() for tok in raw.get("estimators", ",".join(METHOD_ORDER)).split(",")
        if tok.strip()
    )
    master_seed = _parse_int(raw, "master_seed", 0)
    if seed_override is not None:
        master_seed = seed_override
    sigma_seed = _parse_int(raw, "sigma_seed", 0)
    try:
        sigma_entry_mean = float(raw.get("sigma_entry_mean", "0"))
    except ValueError:
        raise InputError(
            f"config key sigma_entry_mean={raw['sigma_entry_mean']!r} is not a number"
        ) from None
    data_source = raw.get("data_source", "synthetic")
    pcs = _parse_int(raw, "pcs_reported", 1)
    if pcs_override is not None:
        pcs = pcs_override
    return ExperimentConfig(
        p=p,
        n_values=n_values,
        m=m,
        estimators=estimators,
        master_seed=master_seed,
        sigma_seed=sigma_seed,
        sigma_entry_mean=sigma_entry_mean,
        data_source=data_source,
        pcs_reported=pcs,
    )


def canonical_config(config: ExperimentConfig) -> dict:
    """The resolved config as the exact strings that get hashed and stored."""
    return {
        "p": str(config.p),
        "n_values": ",".join(str(n) for n in config.n_values),
        "m": str(config.m),
        "estimators": ",".join(config.estimators),
        "master_seed": str(config.master_seed),
        "sigma_seed": str(config.sigma_seed),
        "sigma_entry_mean": fmt17(config.sigma_entry_mean),
        "data_source": config.data_source,
        "pcs_reported": str(config.pcs_reported),
    }


def config_hash(config: ExperimentConfig) -> str:
    canon = canonical_config(config)
    blob = "\n".join(f"{k}={canon[k]}" for k in sorted(canon)) + "\n"
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# output writing
# ---------------------------------------------------------------------------

def _hash_line(h: str, markdown: bool = False) -> str:
    return f"<!-- config_hash: {h} -->" if markdown else f"# config_hash: {h}"


def _write(out_dir: Path, name: str, content: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    fp = out_dir / name
    fp.write_text(content, encoding="utf-8")
    return fp


def _metric_files(config: ExperimentConfig):
    pairs = [(base, TABLE_FILES[base]) for base in TABLE_FILES]
    for k in range(2, config.pcs_reported + 1):
        pairs.append((f"explained_pct_pc{k}", f"explained_pc{k}.csv"))
        pairs.append((f"cse_pc{k}", f"cse_pc{k}.csv"))
    return pairs


def _write_sweep_outputs(
    result: SweepResult, out_dir: Path, h: str, wall_s: float, threads: int
) -> None:
    cfg = result.config
    _write(out_dir, "sweep_result.csv", _hash_line(h) + "\n" + result.to_csv())
    for metric, fname in _metric_files(cfg):
        lines = [_hash_line(h), "n,POP," + ",".join(cfg.estimators)]
        for n in cfg.n_values:
            cells = [str(n), fmt17(result.value(n, "POP", metric))]
            cells += [fmt17(result.value(n, mth, metric)) for mth in cfg.estimators]
            lines.append(",".join(cells))
        _write(out_dir, fname, "\n".join(lines) + "\n")
    manifest = {
        "config": canonical_config(cfg),
        "config_hash": h,
        "package_version": __version__,
        "created_unix": int(time.time()),
        "wall_time_s": round(wall_s, 3),
        "threads_used": threads,
    }
    _write(out_dir, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = resolve_config(load_raw_config(args.config), args.seed, args.pcs)
    if config.data_source != "synthetic":
        raise InputError("simulate requires data_source=synthetic (see analyze)")
    h = config_hash(config)
    t0 = time.perf_counter()
    result = run_sweep(config, threads=args.threads)
    _write_sweep_outputs(result, Path(args.out), h, time.perf_counter() - t0, args.threads)
    return 0


def cmd_analyze(args) -> int:
    config = resolve_config(
        load_raw_config(args.config),
        args.seed,
        args.pcs,
        defaults={"n_values": "5:15", "m": "100"},
    )
    if not config.data_source.startswith("file:"):
        raise InputError("analyze requires data_source=file:<path>")
    h = config_hash(config)
    t0 = time.perf_counter()
    result = run_sweep(config, threads=args.threads)
    _write_sweep_outputs(result, Path(args.out), h, time.perf_counter() - t0, args.threads)
    return 0


def _estimate_dataset(config: ExperimentConfig):
    """One dataset per the config: seeded synthetic draw, or the whole file."""
    if config.data_source == "synthetic":
        if len(config.n_values) != 1:
            raise InputError("estimate needs exactly one n in n_values")
        n = config.n_values[0]
        sigma = generate_population_sigma(
            config.p, config.sigma_seed, config.sigma_entry_mean
        )
        x = sample_mvn(sigma, n, [config.master_seed, n, 0])
        return x, sigma
    table = load_expression_table(config.data_source[len("file:") :])
    if table.data.p != config.p:
        raise InputError(
            f"config p={config.p} does not match table width {table.data.p}"
        )
    return table.data.values, None


def cmd_estimate(args) -> int:
    raw = load_raw_config(args.config)
    defaults = None
    if raw.get("data_source", "synthetic").startswith("file:"):
        defaults = {"n_values": "2", "m": "1"}
    else:
        defaults = {"m": "1"}
    config = resolve_config(raw, args.seed, args.pcs, defaults=defaults)
    h = config_hash(config)
    x, sigma = _estimate_dataset(config)
    out_dir = Path(args.out)

    estimates = {}
    for mth in config.estimators:
        est = estimate(x, mth)
        estimates[mth] = est.matrix
        _write(
            out_dir,
            f"matrix_{mth}.csv",
            matrix_to_csv(est.matrix, header_lines=[f"config_hash: {h}"]),
        )

    per_method = []
    for mth in config.estimators:
        m = estimates[mth]
        row = {
            "method": mth,
            "condition_number": fmt17(condition_number(m)),
            "numerical_rank": str(numerical_rank(m)),
        }
        if sigma is not None:
            row["frobenius_to_pop"] = fmt17(frobenius_distance(m, sigma))
        per_method.append(row)

    pairwise = []
    for i, ma in enumerate(config.estimators):
        for mb in config.estimators[i + 1 :]:
            diag_pair, off_pair = matrix_element_groups(estimates[ma], estimates[mb])
            ld = levene_test(diag_pair)
            lo = levene_test(off_pair)
            pairwise.append(
                {
                    "pair": f"{ma} vs {mb}",
                    "diag_statistic": fmt17(ld.statistic),
                    "diag_p": fmt17(ld.p_value),
                    "offdiag_statistic": fmt17(lo.statistic),
                    "offdiag_p": fmt17(lo.p_value),
                }
            )

    if args.format == "csv":
        lines = [_hash_line(h), "section,subject,quantity,value"]
        for row in per_method:
            for key in ("frobenius_to_pop", "condition_number", "numerical_rank"):
                if key in row:
                    lines.append(f"per_method,{row['method']},{key},{row[key]}")
        for row in pairwise:
            for key in ("diag_statistic", "diag_p", "offdiag_statistic", "offdiag_p"):
                lines.append(f"pairwise,{row['pair']},levene_{key},{row[key]}")
        _write(out_dir, "summary.csv", "\n".join(lines) + "\n")
    else:
        lines = [_hash_line(h, markdown=True), "", "# Estimate summary", ""]
        cols = ["method", "condition_number", "numerical_rank"]
        if sigma is not None:
            cols.append("frobenius_to_pop")
        lines.append("| " + " | ".join(cols) + " |")
        lines.append("|" + "---|" * len(cols))
        for row in per_method:
            lines.append("| " + " | ".join(row.get(c, "") for c in cols) + " |")
        if pairwise:
            lines += ["", "## Variance homogeneity (Levene)", ""]
            lines.append(
                "| pair | diag statistic | diag p | offdiag statistic | offdiag p |"
            )
            lines.append("|---|---|---|---|---|")
            for row in pairwise:
                lines.append(
                    f"| {row['pair']} | {row['diag_statistic']} | {row['diag_p']} "
                    f"| {row['offdiag_statistic']} | {row['offdiag_p']} |"
                )
        _write(out_dir, "summary.md", "\n".join(lines) + "\n")
    return 0


def _read_table_csv(path: Path):
    """Read one wide metric table: returns (methods, {n: {method: value}})."""
    if not path.exists():
        raise InputError(f"missing table file: {path}")
    rows = [
        line for line in path.read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    header = rows[0].split(",")
    if header[0] != "n" or header[1] != "POP":
        raise InputError(f"{path}: unexpected table header")
    methods = header[2:]
    table = {}
    for line in rows[1:]:
        cells = line.split(",")
        n = int(cells[0])
        table[n] = {"POP": cells[1]}
        table[n].update(dict(zip(methods, cells[2:])))
    return methods, table


def cmd_report(args) -> int:
    src = Path(args.config)
    run_dir = src.parent if src.is_file() else src
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"no manifest.json under {run_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    h = manifest.get("config_hash", "")

    sections = []
    for metric, fname in TABLE_FILES.items():
        methods, table = _read_table_csv(run_dir / fname)
        sections.append((metric, fname, methods, table))

    def ranked(method_values: dict, pop: float):
        gaps = {mth: abs(float(v) - pop) for mth, v in method_values.items()}
        order = sorted(gaps, key=lambda mth: (gaps[mth], METHOD_ORDER.index(mth)))
        return order, gaps

    out_dir = Path(args.out)
    if args.format == "csv":
        lines = [_hash_line(h), "metric,n,rank,method,value,abs_gap"]
        for metric, _, methods, table in sections:
            if len(methods) < 2:
                continue
            for n in sorted(table):
                pop = float(table[n]["POP"])
                vals = {mth: table[n][mth] for mth in methods}
                order, gaps = ranked(vals, pop)
                for rank, mth in enumerate(order[:3], start=1):
                    lines.append(
                        f"{metric},{n},{rank},{mth},{vals[mth]},{fmt17(gaps[mth])}"
                    )
        _write(out_dir, "report.csv", "\n".join(lines) + "\n")
        return 0

    lines = [_hash_line(h, markdown=True), "", "# Sweep report", ""]
    lines.append(f"Run hash `{h}`." if h else "")
    for metric, fname, methods, table in sections:
        lines += ["", f"## {metric}", ""]
        lines.append("| n | POP | " + " | ".join(methods) + " |")
        lines.append("|---|---|" + "---|" * len(methods))
        for n in sorted(table):
            cells = [str(n), table[n]["POP"]] + [table[n][mth] for mth in methods]
            lines.append("| " + " | ".join(cells) + " |")
        if len(methods) >= 2:
            lines += ["", f"Closest to POP per n ({metric}):", ""]
            lines.append("| n | best | second | third |")
            lines.append("|---|---|---|---|")
            for n in sorted(table):
                pop = float(table[n]["POP"])
                vals = {mth: table[n][mth] for mth in methods}
                order, gaps = ranked(vals, pop)
                top = [f"{mth} ({fmt17(gaps[mth])})" for mth in order[:3]]
                while len(top) < 3:
                    top.append("")
                lines.append(f"| {n} | {top[0]} | {top[1]} | {top[2]} |")
    _write(out_dir, "report.md", "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdpca",
        description="Pairwise-difference covariance estimation and PCA evaluation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    specs = {
        "simulate": (cmd_simulate, "run a synthetic Monte Carlo sweep"),
        "analyze": (cmd_analyze, "run a subsampling sweep over a data file"),
        "estimate": (cmd_estimate, "estimate covariances on one dataset"),
        "report": (cmd_report, "merge sweep CSVs into a ranked report"),
    }
    for name, (fn, help_text) in specs.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument(
            "--config",
            required=True,
            help="config file, manifest.json, or (report) a prior run directory",
        )
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument(
            "--format", choices=("csv", "markdown"), default="markdown"
        )
        sp.add_argument("--seed", type=int, default=None, help="override master_seed")
        sp.add_argument("--threads", type=int, default=0, help="worker count, 0 = auto")
        sp.add_argument("--pcs", type=int, default=None, help="override pcs_reported")
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SweepError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, HdpcaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
