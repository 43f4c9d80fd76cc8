"""Experiment runner.

Ingests a declarative INI-style config, executes analytic and Monte Carlo
sweeps, and writes tabular CSV results plus a run manifest.  See the
README for the config grammar and the CSV schema.

Exit codes: 0 success, 2 config/schema validation error, 3 numeric
failure (partial results preserved), 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np
import scipy

from . import __version__, analytic, geometry, montecarlo
from .channel import ChannelParams
from .geometry import KeyholeDomain, KeyholeSpec

KINDS = ("sweep-h", "sweep-density", "sweep-3d", "validate", "measure-regions")

FIXED_COLUMNS = ("experiment", "h", "rho", "alpha", "C")
TAIL_COLUMNS = ("analytic_total", "mc_mean", "mc_stderr", "trials", "seconds")


class ConfigError(ValueError):
    """Config validation failure, naming the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass
class ExperimentConfig:
    kind: str
    domain: KeyholeDomain
    params_by_alpha: dict[float, ChannelParams]
    grid: np.ndarray
    c_list: list[int]
    sim_trials: int
    seed: int
    estimator: str
    link_mode: str
    output_path: str
    name: str = "run"
    mc_samples: int = 1_000_000  # measure-regions sample count
    raw_text: str = ""
    threads: int = 1
    n_nodes: int | None = None  # per-trial node count for height sweeps

    @property
    def alphas(self) -> list[float]:
        return sorted(self.params_by_alpha)


def _get(section, key, cast, field_name, default=None, required=True):
    if key not in section:
        if required and default is None:
            raise ConfigError(field_name, "missing required key")
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(field_name, f"bad value {section[key]!r}: {exc}") from exc


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def parse_config(path: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError("config", f"cannot read {path}")
    with open(path) as fh:
        raw_text = fh.read()

    if "experiment" not in cp:
        raise ConfigError("experiment", "missing [experiment] section")
    kind = _get(cp["experiment"], "kind", str, "experiment.kind")
    if kind not in KINDS:
        raise ConfigError("experiment.kind", f"must be one of {KINDS}")
    name = _get(cp["experiment"], "name", str, "experiment.name", default="run", required=False)

    if "domain" not in cp:
        raise ConfigError("domain", "missing [domain] section")
    dom = cp["domain"]
    height = _get(dom, "height", float, "domain.height")
    length = _get(dom, "length", float, "domain.length")
    width_y = _get(dom, "width_y", float, "domain.width_y", required=False)

    hole_sections = [s for s in cp.sections() if s == "hole" or s.startswith("hole.")]
    if not hole_sections:
        raise ConfigError("hole", "at least one [hole] section is required")
    holes = []
    for s in hole_sections:
        sec = cp[s]
        pos = _float_list(sec.get("wall_position", "0"))
        wall_position = pos[0] if len(pos) == 1 else tuple(pos)
        try:
            holes.append(
                KeyholeSpec(
                    width=_get(sec, "width", float, f"{s}.width"),
                    depth=_get(sec, "depth", float, f"{s}.depth"),
                    wall_position=wall_position,
                    shape=sec.get("shape", "circular"),
                )
            )
        except ValueError as exc:
            raise ConfigError(s, str(exc)) from exc

    if kind == "sweep-3d" and width_y is None:
        raise ConfigError("domain.width_y", "required for sweep-3d")

    if "channel" not in cp:
        raise ConfigError("channel", "missing [channel] section")
    ch = cp["channel"]
    alphas = _float_list(ch.get("alpha", "1.0"))
    if not alphas:
        raise ConfigError("channel.alpha", "needs at least one value")
    common = dict(
        K=_get(ch, "K", float, "channel.K"),
        eta=_get(ch, "eta", float, "channel.eta", default=2.0, required=False),
    )
    if "beta" in ch:
        common["beta"] = float(ch["beta"])
    elif "r0" in ch:
        common["r0"] = float(ch["r0"])
    else:
        raise ConfigError("channel.beta", "one of beta or r0 is required")
    try:
        params_by_alpha = {a: ChannelParams(alpha=a, **common) for a in alphas}
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from exc

    if "sweep" not in cp:
        raise ConfigError("sweep", "missing [sweep] section")
    sw = cp["sweep"]
    start = _get(sw, "start", float, "sweep.start")
    stop = _get(sw, "stop", float, "sweep.stop")
    steps = _get(sw, "steps", int, "sweep.steps")
    scale = sw.get("scale", "linear")
    if steps < 1:
        raise ConfigError("sweep.steps", "grid needs at least one point")
    if scale == "linear":
        grid = np.linspace(start, stop, steps)
    elif scale == "log":
        if start <= 0:
            raise ConfigError("sweep.start", "log grid requires start > 0")
        grid = np.geomspace(start, stop, steps)
    else:
        raise ConfigError("sweep.scale", "must be linear or log")

    if "sim" not in cp:
        raise ConfigError("sim", "missing [sim] section")
    sim = cp["sim"]
    trials = _get(sim, "trials", int, "sim.trials")
    if trials < 1:
        raise ConfigError("sim.trials", "must be >= 1")
    seed = _get(sim, "seed", int, "sim.seed", default=0, required=False)
    c_list = _int_list(sim.get("C", "2"))
    if not c_list or any(c < 0 for c in c_list):
        raise ConfigError("sim.C", "needs non-negative reflection orders")
    estimator = sim.get("estimator", "semi-analytic")
    link_mode = sim.get("link_mode", "approx")
    if estimator not in ("semi-analytic", "bernoulli"):
        raise ConfigError("sim.estimator", "must be semi-analytic or bernoulli")
    if link_mode not in ("exact", "approx"):
        raise ConfigError("sim.link_mode", "must be exact or approx")
    mc_samples = _get(sim, "mc_samples", int, "sim.mc_samples", default=1_000_000, required=False)

    output_path = cp.get("output", "path", fallback=f"{name}.csv")

    try:
        domain = KeyholeDomain(height=height, length=length, holes=tuple(holes), width_y=width_y)
    except ValueError as exc:
        raise ConfigError("domain", str(exc)) from exc

    n_sim = _get(sim, "n_nodes", int, "sim.n_nodes", required=False)
    cfg = ExperimentConfig(
        kind=kind,
        domain=domain,
        params_by_alpha=params_by_alpha,
        grid=grid,
        c_list=sorted(set(c_list)),
        sim_trials=trials,
        seed=seed,
        estimator=estimator,
        link_mode=link_mode,
        output_path=output_path,
        name=name,
        mc_samples=mc_samples,
        raw_text=raw_text,
        n_nodes=n_sim,
    )
    return cfg


def schema(max_c: int) -> list[str]:
    return (
        list(FIXED_COLUMNS)
        + [f"analytic_c{c}" for c in range(max_c + 1)]
        + list(TAIL_COLUMNS)
    )


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _row(cfg, max_c, *, h, rho, alpha, C, per_c=(), analytic_total=None,
         mc_mean=None, mc_stderr=None, trials=None, seconds=None):
    cells = {
        "experiment": cfg.kind,
        "h": h,
        "rho": rho,
        "alpha": alpha,
        "C": C,
        "analytic_total": analytic_total,
        "mc_mean": mc_mean,
        "mc_stderr": mc_stderr,
        "trials": trials,
        "seconds": seconds,
    }
    for c in range(max_c + 1):
        cells[f"analytic_c{c}"] = per_c[c] if c < len(per_c) else None
    return {k: _fmt(cells.get(k)) for k in schema(max_c)}


def _domain_at_height(domain: KeyholeDomain, h: float) -> KeyholeDomain:
    return KeyholeDomain(
        height=h, length=domain.length, holes=domain.holes, width_y=domain.width_y
    )


def _sim(cfg: ExperimentConfig, C: int, density=None, n_nodes=None) -> montecarlo.SimConfig:
    return montecarlo.SimConfig(
        trials=cfg.sim_trials,
        seed=cfg.seed,
        n_nodes=n_nodes,
        density=density,
        link_mode=cfg.link_mode,
        C=C,
        estimator=cfg.estimator,
    )


def _run_height_sweep(cfg: ExperimentConfig, rows: list, max_c: int):
    hole = cfg.domain.holes[0]
    n_nodes = getattr(cfg, "n_nodes", None) or 200
    for h in cfg.grid:
        dom = _domain_at_height(cfg.domain, float(h))
        rho = n_nodes / dom.volume
        for alpha in cfg.alphas:
            params = cfg.params_by_alpha[alpha]
            for C in cfg.c_list:
                t0 = time.perf_counter()
                bd = analytic.expected_external_H(dom, hole, params, C)
                est = montecarlo.external_mean_degree(
                    dom, hole, params, _sim(cfg, C, n_nodes=n_nodes), threads=cfg.threads
                )
                rows.append(_row(
                    cfg, max_c, h=float(h), rho=rho, alpha=alpha, C=C,
                    per_c=bd.per_c, analytic_total=bd.total_unnormalized,
                    mc_mean=est.mean, mc_stderr=est.std_error,
                    trials=cfg.sim_trials, seconds=time.perf_counter() - t0,
                ))


def _run_density_sweep(cfg: ExperimentConfig, rows: list, max_c: int):
    dom = cfg.domain
    for rho in cfg.grid:
        for alpha in cfg.alphas:
            params = cfg.params_by_alpha[alpha]
            for C in cfg.c_list:
                t0 = time.perf_counter()
                mus, per_c_sum = [], np.zeros(C + 1)
                for hole in dom.holes:
                    bd = analytic.expected_external_H(dom, hole, params, C)
                    mus.append(float(rho) * bd.total_unnormalized)
                    per_c_sum += bd.per_c
                p_analytic = analytic.multi_hole_connect_prob(mus)
                if rho > 0:
                    est = montecarlo.all_externals_connected_prob(
                        dom, params, _sim(cfg, C, density=float(rho)), threads=cfg.threads
                    )
                    mc_mean, mc_se = est.mean, est.std_error
                else:
                    mc_mean, mc_se = 0.0, 0.0
                rows.append(_row(
                    cfg, max_c, h=dom.height, rho=float(rho), alpha=alpha, C=C,
                    per_c=tuple(per_c_sum), analytic_total=p_analytic,
                    mc_mean=mc_mean, mc_stderr=mc_se,
                    trials=cfg.sim_trials, seconds=time.perf_counter() - t0,
                ))


def _run_measure_regions(cfg: ExperimentConfig, rows: list, max_c: int):
    hole = cfg.domain.holes[0]
    rng_seq = np.random.SeedSequence(cfg.seed).spawn(len(cfg.grid) * len(cfg.c_list))
    i = 0
    for h in cfg.grid:
        dom = _domain_at_height(cfg.domain, float(h))
        for C in cfg.c_list:
            t0 = time.perf_counter()
            ana = geometry.region_measure(C, dom, hole, method="analytic-approx")
            mc, se = geometry.region_measure(
                C, dom, hole, method="montecarlo",
                n_samples=cfg.mc_samples, rng=np.random.default_rng(rng_seq[i]),
            )
            i += 1
            rows.append(_row(
                cfg, max_c, h=float(h), rho=None, alpha=cfg.alphas[0], C=C,
                per_c=(), analytic_total=ana,
                mc_mean=mc, mc_stderr=se,
                trials=cfg.mc_samples, seconds=time.perf_counter() - t0,
            ))


def run(cfg: ExperimentConfig, out_dir: str | None = None) -> tuple[list[dict], int]:
    """Execute the experiment; returns (rows, exit_status) and writes CSV."""
    max_c = max(cfg.c_list)
    rows: list[dict] = []
    status = 0
    try:
        if cfg.kind == "validate":
            return rows, 0
        if cfg.kind in ("sweep-h", "sweep-3d"):
            _run_height_sweep(cfg, rows, max_c)
        elif cfg.kind == "sweep-density":
            _run_density_sweep(cfg, rows, max_c)
        elif cfg.kind == "measure-regions":
            _run_measure_regions(cfg, rows, max_c)
    except (ArithmeticError, analytic.QuadratureError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        status = 3
    out_path = cfg.output_path
    if out_dir is not None:
        out_path = os.path.join(out_dir, os.path.basename(out_path))
    try:
        _write_csv(out_path, schema(max_c), rows)
        _write_manifest(out_path + ".manifest.txt", cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return rows, 4
    return rows, status


def _write_csv(path: str, columns: list[str], rows: list[dict]):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(path: str, cfg: ExperimentConfig):
    with open(path, "w") as fh:
        fh.write(f"keyhole {__version__}\n")
        fh.write(f"python {platform.python_version()}\n")
        fh.write(f"numpy {np.__version__}\nscipy {scipy.__version__}\n")
        fh.write(f"seed {cfg.seed}\nkind {cfg.kind}\n")
        fh.write("--- config ---\n")
        fh.write(cfg.raw_text)


def diff_results(path_a: str, path_b: str, rel_tol: float = 0.0) -> list[str]:
    """Rows whose numeric columns differ beyond rel_tol; raises on schema mismatch.

    The wall-clock ``seconds`` column is timing metadata and is excluded
    from the comparison.
    """
    def load(path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
        if not rows:
            raise ValueError(f"{path}: empty file")
        return rows[0], rows[1:]

    header_a, rows_a = load(path_a)
    header_b, rows_b = load(path_b)
    if header_a != header_b:
        raise ValueError("schema mismatch: headers differ")
    report = []
    if len(rows_a) != len(rows_b):
        report.append(f"row count differs: {len(rows_a)} vs {len(rows_b)}")
        return report
    for idx, (ra, rb) in enumerate(zip(rows_a, rows_b), start=2):
        diffs = []
        for col, va, vb in zip(header_a, ra, rb):
            if col == "seconds" or va == vb:
                continue
            try:
                fa, fb = float(va), float(vb)
            except ValueError:
                diffs.append(col)
                continue
            scale = max(abs(fa), abs(fb), 1e-300)
            if not math.isclose(fa, fb, rel_tol=rel_tol, abs_tol=0.0) and abs(fa - fb) / scale > rel_tol:
                diffs.append(col)
        if diffs:
            report.append(f"line {idx}: columns differ: {', '.join(diffs)}")
    return report


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("KEYHOLE_THREADS")
    return int(env) if env else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="keyhole",
        description="Keyhole connectivity experiments: analytic curves and Monte Carlo sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (default: config's output path)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None)

    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config")

    p_diff = sub.add_parser("diff", help="compare two results CSVs")
    p_diff.add_argument("a")
    p_diff.add_argument("b")
    p_diff.add_argument("--rel-tol", type=float, default=0.0)

    args = parser.parse_args(argv)

    if args.command in ("run", "validate"):
        try:
            cfg = parse_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        if args.command == "validate":
            print("config OK")
            return 0
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.threads = _resolve_threads(args)
        rows, status = run(cfg, out_dir=args.out)
        if status == 0:
            print(f"wrote {len(rows)} rows")
        return status

    try:
        report = diff_results(args.a, args.b, rel_tol=args.rel_tol)
    except ValueError as exc:
        print(f"diff error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    for line in report:
        print(line)
    return 0 if not report else 1


if __name__ == "__main__":
    sys.exit(main())
