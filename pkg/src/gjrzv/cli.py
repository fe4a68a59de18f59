"""
Command-line front end.

Subcommands
-----------
fit       sample the posterior, report raw and ZV means, criteria and the chain
diagnose  case-deletion influence from a saved chain
compare   fit all four error distributions and tabulate the criteria
study     repeated-sampling study on simulated series
simulate  write a simulated series as a CSV dataset

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then flags; flags win. Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from gjrzv import __version__
from gjrzv.criteria import CRITERIA, chain_criteria
from gjrzv.diagnostics import influence_from_natural
from gjrzv.distributions import ErrorDist
from gjrzv.model import DataError, GjrParams, GjrPosterior, PriorSpec, param_names, transform
from gjrzv.samplers import (
    ChainSample,
    DivergentTrajectory,
    HmcConfig,
    RwmConfig,
    TuningWarning,
    hmc_sample,
    rwm_sample,
)
from gjrzv.simulate import DEFAULT_TRUTH, StudyConfig, run_study, simulate_series
from gjrzv.zv import estimate

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
KINDS = ("normal", "t", "ged", "gt")
MIN_OBS = 50
_MISSING = {"", "na", "nan", "null", "none", "."}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# --- configuration -------------------------------------------------------------

# key -> (type, default); a default of None means "command-specific"
_KEYS = {
    "data": (str, None),
    "mode": (str, "returns"),
    "date_col": (str, "date"),
    "value_col": (str, None),
    "dist": (str, "normal"),
    "sampler": (str, "hmc"),
    "draws": (int, None),
    "burnin": (int, None),
    "seed": (int, 0),
    "prior_var": (float, None),
    "epsilon": (float, None),
    "leapfrog_steps": (int, 20),
    "eps_pilot": (float, 1e-3),
    "pilot_draws": (int, 2000),
    "target_acceptance": (float, 0.8),
    "h1": (str, "unconditional"),
    "zv_basis": (str, "full"),
    "out": (str, None),
    "save_chain": (bool, True),
    "chain": (str, None),
    "top": (int, 10),
    "m": (int, 20),
    "sizes": (str, "200,500"),
    "samplers": (str, "hmc,rwm"),
    "n": (int, 2000),
    "nu": (float, None),
    "eta": (float, None),
    "outlier": (str, None),
}

_COMMAND_DEFAULTS = {
    "fit": {"draws": 5000, "burnin": 5000, "prior_var": 100.0},
    "compare": {"draws": 5000, "burnin": 5000, "prior_var": 100.0},
    "diagnose": {"prior_var": 100.0},
    "study": {"draws": 2000, "burnin": 1000, "prior_var": 1000.0},
    "simulate": {},
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys may use dashes."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value):
    typ = _KEYS[key][0]
    try:
        return _parse_bool(value) if typ is bool else typ(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as {typ.__name__}") from exc


@dataclass
class RunConfig:
    """Resolved settings for one command."""

    command: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def echo(self) -> dict:
        return {"command": self.command, **self.values}


def resolve_config(command: str, flags: dict) -> RunConfig:
    """Merge defaults, the config file and flags (flags win) and validate."""
    values = {k: d for k, (_, d) in _KEYS.items()}
    values.update(_COMMAND_DEFAULTS[command])
    cfg_path = flags.get("config")
    if cfg_path:
        values.update(read_config_file(cfg_path))
    for k, v in flags.items():
        if k in _KEYS and v is not None:
            values[k] = v
    cfg = RunConfig(command, values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    if v["dist"] not in KINDS:
        raise ConfigError(f"dist must be one of {', '.join(KINDS)}")
    if v["mode"] not in ("prices", "returns"):
        raise ConfigError("mode must be 'prices' or 'returns'")
    if v["sampler"] not in ("hmc", "rwm"):
        raise ConfigError("sampler must be 'hmc' or 'rwm'")
    if v["h1"] not in ("unconditional", "sample"):
        raise ConfigError("h1 must be 'unconditional' or 'sample'")
    if v["zv_basis"] not in ("full", "diagonal"):
        raise ConfigError("zv_basis must be 'full' or 'diagonal'")
    for key in ("draws", "burnin", "leapfrog_steps", "m", "n", "pilot_draws", "top"):
        if v[key] is not None and v[key] < (0 if key == "burnin" else 1):
            raise ConfigError(f"{key} is out of range")
    for key in ("prior_var", "epsilon", "eps_pilot"):
        if v[key] is not None and not v[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if cfg.command in ("fit", "compare", "diagnose"):
        if not v["data"]:
            raise ConfigError("--data is required")
        if not Path(v["data"]).is_file():
            raise ConfigError(f"data file not found: {v['data']}")
    if cfg.command == "diagnose":
        if not v["chain"]:
            raise ConfigError("--chain is required")
        if not Path(v["chain"]).is_file():
            raise ConfigError(f"chain file not found: {v['chain']}")
    if not v["out"]:
        raise ConfigError("--out is required")


# --- data --------------------------------------------------------------------


def ingest(path, mode: str = "returns", date_col: str = "date", value_col: str | None = None):
    """
    Read a return series from a CSV file with a header row.

    Parameters
    ----------
    path : path-like
        CSV file with a date column and a value column.
    mode : {"prices", "returns"}
        ``prices`` converts to percentage log-returns
        ``100 * (log p_t - log p_{t-1})``; ``returns`` passes values through.
    date_col, value_col : str
        Column names. Without ``value_col`` the file must have exactly one
        column besides the date.

    Returns
    -------
    dates : list of str
        One label per returned observation.
    x : ndarray
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if date_col not in header:
            raise DataError(f"date column {date_col!r} not in header {header}")
        if value_col is None:
            others = [h for h in header if h != date_col]
            if len(others) != 1:
                raise DataError("several value columns; choose one with --value-col")
            value_col = others[0]
        if value_col not in header:
            raise DataError(f"value column {value_col!r} not in header {header}")
        di, vi = header.index(date_col), header.index(value_col)
        dates, values, dropped = [], [], 0
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            cell = row[vi].strip() if vi < len(row) else ""
            if cell.lower() in _MISSING:
                dropped += 1
                continue
            try:
                val = float(cell)
            except ValueError:
                raise DataError(f"{path}, row {lineno}: non-numeric value {cell!r}") from None
            if not math.isfinite(val):
                raise DataError(f"{path}, row {lineno}: non-finite value {cell!r}")
            dates.append(row[di].strip() if di < len(row) else "")
            values.append(val)
    if dropped:
        warnings.warn(f"dropped {dropped} rows with missing values", UserWarning)
    x = np.asarray(values, dtype=float)
    if mode == "prices":
        if np.any(x <= 0):
            raise DataError("prices must be positive")
        x = 100.0 * np.diff(np.log(x))
        dates = dates[1:]
    elif mode != "returns":
        raise ValueError(f"unknown mode {mode!r}")
    if x.size < MIN_OBS:
        raise DataError(f"only {x.size} observations; at least {MIN_OBS} are required")
    return dates, x


def data_hash(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x, dtype="<f8").tobytes()).hexdigest()


# --- output ------------------------------------------------------------------


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else repr(float(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _metadata(cfg: RunConfig, extra: dict) -> str:
    meta = {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg.echo(),
        **extra,
    }
    return json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


# --- sampling helpers ---------------------------------------------------------


def _posterior(cfg: RunConfig, x, kind: str) -> GjrPosterior:
    return GjrPosterior(x, kind, PriorSpec.all(cfg.prior_var), cfg.h1)


def _sample(cfg: RunConfig, post: GjrPosterior, seed: int, epsilon=None) -> ChainSample:
    init = post.initial_point()
    with warnings.catch_warnings():
        warnings.simplefilter("error", TuningWarning)
        try:
            if cfg.sampler == "hmc":
                hc = HmcConfig(
                    epsilon=epsilon if epsilon is not None else cfg.epsilon,
                    n_steps=cfg.leapfrog_steps,
                    n_draws=cfg.draws,
                    n_burnin=cfg.burnin,
                    seed=seed,
                )
                chain = hmc_sample(post, hc, init)
            else:
                rc = RwmConfig(
                    eps_pilot=cfg.eps_pilot,
                    pilot_draws=cfg.pilot_draws,
                    eps_scale=cfg.epsilon,
                    target_acceptance=cfg.target_acceptance,
                    n_draws=cfg.draws,
                    n_burnin=cfg.burnin,
                    seed=seed,
                )
                chain = rwm_sample(post, rc, init)
        except TuningWarning as exc:
            raise NumericalFailure(f"sampler tuning failed: {exc}; set --epsilon explicitly") from exc
        except (DivergentTrajectory, np.linalg.LinAlgError) as exc:
            raise NumericalFailure(f"sampler failed: {exc}") from exc
    if chain.acceptance_rate == 0.0:
        raise NumericalFailure("the chain never moved (acceptance rate 0)")
    return chain


def _chain_seeds(seed: int, k: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def _fit_pair(cfg: RunConfig, post: GjrPosterior, seed: int):
    s1, s2 = _chain_seeds(seed, 2)
    c1 = _sample(cfg, post, s1)
    c2 = _sample(cfg, post, s2, epsilon=c1.epsilon if cfg.sampler == "hmc" else None)
    return c1, c2


def _chain_rows(post: GjrPosterior, chains) -> tuple[list, list]:
    header = ["draw", "chain", *post.names, "log_posterior"]
    rows = []
    for ci, chain in enumerate(chains, 1):
        nat = post.to_natural(chain.draws)
        for i in range(chain.n_draws):
            rows.append([i + 1, ci, *nat[i], chain.logp[i]])
    return header, rows


def _criteria_rows(report) -> list:
    return [[c, getattr(report, c)] for c in CRITERIA] + [
        ["p_dic", report.p_dic],
        ["p_waic", report.p_waic],
        ["p_loo", report.p_loo],
        ["max_pareto_k", report.max_pareto_k],
    ]


# --- commands ------------------------------------------------------------------


def cmd_fit(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    dates, x = ingest(cfg.data, cfg.mode, cfg.date_col, cfg.value_col)
    post = _posterior(cfg, x, cfg.dist)
    c1, c2 = _fit_pair(cfg, post, cfg.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        z = estimate(
            c1, c2, to_natural=post.to_natural, names=post.names, diagonal=cfg.zv_basis == "diagonal"
        )
        crit = chain_criteria(c2, post)
    out = Path(cfg.out)
    label = cfg.sampler.upper()
    header = ["parameter", f"{label}_mean", f"{label}_se", "ZV-L_mean", "ZV-L_se", "ZV-Q_mean", "ZV-Q_se"]
    rows = [
        [r["parameter"], r["raw"], r["raw_se"], r["zv_l"], r["zv_l_se"], r["zv_q"], r["zv_q_se"]]
        for r in z.table()
    ]
    write_atomic(out / "summary.csv", _csv_text(header, rows))
    write_atomic(out / "criteria.csv", _csv_text(["criterion", "value"], _criteria_rows(crit)))
    if cfg.save_chain:
        write_atomic(out / "chain.csv", _csv_text(*_chain_rows(post, (c1, c2))))
    meta = {
        "data_file": str(cfg.data),
        "data_sha256": data_hash(x),
        "n_obs": int(x.size),
        "first_date": dates[0] if dates else "",
        "last_date": dates[-1] if dates else "",
        "parameters": list(post.names),
        "chains": [
            {
                "seed": c.seed,
                "acceptance_rate": c.acceptance_rate,
                "epsilon": c.epsilon,
                "divergent": c.n_divergent,
                "notes": list(c.warnings),
            }
            for c in (c1, c2)
        ],
        "warnings": sorted({str(w.message) for w in caught}),
        "runtime_seconds": time.perf_counter() - t0,
    }
    write_atomic(out / "metadata.json", _metadata(cfg, meta))
    print(_format_summary(label, rows))
    print(f"\nacceptance: {c1.acceptance_rate:.3f}, {c2.acceptance_rate:.3f}   "
          f"DIC {crit.dic:.1f}  WAIC {crit.waic:.1f}  LOOIC {crit.looic:.1f}")
    return EXIT_OK


def _format_summary(label: str, rows) -> str:
    cols = [label, "ZV-L", "ZV-Q"]
    lines = [f"{'':>8}" + "".join(f"{c:>24}" for c in cols)]
    lines.append(f"{'':>8}" + "".join(f"{'Mean':>12}{'SE':>12}" for _ in cols))
    for r in rows:
        lines.append(f"{r[0]:>8}" + "".join(f"{v:>12.5f}" for v in r[1:]))
    return "\n".join(lines)


def _read_chain(path, names) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[2 : 2 + len(names)] != list(names):
            raise DataError("chain file columns do not match the model parameters")
        rows = [[float(v) for v in row[2 : 2 + len(names)]] for row in reader if row]
    if not rows:
        raise DataError("chain file has no draws")
    return np.array(rows)


def cmd_diagnose(cfg: RunConfig) -> int:
    chain_path = Path(cfg.chain)
    meta_path = chain_path.parent / "metadata.json"
    if not meta_path.is_file():
        raise ConfigError(f"no metadata.json next to {chain_path}")
    meta = json.loads(meta_path.read_text())
    fitted = meta.get("config", {})
    dates, x = ingest(cfg.data, cfg.mode, cfg.date_col, cfg.value_col)
    if meta.get("data_sha256") != data_hash(x):
        raise DataError("data do not match the series the chain was fitted to")
    kind = fitted.get("dist", cfg.dist)
    for key in ("dist", "h1", "prior_var"):
        if key in fitted and fitted[key] != cfg.values[key] and key != "dist":
            raise ConfigError(f"{key} differs from the fitted run ({fitted[key]!r})")
    post = GjrPosterior(x, kind, PriorSpec.all(fitted.get("prior_var", cfg.prior_var)), fitted.get("h1", cfg.h1))
    nat = _read_chain(chain_path, post.names)
    rep = influence_from_natural(post, nat)
    out = Path(cfg.out)
    rows = [
        [t + 1, dates[t], rep.kl[t], rep.proportion[t], int(rep.flagged[t])] for t in range(x.size)
    ]
    write_atomic(out / "influence.csv", _csv_text(["t", "date", "kl", "proportion", "flagged"], rows))
    write_atomic(
        out / "influence_plot.csv",
        _csv_text(["index", "date", "kl"], [[t + 1, dates[t], rep.kl[t]] for t in range(x.size)]),
    )
    top = rep.top(cfg.top)
    top_rows = [[rank + 1, int(t) + 1, dates[t], rep.kl[t], rep.proportion[t]] for rank, t in enumerate(top)]
    write_atomic(out / "influence_top.csv", _csv_text(["rank", "t", "date", "kl", "proportion"], top_rows))
    write_atomic(
        out / "metadata.json",
        _metadata(cfg, {"data_sha256": data_hash(x), "n_obs": int(x.size), "n_draws": int(nat.shape[0]),
                        "dist": kind, "chain_file": str(chain_path)}),
    )
    print(f"{'rank':>4} {'t':>6} {'date':>12} {'KL':>10} {'P':>8}")
    for r in top_rows:
        print(f"{r[0]:>4} {r[1]:>6} {r[2]:>12} {r[3]:>10.5f} {r[4]:>8.5f}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    _, x = ingest(cfg.data, cfg.mode, cfg.date_col, cfg.value_col)
    reports, failures = {}, {}
    seeds = _chain_seeds(cfg.seed, len(KINDS))
    for kind, seed in zip(KINDS, seeds):
        post = _posterior(cfg, x, kind)
        try:
            chain = _sample(cfg, post, seed)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                reports[kind] = chain_criteria(chain, post)
        except (NumericalFailure, ArithmeticError, ValueError) as exc:
            failures[kind] = str(exc)
    if not reports:
        raise NumericalFailure("every fit failed: " + "; ".join(f"{k}: {v}" for k, v in failures.items()))
    winners = {c: min(reports, key=lambda k: getattr(reports[k], c)) for c in CRITERIA}
    rows = []
    for kind in KINDS:
        if kind in reports:
            r = reports[kind]
            rows.append([kind, *(getattr(r, c) for c in CRITERIA), r.max_pareto_k, ""])
        else:
            rows.append([kind, *(["failed"] * len(CRITERIA)), "failed", failures[kind]])
    rows.append(["best", *(winners[c] for c in CRITERIA), "", ""])
    out = Path(cfg.out)
    header = ["model", *CRITERIA, "max_pareto_k", "error"]
    write_atomic(out / "criteria.csv", _csv_text(header, rows))
    write_atomic(
        out / "metadata.json",
        _metadata(cfg, {"data_sha256": data_hash(x), "n_obs": int(x.size), "failures": failures,
                        "runtime_seconds": time.perf_counter() - t0}),
    )
    print(f"{'model':>8}" + "".join(f"{c.upper():>12}" for c in CRITERIA))
    for kind in KINDS:
        if kind in reports:
            cells = "".join(
                f"{getattr(reports[kind], c):>11.1f}{'*' if winners[c] == kind else ' '}" for c in CRITERIA
            )
        else:
            cells = "".join(f"{'failed':>12}" for _ in CRITERIA)
        print(f"{kind:>8}{cells}")
    print("(* lowest value per criterion)")
    return EXIT_OK if not failures else EXIT_NUMERIC


def _truth(cfg: RunConfig) -> GjrParams:
    kind = cfg.dist
    shape = {"normal": [], "t": [cfg.nu or 8.0], "ged": [cfg.nu or 1.5], "gt": [cfg.eta or 2.0, cfg.nu or 4.0]}
    t = DEFAULT_TRUTH
    try:
        return replace(t, dist=ErrorDist.from_shape(kind, shape[kind]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"sizes must be comma-separated integers, got {text!r}") from None
    if not sizes:
        raise ConfigError("sizes is empty")
    return sizes


def cmd_study(cfg: RunConfig) -> int:
    samplers = {s.strip() for s in cfg.samplers.split(",") if s.strip()}
    if not samplers or samplers - {"hmc", "rwm"}:
        raise ConfigError("samplers must be a comma-separated subset of hmc,rwm")
    hmc = HmcConfig(epsilon=cfg.epsilon, n_steps=cfg.leapfrog_steps, n_draws=cfg.draws, n_burnin=cfg.burnin)
    rwm = RwmConfig(eps_pilot=cfg.eps_pilot, pilot_draws=cfg.pilot_draws,
                    target_acceptance=cfg.target_acceptance, n_draws=cfg.draws, n_burnin=cfg.burnin)
    study = StudyConfig(
        m=cfg.m,
        sizes=_sizes(cfg.sizes),
        truth=_truth(cfg),
        hmc=hmc if "hmc" in samplers else None,
        rwm=rwm if "rwm" in samplers else None,
        prior=PriorSpec.all(cfg.prior_var),
        diagonal=cfg.zv_basis == "diagonal",
        seed=cfg.seed,
    )

    def progress(n, rep, ok):
        print(f"n={n} replication {rep + 1}/{cfg.m}{'' if ok else ' failed'}", file=sys.stderr)

    res = run_study(study, progress)
    out = Path(cfg.out)
    write_atomic(out / "study.csv", res.to_csv())
    table = res.format_table()
    write_atomic(out / "study.txt", table + "\n")
    write_atomic(
        out / "metadata.json",
        _metadata(cfg, {"truth": res.config.truth.to_vector(), "parameters": list(res.names),
                        "failures": {str(k): v for k, v in res.failures.items()},
                        "runtime_seconds": res.runtime}),
    )
    print(table)
    total = sum(res.failures.values())
    return EXIT_OK if total < cfg.m * len(study.sizes) else EXIT_NUMERIC


def cmd_simulate(cfg: RunConfig) -> int:
    truth = _truth(cfg)
    rng = np.random.default_rng(cfg.seed)
    x = simulate_series(truth, cfg.n, rng)
    if cfg.outlier:
        try:
            idx, size = cfg.outlier.split(":")
            idx, size = int(idx) - 1, float(size)
        except ValueError:
            raise ConfigError("outlier must look like INDEX:SIGMAS, e.g. 250:-10") from None
        if not 0 <= idx < x.size:
            raise ConfigError("outlier index outside the series")
        x[idx] = truth.mu + size * math.sqrt(truth.unconditional_variance)
    dates = np.busday_offset("2000-01-03", np.arange(x.size), roll="forward").astype(str)
    out = Path(cfg.out)
    if out.suffix.lower() != ".csv":
        out = out / "series.csv"
    write_atomic(out, _csv_text(["date", "value"], zip(dates, x)))
    write_atomic(out.with_suffix(".json"), _metadata(cfg, {"truth": truth.to_vector(),
                                                          "parameters": list(truth.names)}))
    print(f"wrote {x.size} observations to {out}")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
    "compare": cmd_compare,
    "study": cmd_study,
    "simulate": cmd_simulate,
}


# --- argument parsing ----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--dist", choices=KINDS)
    p.add_argument("--prior-var", type=float, dest="prior_var", help="variance of every prior")
    p.add_argument("--h1", choices=("unconditional", "sample"))


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--mode", choices=("prices", "returns"))
    p.add_argument("--date-col", dest="date_col")
    p.add_argument("--value-col", dest="value_col")


def _add_sampler(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sampler", choices=("hmc", "rwm"))
    p.add_argument("--draws", type=int, help="retained draws per chain")
    p.add_argument("--burnin", type=int)
    p.add_argument("--epsilon", type=float, help="HMC step size, or the RWM proposal scale")
    p.add_argument("--leapfrog-steps", type=int, dest="leapfrog_steps")
    p.add_argument("--eps-pilot", type=float, dest="eps_pilot")
    p.add_argument("--pilot-draws", type=int, dest="pilot_draws")
    p.add_argument("--target-acceptance", type=float, dest="target_acceptance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gjrzv", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model and report raw and ZV posterior means")
    _add_common(p), _add_data(p), _add_sampler(p)
    p.add_argument("--zv-basis", choices=("full", "diagonal"), dest="zv_basis")
    p.add_argument("--no-chain", action="store_false", dest="save_chain", default=None,
                   help="do not write chain.csv")

    p = sub.add_parser("diagnose", help="case-deletion influence from a saved chain")
    _add_common(p), _add_data(p)
    p.add_argument("--chain", help="chain.csv written by 'fit'")
    p.add_argument("--top", type=int)

    p = sub.add_parser("compare", help="criteria for all four error distributions")
    _add_common(p), _add_data(p), _add_sampler(p)

    p = sub.add_parser("study", help="repeated-sampling study on simulated series")
    _add_common(p), _add_sampler(p)
    p.add_argument("--m", type=int, help="replications per sample size")
    p.add_argument("--sizes", help="comma-separated sample sizes")
    p.add_argument("--samplers", help="comma-separated subset of hmc,rwm")
    p.add_argument("--zv-basis", choices=("full", "diagonal"), dest="zv_basis")
    p.add_argument("--nu", type=float)
    p.add_argument("--eta", type=float)

    p = sub.add_parser("simulate", help="write a simulated series as CSV")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--outlier", help="replace observation INDEX (1-based) by SIGMAS unconditional sd")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = vars(args)
    command = flags.pop("command")
    try:
        cfg = resolve_config(command, flags)
        return COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
