"""Monte Carlo harness: rejection rates, trimming lags, support recovery,
change-location accuracy and sensitivity to ``K``.

A plan holds a template design, named sweeps over design or test settings,
and a replication count.  Every replication draws from its own seed,
``derive_seed(plan.seed, stable_hash(cell), rep)``.  Any cell can therefore be
rerun alone and reproduce the same numbers for any worker count.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import derive_seed, pmap, stable_hash
from .cpoint import estimate_cp
from .dgp import DGPSpec, simulate_array
from .limitdist import quantile_table
from .relevance import TestConfig, run_test
from .setestim import estimate_S, support_metrics
from .trim import select_m

NA = "NA"
KINDS = ("rejection", "m_distribution", "support", "cp_accuracy", "K_sensitivity")
DGP_KEYS = {f.name for f in fields(DGPSpec)} - {"seed"}
TEST_KEYS = {"delta", "alpha", "K", "norm", "m", "K_set", "kappa", "cutoff"}
SWEEP_KEYS = DGP_KEYS | TEST_KEYS | {"s_over_p"}


@dataclass(frozen=True)
class ExperimentPlan:
    """What to simulate.

    Parameters
    ----------
    dgp : DGPSpec
        Template design; its ``seed`` is ignored.
    sweep : dict
        ``name -> values``.  Names are design fields, test settings, or
        ``s_over_p`` (sets ``s = round(s_over_p * p)``).  Cells are the
        Cartesian product in the insertion order of ``sweep``.
    reps : int
    alpha, delta : float
        Test level and threshold on the squared scale.
    test : {"dense", "sparse"}
    K : int
        Atoms of the discrete measure in the self-normaliser.
    qreps : int
        Draws for each cell's quantile table.
    outputs : tuple of str
        Table kinds run by :func:`run_plan`.
    """

    dgp: DGPSpec = field(default_factory=DGPSpec)
    sweep: dict = field(default_factory=dict)
    reps: int = 200
    alpha: float = 0.05
    delta: float = 2.0
    test: str = "dense"
    K: int = 20
    m: int | None = None
    qreps: int = 100_000
    thresholds: tuple[int, ...] = (1, 2, 3, 5, 10)
    outputs: tuple[str, ...] = ("rejection",)
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.test not in ("dense", "sparse"):
            raise ValueError(f"test must be 'dense' or 'sparse', got {self.test!r}")
        for name in self.sweep:
            if name not in SWEEP_KEYS:
                raise KeyError(f"cannot sweep {name!r}; allowed: {sorted(SWEEP_KEYS)}")
        for kind in self.outputs:
            if kind not in KINDS:
                raise ValueError(f"unknown output {kind!r}; allowed: {KINDS}")

    def cells(self) -> list[dict]:
        names = list(self.sweep)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.sweep.values())]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = {k: list(v) for k, v in self.sweep.items()}
        return d


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, name) -> list:
        return [r[name] for r in self.rows]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row.get(c, "")) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _fmt(v) -> str:
    if isinstance(v, float):
        return NA if math.isnan(v) else f"{v:.6g}"
    return str(v)


def binomial_se(rate: float, reps: int):
    return NA if reps <= 1 else math.sqrt(rate * (1 - rate) / reps)


def _cell_design(plan: ExperimentPlan, cell: dict) -> tuple[DGPSpec, dict]:
    dgp_kw = {k: v for k, v in cell.items() if k in DGP_KEYS}
    test_kw = {k: v for k, v in cell.items() if k in TEST_KEYS}
    p = dgp_kw.get("p", plan.dgp.p)
    if "s_over_p" in cell:
        dgp_kw["s"] = max(1, int(round(cell["s_over_p"] * p)))
    elif "s" not in dgp_kw and plan.dgp.s == plan.dgp.p:
        dgp_kw["s"] = p  # a dense template stays dense when p is swept
    return replace(plan.dgp, **dgp_kw), test_kw


def _test_config(plan: ExperimentPlan, test_kw: dict, threads) -> TestConfig:
    kw = dict(delta=plan.delta, alpha=plan.alpha, K=plan.K, m=plan.m, seed=plan.seed, reps=plan.qreps)
    kw.update(test_kw)
    kw.setdefault("norm", "sparsity_adjusted" if plan.test == "sparse" else "normalized_l2")
    cfg = TestConfig(**kw)
    # one table per cell, shared by all replications
    table = quantile_table("G", cfg.K, cfg.levels(), cfg.reps, cfg.seed, threads)
    return replace(cfg, quantiles=table)


def _replicate(plan: ExperimentPlan, cell: dict, func, threads) -> tuple[list, int]:
    """Run ``func(X, spec)`` for every replication.

    Returns the successful outputs and the failure count.
    """
    spec, _ = _cell_design(plan, cell)
    key = stable_hash(sorted(cell.items()))

    def one(rep):
        s = replace(spec, seed=derive_seed(plan.seed, key, rep))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return func(simulate_array(s), s)
        except ValueError:
            return None

    out = pmap(one, range(plan.reps), threads)
    ok = [o for o in out if o is not None]
    return ok, len(out) - len(ok)


def _cell_columns(plan: ExperimentPlan) -> list[str]:
    return list(plan.sweep)


def run_rejection(plan: ExperimentPlan, threads=None) -> ResultTable:
    """Empirical rejection rate per cell, with binomial standard error."""
    table = ResultTable(_cell_columns(plan) + ["reps", "failures", "rate", "se"])
    for cell in plan.cells():
        _, test_kw = _cell_design(plan, cell)
        cfg = _test_config(plan, test_kw, threads)
        ok, failed = _replicate(plan, cell, lambda X, s: run_test(X, cfg).reject, threads)
        rate = float(np.mean(ok)) if ok else math.nan
        table.rows.append({**cell, "reps": len(ok), "failures": failed, "rate": rate,
                           "se": binomial_se(rate, len(ok))})
    return table


def run_m_distribution(plan: ExperimentPlan, threads=None) -> ResultTable:
    """Share of replications with ``m_hat >= t`` for each threshold ``t``, plus the mean."""
    cols = [f"P(m>={t})" for t in plan.thresholds]
    table = ResultTable(_cell_columns(plan) + ["reps", "failures", "mean_m"] + cols)

    def m_hat(X, s):
        return select_m(X, estimate_cp(X).k_hat).m_hat

    for cell in plan.cells():
        ok, failed = _replicate(plan, cell, m_hat, threads)
        m = np.array(ok, dtype=float)
        row = {**cell, "reps": len(ok), "failures": failed,
               "mean_m": float(m.mean()) if m.size else math.nan}
        for t, c in zip(plan.thresholds, cols):
            row[c] = float(np.mean(m >= t)) if m.size else math.nan
        table.rows.append(row)
    return table


def run_support(plan: ExperimentPlan, threads=None) -> ResultTable:
    """Mean precision, recall and F-score of the estimated support.

    Recall is undefined (``NA``) when the design has no changing coordinate.
    """
    table = ResultTable(_cell_columns(plan) + ["reps", "failures", "precision", "recall", "f_score"])

    def metrics(X, s):
        k = estimate_cp(X).k_hat
        m = plan.m if plan.m is not None else select_m(X, k).m_hat
        est = estimate_S(X, k, m)
        return support_metrics(s.support, est.S_hat)

    for cell in plan.cells():
        ok, failed = _replicate(plan, cell, metrics, threads)
        row = {**cell, "reps": len(ok), "failures": failed}
        for name in ("precision", "recall", "f_score"):
            vals = np.array([getattr(x, name) for x in ok], dtype=float)
            row[name] = float(vals.mean()) if vals.size and not np.isnan(vals).all() else math.nan
        table.rows.append(row)
    return table


def run_cp_accuracy(plan: ExperimentPlan, threads=None, tol: float = 0.05) -> ResultTable:
    """Share of replications with ``|theta_hat - theta0| <= tol``."""
    table = ResultTable(_cell_columns(plan) + ["reps", "failures", "rate", "se"])
    for cell in plan.cells():
        ok, failed = _replicate(
            plan, cell, lambda X, s: abs(estimate_cp(X).theta_hat - s.theta0) <= tol + 1e-12, threads
        )
        rate = float(np.mean(ok)) if ok else math.nan
        table.rows.append({**cell, "reps": len(ok), "failures": failed, "rate": rate,
                           "se": binomial_se(rate, len(ok))})
    return table


def run_K_sensitivity(plan: ExperimentPlan, threads=None, Ks=(10, 15, 20, 25)) -> ResultTable:
    """Rejection rates with ``K`` swept (added as the last sweep axis if absent)."""
    if "K" not in plan.sweep:
        plan = replace(plan, sweep={**plan.sweep, "K": list(Ks)})
    return run_rejection(plan, threads)


RUNNERS = {
    "rejection": run_rejection,
    "m_distribution": run_m_distribution,
    "support": run_support,
    "cp_accuracy": run_cp_accuracy,
    "K_sensitivity": run_K_sensitivity,
}


def run_plan(plan: ExperimentPlan, out_dir=None, threads=None) -> dict[str, ResultTable]:
    """Run every requested table; with ``out_dir``, write ``<kind>.csv`` and ``manifest.json``."""
    tables = {kind: RUNNERS[kind](plan, threads) for kind in plan.outputs}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for kind, t in tables.items():
            t.to_csv(out / f"{kind}.csv")
        write_manifest(plan, out / "manifest.json")
    return tables


def write_manifest(plan: ExperimentPlan, path) -> None:
    manifest = {"plan": plan.to_dict(), "seed": plan.seed, "version": __version__}
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


_PLAN_INT = {"reps", "K", "qreps", "seed", "m"}
_PLAN_FLOAT = {"alpha", "delta"}


def _scalar(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def plan_from_mapping(mapping: dict) -> ExperimentPlan:
    """Build a plan from flat keys.

    Keys are design fields (template), plan fields, or ``sweep.<name>`` with
    a comma-separated list.  Unknown keys raise ``KeyError`` naming the key.
    """
    dgp_kw, plan_kw, sweep = {}, {}, {}
    plan_fields = {f.name for f in fields(ExperimentPlan)} - {"dgp", "sweep"}
    for key, raw in mapping.items():
        value = str(raw).strip()
        if key.startswith("sweep."):
            name = key[len("sweep."):]
            if name not in SWEEP_KEYS:
                raise KeyError(f"unknown sweep key {key!r}")
            sweep[name] = [_scalar(x) for x in value.split(",") if x.strip()]
        elif key in DGP_KEYS:
            dgp_kw[key] = value
        elif key in plan_fields:
            if key in ("outputs", "thresholds"):
                items = [x.strip() for x in value.split(",") if x.strip()]
                plan_kw[key] = tuple(int(x) for x in items) if key == "thresholds" else tuple(items)
            elif key in _PLAN_INT:
                plan_kw[key] = None if value.lower() in ("", "none") else int(value)
            elif key in _PLAN_FLOAT:
                plan_kw[key] = float(value)
            else:
                plan_kw[key] = value
        else:
            raise KeyError(f"unknown plan key {key!r}")
    return ExperimentPlan(dgp=DGPSpec.from_mapping(dgp_kw), sweep=sweep, **plan_kw)


def parse_flat_config(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_plan(path) -> ExperimentPlan:
    return plan_from_mapping(parse_flat_config(Path(path).read_text(encoding="utf-8")))
