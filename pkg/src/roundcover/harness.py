"""Experiment orchestration: rounds-vs-cost sweeps, statistics, CSV/JSON reports."""
from __future__ import annotations

import csv
import hashlib
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    FixedRealization,
    InputError,
    dumps_canonical,
    load_instance,
)
from .oracles import entropy_lower_bound, offline_optimal
from .parca import ParcaConfig, ssc_solve
from .setbased import SetRoundPolicy, run_set_based
from .sparca import nsc2r_solve, nsc_solve

ALGORITHMS = ("ssc", "nsc", "nsc2r", "set-small", "set-large")
SCENARIO_ONLY = ("nsc", "nsc2r")
DEFAULT_TRIALS = 20
EXHAUSTIVE_AUTO_LIMIT = 256
CSV_COLUMNS = ("r", "mean_cost", "stderr", "coverage_rate", "lb_offline", "lb_entropy", "trials")


@dataclass(frozen=True)
class ExperimentSpec:
    instance_path: str | None
    algorithm: str
    r_min: int = 1
    r_max: int = 1
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    mode: str = "auto"  # auto | monte_carlo | exhaustive
    lower_bounds: tuple[str, ...] = ("offline", "entropy")
    eta: Fraction = Fraction(1, 10)
    mu_trials: int = 200
    sampler: str = "exact"
    workers: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InputError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.r_min < 1:
            raise InputError("r_min must be >= 1")
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        if self.mode not in ("auto", "monte_carlo", "exhaustive"):
            raise InputError(f"unknown evaluation mode {self.mode!r}")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        for kind in self.lower_bounds:
            if kind not in ("offline", "entropy"):
                raise InputError(f"unknown lower bound kind {kind!r}")

    @property
    def rounds(self) -> list[int]:
        return list(range(self.r_min, self.r_max + 1))


@dataclass
class ExperimentReport:
    spec: dict
    mode: str
    rows: list[dict]
    trials: list[dict]
    lb_entropy: float | None
    entropy_heuristic: bool | None
    effective_params: dict
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        # wall-clock time is kept out so reports are byte-identical across runs
        return {"spec": self.spec, "mode": self.mode, "rows": self.rows, "trials": self.trials,
                "lb_entropy": self.lb_entropy, "entropy_heuristic": self.entropy_heuristic,
                "effective_params": self.effective_params}

    def to_json(self) -> str:
        return dumps_canonical(self.to_dict())


def trial_seed(master: int, t: int) -> int:
    return master ^ t


def realization_digest(masks) -> str:
    return hashlib.sha256(",".join(map(str, masks)).encode()).hexdigest()[:16]


def parse_rounds(text: str) -> tuple[int, int]:
    """'a..b' or 'a' -> (a, b)."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise InputError(f"rounds must look like 'a..b' or 'a', got {text!r}") from None
    if lo < 1:
        raise InputError("rounds must be >= 1")
    return lo, hi


# --------------------------------------------------------------------------
# one policy run


def run_policy(algorithm: str, r: int, instance, source, cache: dict, eta=Fraction(1, 10),
               mu_trials: int = 200, sampler: str = "exact", seed: int = 0):
    """Returns (cost, covered, rounds, per-round params)."""
    if algorithm == "ssc":
        t = ssc_solve(r, instance, source, ParcaConfig(sampler=sampler, rng_seed=seed), cache)
    elif algorithm == "nsc":
        t = nsc_solve(r, instance, source, cache=cache)
    elif algorithm == "nsc2r":
        t = nsc2r_solve(r, instance, source, cache=cache)
    else:
        mode = "small_r" if algorithm == "set-small" else "large_r"
        pol = SetRoundPolicy(r, mode, eta, mu_trials, seed, ParcaConfig(sampler=sampler, rng_seed=seed))
        st = run_set_based(pol, instance, source, cache)
        params = [{"mu": str(x.mu), "budget": x.budget, "success": x.success} for x in st.rounds]
        return st.total_cost, st.covered, st.rounds_used, params
    return t.total_cost, t.covered, t.n_rounds, [rd.params for rd in t.rounds]


def check_compatible(algorithm: str, instance) -> None:
    if algorithm == "ssc" and instance.model != "independent":
        raise InputError("ssc needs an independent-model instance")
    if algorithm in SCENARIO_ONLY and instance.model != "scenario":
        raise InputError(f"{algorithm} needs a scenario-model instance")


def _evaluate_chunk(args):
    """Worker body: run every r for the given trial realizations."""
    instance, spec, chunk = args
    cache: dict = {}
    offline_cache: dict = {}
    out = []
    for t, masks in chunk:
        costs, covered, rounds, params = [], [], [], []
        for r in spec.rounds:
            src = FixedRealization(masks)
            c, cov, nr, p = run_policy(spec.algorithm, r, instance, src, cache, spec.eta,
                                       spec.mu_trials, spec.sampler, spec.seed)
            costs.append(c)
            covered.append(cov)
            rounds.append(nr)
            params.append(p)
        lb = None
        if "offline" in spec.lower_bounds:
            key = tuple(masks)
            if key not in offline_cache:
                offline_cache[key] = offline_optimal(instance, masks)
            lb = offline_cache[key]
        out.append((t, costs, covered, rounds, params, lb))
    return out


def _realizations(spec: ExperimentSpec, instance, mode: str):
    """(trial index, weight, seed, masks) per trial."""
    if mode == "exhaustive":
        return [(w, instance.probs[w], None, instance.column(w)) for w in range(instance.s)]
    out = []
    for t in range(spec.trials):
        seed = trial_seed(spec.seed, t)
        rng = np.random.default_rng(seed)
        if instance.model == "scenario":
            masks = instance.column(instance.sample_scenario(rng))
        else:
            masks = instance.sample_realization(rng)
        out.append((t, Fraction(1, spec.trials), seed, tuple(masks)))
    return out


def _mean_stderr(values, weights, exact: bool):
    mean = sum((w * v for v, w in zip(values, weights)), Fraction(0))
    if exact or len(values) < 2:
        return mean, 0.0
    xs = np.array([float(v) for v in values])
    return mean, float(np.std(xs, ddof=1) / math.sqrt(len(xs)))


def run_experiment(spec: ExperimentSpec, instance=None) -> ExperimentReport:
    """Sweep r over [r_min, r_max]; every r replays the same per-trial realizations."""
    start = time.perf_counter()
    if instance is None:
        if spec.instance_path is None:
            raise InputError("no instance given")
        instance = load_instance(spec.instance_path)
    check_compatible(spec.algorithm, instance)
    mode = spec.mode
    if mode == "auto":
        mode = "exhaustive" if instance.model == "scenario" and instance.s <= EXHAUSTIVE_AUTO_LIMIT \
            else "monte_carlo"
    if mode == "exhaustive" and instance.model != "scenario":
        raise InputError("exhaustive evaluation needs a scenario-model instance")
    exact = mode == "exhaustive"

    trials = _realizations(spec, instance, mode)
    chunks = [[] for _ in range(min(spec.workers, max(len(trials), 1)))]
    for i, (t, _, _, masks) in enumerate(trials):
        chunks[i % len(chunks)].append((t, masks))
    jobs = [(instance, spec, c) for c in chunks if c]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(_evaluate_chunk, jobs))
    else:
        parts = [_evaluate_chunk(j) for j in jobs]
    results = {row[0]: row for part in parts for row in part}

    weights = [w for _, w, _, _ in trials]
    per_trial = []
    for t, w, seed, masks in trials:
        _, costs, covered, rounds, _, lb = results[t]
        per_trial.append({"index": t, "weight": str(w), "seed": seed, "digest": realization_digest(masks),
                          "costs": costs, "covered": covered, "rounds": rounds,
                          "offline": None if lb is None else lb.cost,
                          "offline_exact": None if lb is None else lb.exact})

    ent = entropy_lower_bound(instance) if "entropy" in spec.lower_bounds and instance.model == "scenario" else None
    lb_off = None
    if "offline" in spec.lower_bounds:
        lb_off, _ = _mean_stderr([p["offline"] for p in per_trial], weights, True)

    rows = []
    effective = {}
    first = trials[0][0] if trials else None
    for j, r in enumerate(spec.rounds):
        costs = [p["costs"][j] for p in per_trial]
        mean, se = _mean_stderr(costs, weights, exact)
        cov = sum((w for p, w in zip(per_trial, weights) if p["covered"][j]), Fraction(0))
        rows.append({"r": r, "mean_cost": float(mean), "mean_cost_exact": str(mean), "stderr": se,
                     "coverage_rate": float(cov), "lb_offline": None if lb_off is None else float(lb_off),
                     "lb_entropy": None if ent is None else ent.bits, "trials": len(trials),
                     "max_rounds": max((p["rounds"][j] for p in per_trial), default=0)})
        if first is not None:
            effective[str(r)] = results[first][4][j]

    spec_dict = {"algorithm": spec.algorithm, "r_min": spec.r_min, "r_max": spec.r_max,
                 "trials": spec.trials, "seed": spec.seed, "mode": spec.mode,
                 "lower_bounds": list(spec.lower_bounds), "eta": str(spec.eta),
                 "mu_trials": spec.mu_trials, "sampler": spec.sampler,
                 "instance": None if spec.instance_path is None else os.path.basename(spec.instance_path)}
    return ExperimentReport(spec_dict, mode, rows, per_trial,
                            None if ent is None else ent.bits, None if ent is None else ent.heuristic,
                            effective, time.perf_counter() - start)


# --------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def csv_rows(report: ExperimentReport) -> list[list[str]]:
    return [[_fmt(row[c]) for c in CSV_COLUMNS] for row in report.rows]


def emit_csv(report: ExperimentReport, path) -> None:
    """One row per r; numbers with 12 significant digits; blank for missing bounds."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(csv_rows(report))


def write_report(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
