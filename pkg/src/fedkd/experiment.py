"""Experiment orchestration: the optimizing methods and the baselines.

One experiment trains a single method and evaluates it greedily on a
fixed, seed-determined set of scenario draws, so different methods run
on identical draws when given the same seed and template:

    proposed    joint offload/model agent + convex resource allocation
    q-only      one agent over offload, model, and a quantized resource
                grid per user; no convex step, budget violations penalized
    fl-min      smallest model for everyone (conventional federated
                accuracies), agent picks offloading only, convex resources
    fl-max      as fl-min with the largest model
    exhaustive  full enumeration reference (no learning)

Per trial the report records the realized objective, the mean per-epoch
delay across users, accuracy means, model-selection frequencies, and the
raw per-user decision and resources.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .accuracy import DEFAULT_TABLE, AccuracyTable, acc_pair
from .allocator import allocate
from .model import Allocation, Decision, Scenario, channel_gain, delays, objective, tx_rate
from .qlearn import (
    INFEASIBLE_REWARD,
    QConfig,
    QTable,
    action_count,
    decode_action,
    encode_state,
    train,
    train_loop,
    exhaustive_optimum,
)

METHODS = ("proposed", "q-only", "fl-min", "fl-max", "exhaustive")

#: Guard against action encodings too large to sample from; the sparse
#: table itself never enumerates the space.
ACTION_SPACE_CAP = 10 ** 12

#: Experiment-time agent defaults: coarser state bins than the module
#: default so the training budget covers the state space reasonably.
EXPERIMENT_QCONFIG = QConfig(f_bins=2, h_bins=2, episodes=5000)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    method: str = "proposed"
    seed: int = 0
    trials: int = 200
    distribution: str = "noniid"
    q: QConfig = EXPERIMENT_QCONFIG
    resource_levels: int = 8            # q-only grid levels per resource
    f_loc_range: tuple[float, float] = (0.5, 2.0)
    d_range: tuple[float, float] = (10.0, 100.0)
    table: AccuracyTable = DEFAULT_TABLE
    penalty: float = INFEASIBLE_REWARD

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.trials < 0:
            raise ValueError(f"trials must be >= 0, got {self.trials}")
        if self.resource_levels < 1:
            raise ValueError("resource_levels must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    trial: int
    objective: float
    avg_delay_s: float
    acc_own: float              # mean over users
    acc_avg: float              # mean over users
    freq: tuple[float, ...]     # per-model selection fraction, sums to 1
    x: tuple[int, ...]
    m: tuple[int, ...]
    f: tuple[float, ...]
    b: tuple[float, ...]


@dataclass
class Report:
    method: str
    seed: int
    n_users: int
    model_names: tuple[str, ...]
    trials: list = field(default_factory=list)

    def model_frequencies(self) -> tuple[float, ...]:
        if not self.trials:
            return tuple(0.0 for _ in self.model_names)
        stacked = np.array([t.freq for t in self.trials])
        return tuple(float(v) for v in stacked.mean(axis=0))

    def mean(self, attr: str) -> float:
        if not self.trials:
            return float("nan")
        return float(np.mean([getattr(t, attr) for t in self.trials]))


def sample_scenario(template: Scenario, rng: np.random.Generator,
                    f_loc_range=(0.5, 2.0), d_range=(10.0, 100.0)) -> Scenario:
    """Redraw each user's CPU frequency and distance; all else fixed."""
    users = tuple(
        dataclasses.replace(u,
                            f_loc=float(rng.uniform(*f_loc_range)),
                            d=float(rng.uniform(*d_range)))
        for u in template.users)
    return dataclasses.replace(template, users=users)


def _acc_by_model(cfg: ExperimentConfig, acc_method: str) -> list[tuple[float, float]]:
    return [acc_pair(cfg.table, m.name, acc_method, cfg.distribution)
            for m in cfg.scenario.catalog]


def _evaluate(sc: Scenario, dec: Decision, al: Allocation, accs,
              trial: int, penalized: bool, penalty: float) -> TrialResult:
    n, n_models = sc.n_users, len(sc.catalog)
    acc_own = [accs[mi][0] for mi in dec.m]
    acc_avg = [accs[mi][1] for mi in dec.m]
    obj = -penalty if penalized else objective(sc, dec, al, acc_own, acc_avg)
    totals = []
    for i, u in enumerate(sc.users):
        rate = tx_rate(al.b[i], u.p, channel_gain(u.d, sc.channel), sc.channel)
        totals.append(delays(u, sc.catalog[dec.m[i]], sc.teacher, dec.x[i],
                             al.f[i], rate).total())
    counts = np.bincount(dec.m, minlength=n_models)
    return TrialResult(
        trial=trial,
        objective=float(obj),
        avg_delay_s=float(np.mean(totals)),
        acc_own=float(np.mean(acc_own)),
        acc_avg=float(np.mean(acc_avg)),
        freq=tuple(float(c) / n for c in counts),
        x=dec.x, m=dec.m, f=al.f, b=al.b,
    )


# ---------------------------------------------------------------------------
# q-only action coding: per-user digit packs x, m, and one grid level for
# each resource; level k means (k + 1) / levels of the full budget.


def _qonly_radix(n_models: int, levels: int) -> int:
    return 2 * n_models * levels * levels


def qonly_action_count(sc: Scenario, levels: int) -> int:
    return _qonly_radix(len(sc.catalog), levels) ** sc.n_users


def decode_qonly(a: int, sc: Scenario, levels: int):
    """-> (Decision, f list, b list); resources may violate the budgets."""
    n_models = len(sc.catalog)
    radix = _qonly_radix(n_models, levels)
    x, m, f, b = [], [], [], []
    for _ in range(sc.n_users):
        digit = a % radix
        a //= radix
        x.append(digit % 2)
        digit //= 2
        m.append(digit % n_models)
        digit //= n_models
        f.append((digit % levels + 1) * sc.server.f_ser / levels)
        digit //= levels
        b.append((digit + 1) * sc.server.b_max / levels)
    return Decision(x=tuple(x), m=tuple(m)), f, b


def _qonly_reward(sc: Scenario, a: int, levels: int, accs, penalty: float) -> float:
    dec, f, b = decode_qonly(a, sc, levels)
    if sum(f) > sc.server.f_ser or sum(b) > sc.server.b_max:
        return penalty
    acc_own = [accs[mi][0] for mi in dec.m]
    acc_avg = [accs[mi][1] for mi in dec.m]
    return -objective(sc, dec, Allocation(f=tuple(f), b=tuple(b)), acc_own, acc_avg)


# ---------------------------------------------------------------------------
# offload-only coding for the fixed-model baselines


def _xonly_reward(sc: Scenario, a: int, m_fixed: int, accs, penalty: float) -> float:
    x = tuple((a >> i) & 1 for i in range(sc.n_users))
    dec = Decision(x=x, m=tuple(m_fixed for _ in range(sc.n_users)))
    try:
        res = allocate(sc, dec)
    except ValueError:
        return penalty
    acc_own = [accs[mi][0] for mi in dec.m]
    acc_avg = [accs[mi][1] for mi in dec.m]
    return -objective(sc, dec, res.allocation, acc_own, acc_avg)


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Train the configured method and evaluate it on seeded draws.

    The evaluation draws depend only on (scenario template, seed, trials),
    never on the method, so reports from different methods compare like
    for like.  Identical configs produce identical reports.
    """
    template = cfg.scenario
    n, n_models = template.n_users, len(template.catalog)
    eval_ss, train_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    eval_rng = np.random.Generator(np.random.PCG64(eval_ss))
    draws = [sample_scenario(template, eval_rng, cfg.f_loc_range, cfg.d_range)
             for _ in range(cfg.trials)]
    train_rng = np.random.Generator(np.random.PCG64(train_ss))

    def sampler(rng: np.random.Generator) -> Scenario:
        return sample_scenario(template, rng, cfg.f_loc_range, cfg.d_range)

    report = Report(method=cfg.method, seed=cfg.seed, n_users=n,
                    model_names=tuple(m.name for m in template.catalog))

    if cfg.method == "exhaustive":
        accs = _acc_by_model(cfg, "KD")
        for t, draw in enumerate(draws):
            dec, _ = exhaustive_optimum(draw, accs)
            al = allocate(draw, dec).allocation
            report.trials.append(_evaluate(draw, dec, al, accs, t, False, cfg.penalty))
        return report

    if cfg.method == "proposed":
        accs = _acc_by_model(cfg, "KD")
        q = train(sampler, cfg.q, train_rng, accs)
        for t, draw in enumerate(draws):
            a = q.greedy_action(encode_state(draw, cfg.q), action_count(draw))
            dec = decode_action(a, n, n_models)
            al = allocate(draw, dec).allocation
            report.trials.append(_evaluate(draw, dec, al, accs, t, False, cfg.penalty))
        return report

    if cfg.method == "q-only":
        accs = _acc_by_model(cfg, "KD")
        levels = cfg.resource_levels
        if n > levels:
            raise ValueError(
                f"q-only needs at least one grid level per user: "
                f"{n} users but {levels} levels; raise resource_levels")
        n_actions = qonly_action_count(template, levels)
        if n_actions > ACTION_SPACE_CAP:
            raise ValueError(
                f"q-only action space {n_actions} exceeds {ACTION_SPACE_CAP}; "
                "reduce resource_levels, users, or catalog size")
        q = train_loop(sampler, cfg.q, train_rng,
                       lambda sc: qonly_action_count(sc, levels),
                       lambda sc, a: _qonly_reward(sc, a, levels, accs, cfg.penalty))
        for t, draw in enumerate(draws):
            a = q.greedy_action(encode_state(draw, cfg.q), n_actions)
            dec, f, b = decode_qonly(a, draw, levels)
            penalized = sum(f) > draw.server.f_ser or sum(b) > draw.server.b_max
            al = Allocation(f=tuple(f), b=tuple(b))
            report.trials.append(_evaluate(draw, dec, al, accs, t, penalized, cfg.penalty))
        return report

    # fl-min / fl-max: fixed model, offload decision learned
    accs = _acc_by_model(cfg, "FL")
    mus = [m.mu for m in template.catalog]
    m_fixed = mus.index(min(mus)) if cfg.method == "fl-min" else mus.index(max(mus))
    q = train_loop(sampler, cfg.q, train_rng,
                   lambda sc: 2 ** sc.n_users,
                   lambda sc, a: _xonly_reward(sc, a, m_fixed, accs, cfg.penalty))
    for t, draw in enumerate(draws):
        a = q.greedy_action(encode_state(draw, cfg.q), 2 ** n)
        x = tuple((a >> i) & 1 for i in range(n))
        dec = Decision(x=x, m=tuple(m_fixed for _ in range(n)))
        al = allocate(draw, dec).allocation
        report.trials.append(_evaluate(draw, dec, al, accs, t, False, cfg.penalty))
    return report


# ---------------------------------------------------------------------------
# report emission


def _fmt(v) -> str:
    return repr(float(v))


def report_rows(report: Report) -> list[list[str]]:
    """Header plus one row per trial, all cells pre-formatted."""
    header = ["trial", "method", "objective", "avg_delay_s", "acc_own", "acc_avg"]
    header += [f"freq_{name}" for name in report.model_names]
    header += [f"x{i}" for i in range(report.n_users)]
    header += [f"m{i}" for i in range(report.n_users)]
    header += [f"f{i}" for i in range(report.n_users)]
    header += [f"b{i}" for i in range(report.n_users)]
    rows = [header]
    for t in report.trials:
        row = [str(t.trial), report.method, _fmt(t.objective), _fmt(t.avg_delay_s),
               _fmt(t.acc_own), _fmt(t.acc_avg)]
        row += [_fmt(v) for v in t.freq]
        row += [str(v) for v in t.x]
        row += [str(v) for v in t.m]
        row += [_fmt(v) for v in t.f]
        row += [_fmt(v) for v in t.b]
        rows.append(row)
    return rows


def summary_dict(report: Report) -> dict:
    def mean_or_none(attr: str):
        return report.mean(attr) if report.trials else None

    return {
        "method": report.method,
        "seed": report.seed,
        "trials": len(report.trials),
        "objective_mean": mean_or_none("objective"),
        "avg_delay_s_mean": mean_or_none("avg_delay_s"),
        "acc_own_mean": mean_or_none("acc_own"),
        "acc_avg_mean": mean_or_none("acc_avg"),
        "model_frequencies": {name: freq for name, freq in
                              zip(report.model_names, report.model_frequencies())},
    }


def emit_report(report: Report, out_dir) -> tuple[Path, Path]:
    """Write trials.csv and summary.json under out_dir; deterministic bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials_path = out / "trials.csv"
    with open(trials_path, "w", encoding="utf-8", newline="") as fh:
        for row in report_rows(report):
            fh.write(",".join(row) + "\n")
    summary_path = out / "summary.json"
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(summary_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return trials_path, summary_path
