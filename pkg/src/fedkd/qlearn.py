"""Tabular Q-learning over the joint discrete action (x, m) for all users.

Each episode is one-shot: a scenario is drawn, the agent picks a joint
offload/model action for every user, the continuous resources are filled
in by the convex allocator, and the negated total cost is the reward.
The successor state is terminal, so the update's bootstrap term is zero;
the discount knob is kept for the general update rule.

The table is a hash map and missing entries read as 0, which doubles as
optimistic initialization when rewards are negative.  The greedy argmax
honors that convention without enumerating the action space, so very
large action encodings (the resource-grid variant in the experiment
runner) remain usable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .allocator import allocate
from .model import Decision, Scenario, channel_gain, objective

logger = logging.getLogger(__name__)

#: Reward assigned to actions whose induced subproblem is infeasible.
INFEASIBLE_REWARD = -1e6

#: exhaustive_optimum refuses action spaces larger than this.
EXHAUSTIVE_CAP = 10 ** 6

StateKey = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class QConfig:
    lr: float = 0.2                 # update step size in (0, 1]
    discount: float = 0.9          # bootstrap weight in [0, 1); unused one-shot
    epsilon0: float = 1.0
    epsilon_decay: float = 0.999
    epsilon_floor: float = 0.05
    episodes: int = 5000
    f_bins: int = 4                 # quantization of each user's local CPU
    h_bins: int = 4                 # quantization of each user's log10 gain
    f_range: tuple[float, float] = (0.5, 2.0)
    h_log_range: tuple[float, float] = (-9.6, -6.8)  # log10 gain for d in [10, 100] m

    def __post_init__(self) -> None:
        if not 0.0 < self.lr <= 1.0:
            raise ValueError(f"lr must be in (0, 1], got {self.lr}")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        for name in ("epsilon0", "epsilon_decay", "epsilon_floor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.f_bins < 1 or self.h_bins < 1:
            raise ValueError("state bins must be >= 1")

    def epsilon_at(self, episode: int) -> float:
        return max(self.epsilon_floor, self.epsilon0 * self.epsilon_decay ** episode)


class QTable:
    """Hash-table from (state, action) to (value, visits); missing reads 0."""

    def __init__(self) -> None:
        self._rows: dict[StateKey, dict[int, list]] = {}

    def __len__(self) -> int:
        return sum(len(row) for row in self._rows.values())

    @property
    def states(self) -> int:
        return len(self._rows)

    def value(self, s: StateKey, a: int) -> float:
        entry = self._rows.get(s, {}).get(a)
        return entry[0] if entry is not None else 0.0

    def visits(self, s: StateKey, a: int) -> int:
        entry = self._rows.get(s, {}).get(a)
        return entry[1] if entry is not None else 0

    def set(self, s: StateKey, a: int, value: float, visits: int) -> None:
        self._rows.setdefault(s, {})[a] = [value, visits]

    def entries(self) -> Iterator[tuple[StateKey, int, float, int]]:
        for s, row in self._rows.items():
            for a, (v, n) in row.items():
                yield s, a, v, n

    def max_value(self, s: StateKey, action_count: int | None = None) -> float:
        """max over all actions, with unstored entries counting as 0."""
        row = self._rows.get(s)
        best = max((e[0] for e in row.values()), default=0.0) if row else 0.0
        if action_count is not None and row is not None and len(row) >= action_count:
            return best
        return max(best, 0.0)

    def greedy_action(self, s: StateKey, action_count: int) -> int:
        """Argmax over the full action set with lowest-index tie-breaking.

        Only stored entries are scanned; the first unstored index stands in
        for every zero-valued unexplored action.
        """
        row = self._rows.get(s)
        if not row:
            return 0
        best_a, best_v = None, -math.inf
        for a, (v, _) in row.items():
            if v > best_v or (v == best_v and a < best_a):
                best_a, best_v = a, v
        if len(row) < action_count:
            first_free = 0
            while first_free in row:
                first_free += 1
            if best_v < 0.0 or (best_v == 0.0 and first_free < best_a):
                return first_free
        return best_a

    def save(self, path) -> None:
        """Flat record file: one tab-separated row per stored entry."""
        lines = ["state\taction\tvalue\tvisits\n"]
        for s, a, v, n in sorted(self.entries()):
            flat = ",".join(str(i) for pair in s for i in pair)
            lines.append(f"{flat}\t{a}\t{v!r}\t{n}\n")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.writelines(lines)

    @classmethod
    def load(cls, path) -> "QTable":
        table = cls()
        with open(path, encoding="utf-8") as fh:
            next(fh)  # header
            for line in fh:
                flat, a, v, n = line.rstrip("\n").split("\t")
                ints = [int(tok) for tok in flat.split(",")]
                s = tuple(zip(ints[0::2], ints[1::2]))
                table.set(s, int(a), float(v), int(n))
        return table


def _quantize(value: float, lo: float, hi: float, bins: int) -> int:
    """Uniform bin index over [lo, hi); hi itself maps to the top bin.

    Values strictly outside the range clamp to the boundary bin and are
    logged, since they indicate a sampler/config mismatch.
    """
    if bins == 1:
        return 0
    if value < lo or value > hi:
        logger.warning("state component %g outside configured range [%g, %g]; clamped",
                       value, lo, hi)
    idx = int(math.floor((value - lo) / (hi - lo) * bins))
    return min(max(idx, 0), bins - 1)


def encode_state(sc: Scenario, cfg: QConfig) -> StateKey:
    """Quantized (f_loc bin, gain bin) per user; gain binned in log10."""
    key = []
    for u in sc.users:
        fb = _quantize(u.f_loc, cfg.f_range[0], cfg.f_range[1], cfg.f_bins)
        h = channel_gain(u.d, sc.channel)
        hb = _quantize(math.log10(h), cfg.h_log_range[0], cfg.h_log_range[1], cfg.h_bins)
        key.append((fb, hb))
    return tuple(key)


def action_count(sc: Scenario) -> int:
    """Size of the joint offload/model action space, (2 |M|)^N."""
    return (2 * len(sc.catalog)) ** sc.n_users


def encode_decision(dec: Decision, n_models: int) -> int:
    """Pack per-user (x_i, m_i) digits into one base-(2 |M|) integer."""
    radix = 2 * n_models
    a = 0
    for xi, mi in zip(reversed(dec.x), reversed(dec.m)):
        a = a * radix + (xi * n_models + mi)
    return a


def decode_action(a: int, n_users: int, n_models: int) -> Decision:
    radix = 2 * n_models
    x, m = [], []
    for _ in range(n_users):
        digit = a % radix
        a //= radix
        x.append(digit // n_models)
        m.append(digit % n_models)
    return Decision(x=tuple(x), m=tuple(m))


def select_action(q: QTable, s: StateKey, epsilon: float,
                  rng: np.random.Generator, n_actions: int) -> int:
    """Epsilon-greedy: uniform with probability epsilon, else table argmax."""
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(n_actions))
    return q.greedy_action(s, n_actions)


def reward(sc: Scenario, a: int, acc_by_model: Sequence[tuple[float, float]],
           penalty: float = INFEASIBLE_REWARD) -> float:
    """Negated total cost of action a under the optimal resource split.

    acc_by_model[m] = (acc_own, acc_avg) fractions for catalog entry m,
    typically from the published-accuracy table.  Infeasible allocations
    earn `penalty` so the agent learns to avoid them.
    """
    dec = decode_action(a, sc.n_users, len(sc.catalog))
    dec.validate(sc)
    try:
        res = allocate(sc, dec)
        acc_own = [acc_by_model[mi][0] for mi in dec.m]
        acc_avg = [acc_by_model[mi][1] for mi in dec.m]
        return -objective(sc, dec, res.allocation, acc_own, acc_avg)
    except ValueError:
        return penalty


def update(q: QTable, s: StateKey, a: int, r: float, s_next: StateKey | None,
           cfg: QConfig, n_actions: int | None = None) -> float:
    """One tabular update; s_next=None marks a terminal transition.

        Q(s, a) <- Q(s, a) + lr * (r + discount * max_a' Q(s', a') - Q(s, a))
    """
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r}")
    bootstrap = 0.0 if s_next is None else q.max_value(s_next, n_actions)
    old = q.value(s, a)
    new = old + cfg.lr * (r + cfg.discount * bootstrap - old)
    q.set(s, a, new, q.visits(s, a) + 1)
    return new


def train_loop(sampler: Callable[[np.random.Generator], Scenario],
               cfg: QConfig, rng: np.random.Generator,
               n_actions_of: Callable[[Scenario], int],
               reward_fn: Callable[[Scenario, int], float]) -> QTable:
    """Generic one-shot-episode loop shared by all the table-based agents.

    Rewards are memoized per (scenario, action); scenarios hash by value,
    so static-scenario training pays for each action's allocation once.
    The action-space size must not change between episodes.
    """
    q = QTable()
    cache: dict[tuple[Scenario, int], float] = {}
    n_actions = None
    for ep in range(cfg.episodes):
        sc = sampler(rng)
        if n_actions is None:
            n_actions = n_actions_of(sc)
        elif n_actions != n_actions_of(sc):
            raise ValueError("sampler changed the action-space size mid-training")
        s = encode_state(sc, cfg)
        a = select_action(q, s, cfg.epsilon_at(ep), rng, n_actions)
        key = (sc, a)
        r = cache.get(key)
        if r is None:
            r = reward_fn(sc, a)
            cache[key] = r
        update(q, s, a, r, None, cfg)
    return q


def train(sampler: Callable[[np.random.Generator], Scenario], cfg: QConfig,
          rng: np.random.Generator,
          acc_by_model: Sequence[tuple[float, float]]) -> QTable:
    """Train the joint offload/model agent on a scenario distribution.

    The sampler must keep the user count and catalog fixed; only the
    per-user parameters may vary between episodes.  Fully deterministic
    for a fixed rng seed.
    """
    return train_loop(sampler, cfg, rng, action_count,
                      lambda sc, a: reward(sc, a, acc_by_model))


def exhaustive_optimum(sc: Scenario, acc_by_model: Sequence[tuple[float, float]],
                       cap: int = EXHAUSTIVE_CAP) -> tuple[Decision, float]:
    """Enumerate every decision, allocate optimally, return the minimizer.

    This is the reference the trained agent is compared against; it is
    exact whenever the action space fits under `cap`.
    """
    n = action_count(sc)
    if n > cap:
        raise ValueError(
            f"action space {n} exceeds the enumeration cap {cap}; "
            "reduce users or catalog size")
    best_dec, best_val = None, math.inf
    for a in range(n):
        dec = decode_action(a, sc.n_users, len(sc.catalog))
        res = allocate(sc, dec)
        acc_own = [acc_by_model[mi][0] for mi in dec.m]
        acc_avg = [acc_by_model[mi][1] for mi in dec.m]
        val = objective(sc, dec, res.allocation, acc_own, acc_avg)
        if val < best_val:
            best_dec, best_val = dec, val
    return best_dec, best_val
