"""Optimal continuous resource allocation for a fixed discrete decision.

With the offload flags and model choices pinned, the remaining objective
separates into a CPU part and a bandwidth part:

    sum_i c_i / f_i                     subject to  sum f_i <= f_ser
    sum_i (d_i / b_i + delta_b * b_i)   subject to  sum b_i <= b_max

Both are convex.  The CPU part always exhausts its budget (it is strictly
decreasing in every f_i) and has the closed form f_i ~ sqrt(c_i).  The
bandwidth part has per-user interior optima sqrt(d_i / delta_b); when those
overshoot the budget, the common multiplier lambda is found by bisection.

grid_oracle is the independent check: an exact search over the discretized
budget simplex, organized as a dynamic program so it stays tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    Allocation,
    Decision,
    Scenario,
    channel_gain,
    delays,
    tx_rate,
)

#: Lower bound applied to every resource share so downstream delay
#: evaluations never divide by zero.  The true optimum is interior
#: (the objective diverges as f_i, b_i -> 0), so the floor is inactive
#: for any sane instance.
RESOURCE_FLOOR = 1e-6

#: Bisection stops when |sum(b) - b_max| <= BISECT_RTOL * b_max.
BISECT_RTOL = 1e-9
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class AllocProblem:
    """Coefficients of the f/b-dependent objective for one decision.

    c[i] weights the server-CPU delay (teacher forward plus, for server
    training, the student update); d[i] weights the transmit delay
    (parameter sync plus, for local training, the teacher-output download),
    already divided by the per-MHz spectral efficiency log2(1 + SNR_i).
    constant collects the decision-only terms (local student-update delay
    and the purchased-compute cost) so the full fixed-decision objective is
    constant + fb_objective(f, b).
    """

    c: tuple[float, ...]
    d: tuple[float, ...]
    delta_b: float
    f_ser: float
    b_max: float
    constant: float


@dataclass(frozen=True)
class AllocResult:
    allocation: Allocation
    objective_fb: float     # f/b-dependent objective at the returned point
    kkt_residual: float     # max relative stationarity/complementarity violation


def build_problem(sc: Scenario, dec: Decision) -> AllocProblem:
    """Reduce a scenario plus decision to the two separable subproblems."""
    dec.validate(sc)
    w = sc.weights
    if w.alpha_d <= 0:
        raise ValueError(
            "alpha_d must be > 0 to allocate resources: with no delay "
            "weight every c_i and d_i vanishes and the split is arbitrary")
    c, d = [], []
    constant = 0.0
    for i, u in enumerate(sc.users):
        xi, mi = dec.x[i], sc.catalog[dec.m[i]]
        h = channel_gain(u.d, sc.channel)
        eff = math.log2(1.0 + u.p * h / sc.channel.n0)  # Mbit/s per MHz
        if eff <= 0:
            raise ValueError(f"user {u.id} has zero spectral efficiency")
        c.append(w.alpha_d * (sc.teacher.mu_t + (1 - xi) * mi.mu))
        d.append(w.alpha_d * (xi * sc.teacher.theta_l + mi.theta_s) / eff)
        constant += w.alpha_d * xi * mi.mu / u.f_loc
        constant += w.beta_c * (sc.teacher.mu_t + (1 - xi) * mi.mu)
    return AllocProblem(c=tuple(c), d=tuple(d), delta_b=w.delta_b,
                        f_ser=sc.server.f_ser, b_max=sc.server.b_max,
                        constant=constant)


def allocate_compute(c, f_ser: float) -> list[float]:
    """Minimize sum c_i / f_i over sum f_i <= f_ser.

    The budget binds, and stationarity c_i / f_i^2 = const gives
    f_i = f_ser * sqrt(c_i) / sum_j sqrt(c_j).
    """
    c = list(c)
    if not c:
        raise ValueError("allocate_compute needs at least one user")
    if any(ci <= 0 for ci in c):
        raise ValueError("all compute weights must be > 0")
    if f_ser <= 0:
        raise ValueError(f"f_ser must be > 0, got {f_ser}")
    roots = [math.sqrt(ci) for ci in c]
    total = sum(roots)
    return [max(RESOURCE_FLOOR, f_ser * r / total) for r in roots]


def allocate_bandwidth(d, delta_b: float, b_max: float) -> list[float]:
    """Minimize sum (d_i / b_i + delta_b * b_i) over sum b_i <= b_max.

    Stationarity gives b_i(lambda) = sqrt(d_i / (delta_b + lambda)).  If the
    unconstrained point (lambda = 0) fits the budget it is optimal;
    otherwise lambda > 0 is raised by bisection until the budget is met.
    delta_b = 0 is allowed only when the budget binds, which it then always
    does because the unconstrained optimum is infinite.
    """
    d = list(d)
    if not d:
        raise ValueError("allocate_bandwidth needs at least one user")
    if any(di <= 0 for di in d):
        raise ValueError("all bandwidth weights must be > 0")
    if delta_b < 0:
        raise ValueError(f"delta_b must be >= 0, got {delta_b}")
    if b_max <= 0:
        raise ValueError(f"b_max must be > 0, got {b_max}")

    roots = np.sqrt(np.asarray(d, dtype=float))

    def shares(lam: float) -> np.ndarray:
        return roots / math.sqrt(delta_b + lam)

    if delta_b > 0 and float(shares(0.0).sum()) <= b_max:
        b = shares(0.0)
    else:
        lo, hi = 0.0, 1.0
        while float(shares(hi).sum()) >= b_max:
            hi *= 2.0
        b = shares(hi)
        for _ in range(BISECT_MAX_ITER):
            mid = 0.5 * (lo + hi)
            total = float(shares(mid).sum())
            if abs(total - b_max) <= BISECT_RTOL * b_max:
                hi = mid
                break
            if total > b_max:
                lo = mid
            else:
                hi = mid
        b = shares(hi)  # hi side keeps the budget satisfied
    return [max(RESOURCE_FLOOR, float(v)) for v in b]


def fb_objective(prob: AllocProblem, f, b) -> float:
    """The f/b-dependent objective sum c/f + sum (d/b + delta_b * b)."""
    return (sum(ci / fi for ci, fi in zip(prob.c, f))
            + sum(di / bi + prob.delta_b * bi for di, bi in zip(prob.d, b)))


def kkt_residual(prob: AllocProblem, f, b) -> float:
    """Max relative violation of stationarity and complementary slackness.

    Stationarity requires c_i / f_i^2 to share one multiplier nu across
    users, and d_i / b_i^2 to share delta_b + lambda.  Complementarity
    requires the CPU budget to bind (nu > 0 always) and the bandwidth
    budget to bind whenever lambda > 0.
    """
    f = np.asarray(f, dtype=float)
    b = np.asarray(b, dtype=float)
    nu_per_user = np.asarray(prob.c) / f ** 2
    nu = float(nu_per_user.mean())
    res = float(np.abs(nu_per_user - nu).max() / nu)
    res = max(res, abs(float(f.sum()) - prob.f_ser) / prob.f_ser)

    mult_per_user = np.asarray(prob.d) / b ** 2
    mult = float(mult_per_user.mean())       # delta_b + lambda
    res = max(res, float(np.abs(mult_per_user - mult).max() / mult))
    lam = mult - prob.delta_b
    if lam > BISECT_RTOL * max(1.0, mult):   # budget constraint active
        res = max(res, abs(float(b.sum()) - prob.b_max) / prob.b_max)
    else:                                    # interior: only feasibility
        res = max(res, max(0.0, float(b.sum()) - prob.b_max) / prob.b_max)
    return res


def allocate(sc: Scenario, dec: Decision) -> AllocResult:
    """Closed-form optimal allocation for a fixed decision."""
    prob = build_problem(sc, dec)
    f = allocate_compute(prob.c, prob.f_ser)
    b = allocate_bandwidth(prob.d, prob.delta_b, prob.b_max)
    return AllocResult(
        allocation=Allocation(f=tuple(f), b=tuple(b)),
        objective_fb=fb_objective(prob, f, b),
        kkt_residual=kkt_residual(prob, f, b),
    )


def fb_objective_via_delays(sc: Scenario, dec: Decision, al: Allocation) -> float:
    """Independent route to the f/b-dependent objective through the delay
    formulas, for cross-checking allocate()'s algebra."""
    w = sc.weights
    total = 0.0
    for i, u in enumerate(sc.users):
        xi, mi = dec.x[i], sc.catalog[dec.m[i]]
        rate = tx_rate(al.b[i], u.p, channel_gain(u.d, sc.channel), sc.channel)
        dl = delays(u, mi, sc.teacher, xi, al.f[i], rate)
        fb_delay = dl.t_tea + dl.t_model + xi * dl.t_label + (1 - xi) * dl.t_stu
        total += w.alpha_d * fb_delay + w.delta_b * al.b[i]
    return total


def _grid_min(costs: np.ndarray, exact_total: bool) -> tuple[float, list[int]]:
    """Exact minimum of sum_i costs[i][k_i] over unit counts k_i >= 1 with
    sum k_i <= steps (or == steps), via a min-plus dynamic program.

    costs[i][k] is user i's cost at k+1 units.  Returns (value, units).
    """
    n, steps = costs.shape
    inf = float("inf")
    # best[k] = minimal cost of splitting exactly k units among users 0..i
    best = np.full(steps + 1, inf)
    best[1:] = costs[0]
    choice = []
    for i in range(1, n):
        cur = np.full(steps + 1, inf)
        pick = np.zeros(steps + 1, dtype=int)
        for k in range(i + 1, steps + 1):
            # user i takes j units (1..k-i), previous users take k-j
            j = np.arange(1, k - i + 1)
            vals = costs[i][j - 1] + best[k - j]
            a = int(np.argmin(vals))
            cur[k] = vals[a]
            pick[k] = a + 1
        best = cur
        choice.append(pick)

    if exact_total:
        k_star = steps
    else:
        k_star = int(np.argmin(best))
    value = float(best[k_star])

    units = [0] * n
    k = k_star
    for i in range(n - 1, 0, -1):
        units[i] = int(choice[i - 1][k])
        k -= units[i]
    units[0] = k
    return value, units


def grid_oracle(sc: Scenario, dec: Decision, steps: int) -> AllocResult:
    """Exhaustive search over the discretized budget simplex.

    Each resource is split into `steps` equal units; every feasible integer
    split (at least one unit per user) is covered exactly by the dynamic
    program.  Used in tests to bound allocate() from above.
    """
    if steps < 10:
        raise ValueError(f"steps must be >= 10, got {steps}")
    prob = build_problem(sc, dec)
    n = sc.n_users
    if n > steps:
        raise ValueError(f"{n} users cannot share {steps} grid units")

    df = prob.f_ser / steps
    db = prob.b_max / steps
    k = np.arange(1, steps + 1, dtype=float)
    f_costs = np.asarray(prob.c)[:, None] / (k * df)[None, :]
    b_costs = (np.asarray(prob.d)[:, None] / (k * db)[None, :]
               + prob.delta_b * (k * db)[None, :])

    # CPU objective is strictly decreasing in every share: budget binds.
    f_val, f_units = _grid_min(f_costs, exact_total=True)
    b_val, b_units = _grid_min(b_costs, exact_total=False)

    f = [u * df for u in f_units]
    b = [u * db for u in b_units]
    return AllocResult(
        allocation=Allocation(f=tuple(f), b=tuple(b)),
        objective_fb=f_val + b_val,
        kkt_residual=kkt_residual(prob, f, b),
    )
