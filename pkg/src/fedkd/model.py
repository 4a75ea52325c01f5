"""Domain types and closed-form system physics.

Everything here is a pure function of its inputs: channel gain, wireless
transmission rate, the four per-epoch delay components of one training
round, and the full per-round cost objective that the optimizer minimizes.

Unit conventions (chosen so magnitudes stay near 1):
    CPU frequencies        GHz
    update costs (mu)      giga-cycles per epoch, so mu / f is seconds
    payload sizes (theta)  megabits
    bandwidth              MHz
    rates                  Mbit/s, so theta / rate is seconds
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class InfeasibleError(ValueError):
    """A requested evaluation has no finite value (e.g. zero transmit rate)."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class ChannelSpec:
    """Static path-loss channel: gain g0 at 1 m decaying as d^-gamma."""

    g0: float = 1e-4        # reference gain at 1 m, linear (-40 dB)
    gamma: float = 2.8      # path-loss exponent
    n0: float = 1e-13       # noise power, watts

    def __post_init__(self) -> None:
        _require(self.g0 > 0, "ChannelSpec.g0 must be > 0")
        _require(self.gamma > 0, "ChannelSpec.gamma must be > 0")
        _require(self.n0 > 0, "ChannelSpec.n0 must be > 0")


@dataclass(frozen=True)
class UserSpec:
    id: int
    f_loc: float            # local CPU frequency, GHz
    d: float                # distance to server, meters
    p: float = 0.1          # transmit power, watts
    dataset_size: int = 12500

    def __post_init__(self) -> None:
        _require(self.f_loc > 0, f"UserSpec.f_loc must be > 0 (user {self.id})")
        _require(self.d > 0, f"UserSpec.d must be > 0 (user {self.id})")
        _require(self.p > 0, f"UserSpec.p must be > 0 (user {self.id})")


@dataclass(frozen=True)
class ModelSpec:
    """One candidate student network.

    mu is the per-epoch update cost in giga-cycles, numerically the seconds
    needed to train one epoch at 1 GHz.  theta_s is the parameter payload
    synchronized between device and server each epoch.
    """

    name: str
    mu: float               # giga-cycles per epoch
    theta_s: float          # megabits

    def __post_init__(self) -> None:
        _require(self.mu > 0, f"ModelSpec.mu must be > 0 ({self.name})")
        _require(self.theta_s > 0, f"ModelSpec.theta_s must be > 0 ({self.name})")


@dataclass(frozen=True)
class TeacherSpec:
    mu_t: float = 8.0       # teacher forward cost per epoch, giga-cycles
    theta_l: float = 20.0   # teacher-output payload, megabits

    def __post_init__(self) -> None:
        _require(self.mu_t > 0, "TeacherSpec.mu_t must be > 0")
        _require(self.theta_l > 0, "TeacherSpec.theta_l must be > 0")


@dataclass(frozen=True)
class ServerSpec:
    f_ser: float = 10.0     # total divisible server CPU, GHz
    b_max: float = 10.0     # total bandwidth, MHz

    def __post_init__(self) -> None:
        _require(self.f_ser > 0, "ServerSpec.f_ser must be > 0")
        _require(self.b_max > 0, "ServerSpec.b_max must be > 0")


@dataclass(frozen=True)
class ObjectiveWeights:
    """Nonnegative prices on delay, compute cost, bandwidth cost, and the
    (negated) per-user accuracy rewards."""

    alpha_d: float = 0.01   # per second of delay
    beta_c: float = 0.001   # per GHz-second of purchased server compute
    delta_b: float = 0.001  # per MHz of bandwidth
    eta_o: float = 1.0      # own-dataset accuracy reward
    eta_a: float = 0.25     # all-datasets average accuracy reward

    def __post_init__(self) -> None:
        vals = (self.alpha_d, self.beta_c, self.delta_b, self.eta_o, self.eta_a)
        _require(all(v >= 0 for v in vals), "ObjectiveWeights must be nonnegative")
        _require(any(v > 0 for v in vals), "ObjectiveWeights must not be all zero")


@dataclass(frozen=True)
class Scenario:
    """A full problem instance: who the users are, what the server offers,
    which student models may be selected, and the objective prices."""

    users: tuple[UserSpec, ...]
    server: ServerSpec
    channel: ChannelSpec
    catalog: tuple[ModelSpec, ...]
    teacher: TeacherSpec
    weights: ObjectiveWeights

    def __post_init__(self) -> None:
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "catalog", tuple(self.catalog))
        _require(len(self.users) > 0, "Scenario.users must be non-empty")
        _require(len(self.catalog) > 0, "Scenario.catalog must be non-empty")

    @property
    def n_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class Decision:
    """Per-user discrete choices: x_i = 1 trains the student on the local
    CPU (teacher outputs must then be transmitted), x_i = 0 trains the
    student's digital copy on the server.  m_i indexes the catalog."""

    x: tuple[int, ...]
    m: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(int(v) for v in self.x))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        _require(len(self.x) == len(self.m), "Decision.x and Decision.m lengths differ")
        _require(all(v in (0, 1) for v in self.x), "Decision.x entries must be 0 or 1")

    def validate(self, sc: Scenario) -> None:
        _require(len(self.x) == sc.n_users,
                 f"Decision covers {len(self.x)} users, scenario has {sc.n_users}")
        _require(all(0 <= mi < len(sc.catalog) for mi in self.m),
                 "Decision.m entries must index the catalog")


@dataclass(frozen=True)
class Allocation:
    """Per-user continuous resources: server CPU shares f (GHz) and
    bandwidths b (MHz)."""

    f: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", tuple(float(v) for v in self.f))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        _require(len(self.f) == len(self.b), "Allocation.f and Allocation.b lengths differ")
        _require(all(v > 0 for v in self.f), "Allocation.f entries must be > 0")
        _require(all(v > 0 for v in self.b), "Allocation.b entries must be > 0")

    def validate(self, server: ServerSpec, tol: float = 1e-9) -> None:
        _require(sum(self.f) <= server.f_ser * (1 + tol),
                 f"sum(f)={sum(self.f)} exceeds server budget {server.f_ser}")
        _require(sum(self.b) <= server.b_max * (1 + tol),
                 f"sum(b)={sum(self.b)} exceeds bandwidth budget {server.b_max}")


@dataclass(frozen=True)
class DelayBreakdown:
    """Seconds per training epoch, split into the four components."""

    t_tea: float    # teacher forward pass on the purchased server share
    t_stu: float    # student parameter update (server or local CPU)
    t_label: float  # teacher-output download, zero when training on server
    t_model: float  # student-parameter synchronization transfer

    def total(self) -> float:
        """Sum of all components; t_label is already zero when x_i = 0."""
        return self.t_tea + self.t_stu + self.t_label + self.t_model


def channel_gain(d: float, ch: ChannelSpec) -> float:
    """Linear channel gain g0 / d^gamma at distance d meters."""
    if d <= 0:
        raise ValueError(f"distance must be > 0, got {d}")
    return ch.g0 / d ** ch.gamma


def tx_rate(b: float, p: float, h: float, ch: ChannelSpec) -> float:
    """Transmission rate b * log2(1 + p*h/n0) in Mbit/s for bandwidth b MHz.

    n0 is a fixed total noise power, so the rate is exactly linear in b.
    b = 0 or p = 0 legitimately yields rate 0; callers that divide by the
    rate must handle that case.
    """
    _require(b >= 0, f"bandwidth must be >= 0, got {b}")
    _require(p >= 0, f"power must be >= 0, got {p}")
    _require(h > 0, f"channel gain must be > 0, got {h}")
    return b * math.log2(1.0 + p * h / ch.n0)


def delays(u: UserSpec, mi: ModelSpec, teacher: TeacherSpec, xi: int,
           fi: float, rate_i: float) -> DelayBreakdown:
    """Per-epoch delay components for one user.

    The teacher always runs on the purchased server share fi.  The student
    update runs on fi when xi = 0 (server training) and on the user's own
    CPU when xi = 1 (local training); only local training needs the
    teacher outputs transmitted.  Model parameters are synchronized between
    physical and digital space either way.
    """
    _require(fi > 0, f"server CPU share must be > 0, got {fi}")
    if rate_i <= 0:
        raise InfeasibleError(
            f"transmit rate {rate_i} yields infinite delay (user {u.id})")
    t_tea = teacher.mu_t / fi
    t_stu = mi.mu / u.f_loc if xi else mi.mu / fi
    t_label = teacher.theta_l / rate_i if xi else 0.0
    t_model = mi.theta_s / rate_i
    return DelayBreakdown(t_tea=t_tea, t_stu=t_stu, t_label=t_label, t_model=t_model)


def objective(sc: Scenario, dec: Decision, al: Allocation,
              acc_own: list[float] | tuple[float, ...],
              acc_avg: list[float] | tuple[float, ...]) -> float:
    """Total per-round cost for the given decision and allocation.

    Per user i:

        alpha_d * (t_tea + t_stu + t_model + x_i * t_label)
      + beta_c  * (t_tea * f_i + (1 - x_i) * t_stu * f_i)
      + delta_b * b_i
      - eta_o * acc_own_i - eta_a * acc_avg_i

    The beta term is allocation-independent by the identity
    t_tea * f_i = mu_t and (1 - x_i) * t_stu * f_i = (1 - x_i) * mu_{m_i}.
    Accuracies are fractions in [0, 1].
    """
    dec.validate(sc)
    n = sc.n_users
    _require(len(al.f) == n, f"Allocation covers {len(al.f)} users, expected {n}")
    _require(len(acc_own) == n and len(acc_avg) == n,
             f"accuracy lists must have one entry per user ({n})")
    _require(all(0.0 <= a <= 1.0 for a in acc_own), "acc_own entries must be in [0, 1]")
    _require(all(0.0 <= a <= 1.0 for a in acc_avg), "acc_avg entries must be in [0, 1]")
    w = sc.weights
    total = 0.0
    for i, u in enumerate(sc.users):
        xi, mi = dec.x[i], sc.catalog[dec.m[i]]
        h = channel_gain(u.d, sc.channel)
        rate = tx_rate(al.b[i], u.p, h, sc.channel)
        dl = delays(u, mi, sc.teacher, xi, al.f[i], rate)
        delay = dl.t_tea + dl.t_stu + dl.t_model + xi * dl.t_label
        compute_cost = dl.t_tea * al.f[i] + (1 - xi) * dl.t_stu * al.f[i]
        total += (w.alpha_d * delay + w.beta_c * compute_cost + w.delta_b * al.b[i]
                  - w.eta_o * acc_own[i] - w.eta_a * acc_avg[i])
    return total


#: Catalog defaults.  Per-epoch update costs at 1 GHz are measured values;
#: payload sizes are configurable placeholders scaled to plausible
#: parameter counts (payloads are never published alongside the costs).
DEFAULT_CATALOG = (
    ModelSpec(name="VGG-8", mu=6.83, theta_s=150.0),
    ModelSpec(name="ResNet-8x4", mu=8.75, theta_s=39.0),
    ModelSpec(name="ResNet-14x4", mu=12.27, theta_s=88.0),
    ModelSpec(name="ResNet-26x4", mu=18.96, theta_s=186.0),
)

#: Four users spanning the default f_loc range [0.5, 2] GHz and the default
#: distance range [10, 100] m.
DEFAULT_USERS = (
    UserSpec(id=0, f_loc=0.5, d=10.0),
    UserSpec(id=1, f_loc=1.0, d=40.0),
    UserSpec(id=2, f_loc=1.5, d=70.0),
    UserSpec(id=3, f_loc=2.0, d=100.0),
)


def default_scenario() -> Scenario:
    """The stock 4-user / 4-model instance with default prices."""
    return Scenario(
        users=DEFAULT_USERS,
        server=ServerSpec(),
        channel=ChannelSpec(),
        catalog=DEFAULT_CATALOG,
        teacher=TeacherSpec(),
        weights=ObjectiveWeights(),
    )
