"""Strategies, outcomes and payoff bounds for the escrow game."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence


class InvalidStrategy(ValueError):
    pass


class BoundViolation(AssertionError):
    def __init__(self, violations: Sequence[str]):
        super().__init__(", ".join(violations))
        self.violations = list(violations)


class SearchBudgetExceeded(RuntimeError):
    pass


# -- endowments -----------------------------------------------------------------------

@dataclass(frozen=True)
class PlayerEndowment:
    id: int
    a: int  # deposited coins, one share each
    e: int = 0  # external coins


@dataclass(frozen=True)
class Endowments:
    players: tuple[PlayerEndowment, ...]

    def __post_init__(self):
        ids = [p.id for p in self.players]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"player ids must be 1..N, got {ids}")
        if any(p.a < 0 or p.e < 0 for p in self.players):
            raise ValueError("endowments are non-negative")
        if self.n < 3:
            raise ValueError(f"need at least 3 deposits, got {self.n}")

    @classmethod
    def of(cls, a: Sequence[int], e: Sequence[int] | None = None) -> "Endowments":
        e = [0] * len(a) if e is None else list(e)
        if len(e) != len(a):
            raise ValueError("a and e differ in length")
        return cls(tuple(PlayerEndowment(i, ai, ei) for i, (ai, ei) in enumerate(zip(a, e), start=1)))

    @property
    def N(self) -> int:
        return len(self.players)

    @property
    def a(self) -> tuple[int, ...]:
        return tuple(p.a for p in self.players)

    @property
    def e(self) -> tuple[int, ...]:
        return tuple(p.e for p in self.players)

    @property
    def n(self) -> int:
        return sum(self.a)

    @property
    def t(self) -> int:
        return 2 * self.n // 3

    @property
    def P(self) -> int:
        return self.n - self.t

    @property
    def ell(self) -> int:
        return self.n

    def to_json(self) -> dict:
        return {"a": list(self.a), "e": list(self.e), "n": self.n, "t": self.t, "P": self.P, "ell": self.ell}


def decentralization_check(endowments: Endowments) -> bool:
    """True iff every player's deposits plus external coins are at most a third of n."""
    n = endowments.n
    return all(3 * (p.a + p.e) <= n for p in endowments.players)


# -- strategies ---------------------------------------------------------------------

class Stage2(str, Enum):
    DEFAULT = "default"  # inform when able, otherwise comply
    INFORM = "inform"
    STEAL = "steal"
    COMPLY = "comply"
    WITHHOLD = "withhold"


# mutually exclusive outcome classes that side contracts can condition on
INF, SEC_ROB, THEFT, FAIL = "INF", "SEC_ROB", "THEFT", "FAIL"
OUTCOME_CLASSES = (INF, SEC_ROB, THEFT, FAIL)


@dataclass(frozen=True)
class RegisterViaContract:
    """Register through a forwarder that hands every returned deposit to ``to``."""

    to: int


@dataclass(frozen=True)
class PledgeAll:
    """Give up all external coins when the outcome class is ``cond``; ``to=None`` burns them."""

    cond: str
    to: int | None = None

    def __post_init__(self):
        if self.cond not in OUTCOME_CLASSES:
            raise ValueError(f"unknown outcome class {self.cond!r}")


@dataclass(frozen=True)
class SideContractChoice:
    route: RegisterViaContract | None = None
    pledge: PledgeAll | None = None

    @property
    def engaged(self) -> bool:
        return self.route is not None or self.pledge is not None

    def label(self) -> str:
        parts = []
        if self.route:
            parts.append(f"route->{self.route.to}")
        if self.pledge:
            parts.append(f"pledge[{self.pledge.cond}]->{self.pledge.to or 'burn'}")
        return "+".join(parts) or "none"


NO_SIDE_CONTRACT = SideContractChoice()


@dataclass(frozen=True)
class Strategy:
    stage0: SideContractChoice = NO_SIDE_CONTRACT
    send_to: int | None = None  # stage 1: give copies of all own shares to this player
    stage2: Stage2 = Stage2.DEFAULT

    def label(self) -> str:
        send = f"send->{self.send_to}" if self.send_to else "keep"
        return f"{self.stage0.label()}|{send}|{self.stage2.value}"

    def to_json(self) -> dict:
        s0 = self.stage0
        return {
            "route_to": s0.route.to if s0.route else None,
            "pledge": None if s0.pledge is None else {"cond": s0.pledge.cond, "to": s0.pledge.to},
            "send_to": self.send_to,
            "stage2": self.stage2.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Strategy":
        route = RegisterViaContract(obj["route_to"]) if obj.get("route_to") else None
        p = obj.get("pledge")
        pledge = PledgeAll(p["cond"], p.get("to")) if p else None
        return cls(SideContractChoice(route, pledge), obj.get("send_to"), Stage2(obj.get("stage2", "default")))


DEFAULT_STRATEGY = Strategy()


def default_strategy(N: int) -> tuple[Strategy, ...]:
    return (DEFAULT_STRATEGY,) * N


# -- illicit-profit models ------------------------------------------------------------

@dataclass(frozen=True)
class ZContext:
    N: int
    P: int
    SEC: bool
    ROB: bool
    INF: bool
    stealers: tuple[int, ...]
    withholders: tuple[int, ...]


def split_evenly(total: int, ids: Sequence[int], N: int) -> tuple[int, ...]:
    """Split ``total`` coins over ``ids``; the remainder goes to the lowest ids."""
    z = [0] * N
    ids = sorted(ids)
    if not ids or total <= 0:
        return tuple(z)
    base, rem = divmod(total, len(ids))
    for k, i in enumerate(ids):
        z[i - 1] = base + (1 if k < rem else 0)
    return tuple(z)


@dataclass(frozen=True)
class ZeroZ:
    name: str = "ZeroZ"

    def __call__(self, ctx: ZContext) -> tuple[int, ...]:
        return (0,) * ctx.N


@dataclass(frozen=True)
class StealSplit:
    """P-1 coins among stealers once secrecy broke and the secret got out."""

    name: str = "StealSplit"

    def __call__(self, ctx: ZContext) -> tuple[int, ...]:
        if not ctx.SEC and (ctx.ROB or ctx.INF):
            return split_evenly(ctx.P - 1, ctx.stealers, ctx.N)
        return (0,) * ctx.N


@dataclass(frozen=True)
class FallbackSplit:
    """P-1 coins among withholders whenever the reveal fails."""

    name: str = "FallbackSplit"

    def __call__(self, ctx: ZContext) -> tuple[int, ...]:
        if not ctx.ROB:
            return split_evenly(ctx.P - 1, ctx.withholders, ctx.N)
        return (0,) * ctx.N


Z_MODELS = {m.name: m for m in (ZeroZ(), StealSplit(), FallbackSplit())}


# -- outcomes -----------------------------------------------------------------------

@dataclass(frozen=True)
class Outcome:
    INF: bool
    SEC: bool
    ROB: bool
    informant: int | None
    phase: str
    holders: tuple[int, ...]
    stealers: tuple[int, ...]
    withholders: tuple[int, ...]
    engaged: tuple[bool, ...]
    z: tuple[int, ...]
    y: tuple[int, ...]
    w: tuple[int, ...]
    u: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(a + b + c for a, b, c in zip(self.z, self.y, self.w)))

    @property
    def outcome_class(self) -> str:
        return outcome_class(self.INF, self.SEC, self.ROB)

    def to_json(self) -> dict:
        return {
            "INF": self.INF, "SEC": self.SEC, "ROB": self.ROB, "informant": self.informant,
            "phase": self.phase, "holders": list(self.holders),
            "z": list(self.z), "y": list(self.y), "w": list(self.w), "u": list(self.u),
        }


def outcome_class(inf: bool, sec: bool, rob: bool) -> str:
    if inf:
        return INF
    if rob:
        return SEC_ROB if sec else THEFT
    return FAIL


# bound codes returned by check_bounds
ILLICIT_PROFIT = "illicit-profit-range"
NO_PROFIT_WHEN_SAFE = "illicit-profit-when-secure-and-robust"
PLEDGE_BUDGET = "side-payment-budget"
PLEDGE_NET = "side-payment-net"
PLEDGE_CONSENT = "side-payment-consent"
DEPOSIT_RANGE = "deposit-range"
INFORM_PAYOUT = "inform-payout"
FAILURE_CONFISCATION = "failure-confiscation"
REFUND_FLOOR = "refund-floor"
PAYOFF_RANGE = "payoff-range"
PREDICATES = "predicate-logic"


def check_bounds(outcome: Outcome, endowments: Endowments) -> list[str]:
    """Names of every payoff bound the outcome breaks, in a fixed order."""
    a, e = endowments.a, endowments.e
    n, P, ell = endowments.n, endowments.P, endowments.ell
    z, y, w, u = outcome.z, outcome.y, outcome.w, outcome.u
    N = endowments.N
    bad = []
    if outcome.INF and (outcome.SEC or outcome.ROB):
        bad.append(PREDICATES)
    if any(v < 0 for v in z) or sum(z) >= P:
        bad.append(ILLICIT_PROFIT)
    if outcome.SEC and outcome.ROB and any(z):
        bad.append(NO_PROFIT_WHEN_SAFE)
    if any(y[i] < -e[i] for i in range(N)):
        bad.append(PLEDGE_BUDGET)
    if sum(y) > 0:
        bad.append(PLEDGE_NET)
    if any(y[i] < 0 for i in range(N) if not outcome.engaged[i]):
        bad.append(PLEDGE_CONSENT)
    if any(v < 0 for v in w) or sum(w) > n:
        bad.append(DEPOSIT_RANGE)
    if outcome.INF:
        f = outcome.informant
        if f is None or w[f - 1] != ell or any(w[i] for i in range(N) if i != f - 1):
            bad.append(INFORM_PAYOUT)
    if not outcome.INF and not outcome.ROB and any(w):
        bad.append(FAILURE_CONFISCATION)
    if outcome.ROB and any(w[i] < a[i] for i in range(N) if not outcome.engaged[i]):
        bad.append(REFUND_FLOOR)
    if any(u[i] < -e[i] for i in range(N)) or sum(u) > n + P - 1:
        bad.append(PAYOFF_RANGE)
    return bad
