"""Exhaustive coalition-deviation search over a finite strategy space.

A deviation by coalition C (everyone else at the default) is harmless when
some member is not strictly better off, or when some member can unilaterally
re-deviate to a strictly better payoff. A deviation passing neither test is a
counterexample. Re-deviations keep the re-deviator's side contracts binding
by default (``redeviation="committed"``); ``"full"`` lets them drop those too.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from ..groupcrypto import GroupParams
from .model import (
    DEFAULT_STRATEGY, NO_SIDE_CONTRACT, OUTCOME_CLASSES, Endowments, InvalidStrategy, Outcome,
    PledgeAll, RegisterViaContract, SearchBudgetExceeded, SideContractChoice, Stage2, Strategy,
    Z_MODELS, decentralization_check, default_strategy,
)
from .play import GameInstance

MAX_PLAYERS = 4
DEFAULT_BUDGET = 5_000_000

FAMILY_NOTE = (
    "Certified over a finite family, not all bounded side payments: side contracts are "
    "'register via forwarder to j' and 'pledge all external coins to j or burn them, "
    "conditioned on one outcome class'; stage 1 sends all own shares to at most one player; "
    "illicit profit follows the listed z models."
)

# deviation buckets
NEGATIVE = "negative_payoff"
SECRECY_KEPT = "secrecy_kept"
INFORMED = "informed"
UNINFORMED_BREACH = "secrecy_broken_uninformed"
BUCKETS = (NEGATIVE, SECRECY_KEPT, INFORMED, UNINFORMED_BREACH)


@dataclass(frozen=True)
class SpaceToggles:
    routes: bool = True
    pledges: bool = True
    sends: bool = True
    actions: tuple[Stage2, ...] = tuple(Stage2)


def strategy_space(endowments: Endowments, toggles: SpaceToggles = SpaceToggles()) -> tuple[tuple[Strategy, ...], ...]:
    """Per-player strategy lists; each list starts with the default strategy."""
    N = endowments.N
    space = []
    for i in range(1, N + 1):
        others = [j for j in range(1, N + 1) if j != i]
        routes = [None] + ([RegisterViaContract(j) for j in others] if toggles.routes else [])
        pledges = [None]
        if toggles.pledges and endowments.e[i - 1] > 0:
            pledges += [PledgeAll(c, to) for c in OUTCOME_CLASSES for to in [None, *others]]
        sends = [None] + (others if toggles.sends else [])
        actions = [Stage2.DEFAULT] + [a for a in toggles.actions if a is not Stage2.DEFAULT]
        mine = [
            Strategy(SideContractChoice(r, p) if (r or p) else NO_SIDE_CONTRACT, s, act)
            for r in routes for p in pledges for s in sends for act in actions
        ]
        assert mine[0] == DEFAULT_STRATEGY
        space.append(tuple(mine))
    return tuple(space)


def coalitions(N: int, include_grand: bool = True) -> list[tuple[int, ...]]:
    top = N if include_grand else N - 1
    return [c for k in range(1, top + 1) for c in itertools.combinations(range(1, N + 1), k)]


def search_size(space, coals: Iterable[tuple[int, ...]]) -> int:
    return sum(math.prod(len(space[i - 1]) for i in c) for c in coals)


@dataclass(frozen=True)
class Deviation:
    coalition: tuple[int, ...]
    profile: tuple[Strategy, ...]
    outcome: Outcome


def iter_deviations(game: GameInstance, space, z_model, coals, illegal: Counter) -> Iterator[Deviation]:
    base = list(default_strategy(game.N))
    for c in coals:
        for combo in itertools.product(*(space[i - 1] for i in c)):
            profile = base.copy()
            for i, s in zip(c, combo):
                profile[i - 1] = s
            profile = tuple(profile)
            try:
                out = game.play(profile, z_model)
            except InvalidStrategy:
                illegal[c] += 1
                continue
            yield Deviation(c, profile, out)


class Redeviator:
    """Finds a strictly profitable unilateral re-deviation by a coalition member."""

    def __init__(self, game: GameInstance, space, mode: str):
        if mode not in ("committed", "full"):
            raise ValueError(f"unknown re-deviation mode {mode!r}")
        self.game = game
        self.mode = mode
        self.by_stage0 = []
        for mine in space:
            groups: dict = {}
            for s in mine:
                groups.setdefault(s.stage0, []).append(s)
            self.by_stage0.append(groups)
        self.space = space

    def options(self, j: int, current: Strategy) -> Sequence[Strategy]:
        if self.mode == "full":
            return self.space[j - 1]
        return self.by_stage0[j - 1][current.stage0]

    def payoff(self, profile: Sequence[Strategy], j: int, s: Strategy, z_model) -> int:
        alt = list(profile)
        alt[j - 1] = s
        return self.game.play(alt, z_model, lenient=True).u[j - 1]

    def find(self, dev: Deviation, z_model) -> tuple[int, Strategy, int] | None:
        for j in dev.coalition:
            now = dev.outcome.u[j - 1]
            for s in self.options(j, dev.profile[j - 1]):
                if s == dev.profile[j - 1]:
                    continue
                gain = self.payoff(dev.profile, j, s, z_model)
                if gain > now:
                    return j, s, gain
        return None


def bucket_of(out: Outcome) -> str:
    if any(v < 0 for v in out.u):
        return NEGATIVE
    if out.SEC:
        return SECRECY_KEPT
    if out.INF:
        return INFORMED
    return UNINFORMED_BREACH


@dataclass
class Counterexample:
    z_model: str
    coalition: tuple[int, ...]
    strategies: dict[int, str]
    u: tuple[int, ...]
    u_default: tuple[int, ...]
    outcome: str

    def to_json(self) -> dict:
        return {
            "z_model": self.z_model,
            "coalition": list(self.coalition),
            "strategies": {str(k): v for k, v in self.strategies.items()},
            "u": list(self.u),
            "u_default": list(self.u_default),
            "outcome": self.outcome,
        }


@dataclass
class CertReport:
    instance: dict
    z_models: list[str]
    redeviation: str
    checked: dict[str, int]
    resolution: dict[str, int]
    counterexamples: list[Counterexample]
    wallclock: float
    family: str = FAMILY_NOTE

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    @property
    def families(self) -> dict[str, int]:
        """Deviation counts per proof family (non-negative payoffs only)."""
        c = self.checked
        return {
            SECRECY_KEPT: c[SECRECY_KEPT],
            INFORMED: c[INFORMED],
            "secrecy_broken": c[INFORMED] + c[UNINFORMED_BREACH],
        }

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "family": self.family,
            "z_models": self.z_models,
            "redeviation": self.redeviation,
            "checked": dict(self.checked),
            "families": self.families,
            "resolution": dict(self.resolution),
            "counterexamples": [c.to_json() for c in self.counterexamples],
            "wallclock": round(self.wallclock, 3),
        }


def _resolve_models(z_models) -> list:
    if z_models is None:
        return list(Z_MODELS.values())
    return [Z_MODELS[m] if isinstance(m, str) else m for m in z_models]


def cpne_certify(endowments: Endowments, space=None, z_models=None, *, redeviation: str = "committed",
                 include_grand: bool = True, budget: int = DEFAULT_BUDGET,
                 params: GroupParams | None = None, dkg_seed=0,
                 max_counterexamples: int = 50) -> CertReport:
    """Check every coalition deviation from the default against the two escape conditions."""
    started = time.perf_counter()
    if endowments.N > MAX_PLAYERS:
        raise SearchBudgetExceeded(f"{endowments.N} players; exhaustive search supports at most {MAX_PLAYERS}")
    space = strategy_space(endowments) if space is None else space
    models = _resolve_models(z_models)
    coals = coalitions(endowments.N, include_grand)
    size = search_size(space, coals) * len(models)
    if size > budget:
        raise SearchBudgetExceeded(f"{size} profile evaluations exceed the budget of {budget}")

    game = GameInstance(endowments, params, dkg_seed)
    redev = Redeviator(game, space, redeviation)
    checked: Counter = Counter({b: 0 for b in BUCKETS})
    resolution: Counter = Counter(not_better_off=0, self_enforcement_fails=0, counterexample=0)
    illegal: Counter = Counter()
    found: list[Counterexample] = []
    for model in models:
        u_star = game.play(default_strategy(endowments.N), model).u
        for dev in iter_deviations(game, space, model, coals, illegal):
            checked["total"] += 1
            checked[bucket_of(dev.outcome)] += 1
            u = dev.outcome.u
            if any(u[j - 1] <= u_star[j - 1] for j in dev.coalition):
                resolution["not_better_off"] += 1
                continue
            if redev.find(dev, model) is not None:
                resolution["self_enforcement_fails"] += 1
                continue
            resolution["counterexample"] += 1
            if len(found) < max_counterexamples:
                found.append(Counterexample(
                    model.name, dev.coalition,
                    {j: dev.profile[j - 1].label() for j in dev.coalition},
                    u, u_star, dev.outcome.outcome_class))
    checked["illegal_skipped"] = sum(illegal.values())
    instance = endowments.to_json() | {
        "N": endowments.N,
        "decentralized": decentralization_check(endowments),
        "profiles_per_player": [len(s) for s in space],
        "chain_runs": game.chain_runs,
    }
    return CertReport(instance, [m.name for m in models], redeviation, dict(checked), dict(resolution),
                      found, time.perf_counter() - started)


# -- proof-family checks ------------------------------------------------------------

@dataclass
class LemmaCheck:
    name: str
    instances: int = 0
    failures: list[str] = field(default_factory=list)
    cases: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, msg: str):
        if len(self.failures) < 20:
            self.failures.append(msg)
        else:
            self.cases["unlisted_failures"] = self.cases.get("unlisted_failures", 0) + 1

    def to_json(self) -> dict:
        return {"name": self.name, "instances": self.instances, "passed": self.passed,
                "cases": dict(self.cases), "failures": list(self.failures)}


def lemma_scenarios(endowments: Endowments | None = None, z_models=None, space=None, *,
                    params: GroupParams | None = None, dkg_seed=0) -> list[LemmaCheck]:
    """Re-check each step of the equilibrium argument on every enumerated deviation.

    Meant for endowments meeting the decentralization bound; on others the
    informed and secrecy-broken checks are expected to report failures.
    """
    endowments = endowments or Endowments.of((1, 1, 1))
    space = strategy_space(endowments) if space is None else space
    models = _resolve_models(z_models)
    game = GameInstance(endowments, params, dkg_seed)
    redev = Redeviator(game, space, "committed")
    a, e = endowments.a, endowments.e
    n, t, P, ell = endowments.n, endowments.t, endowments.P, endowments.ell

    negative = LemmaCheck("negative-payoffs-are-members")
    kept = LemmaCheck("secrecy-kept")
    informed = LemmaCheck("informed")
    broken = LemmaCheck("secrecy-broken", cases={"informed": 0, "cheap_informer": 0,
                                                 "rich_informer_robust": 0, "rich_informer_failed": 0})
    checks = [negative, kept, informed, broken]
    illegal: Counter = Counter()

    for model in models:
        star = default_strategy(endowments.N)
        u_star = game.play(star, model).u
        for dev in iter_deviations(game, space, model, coalitions(endowments.N), illegal):
            out, C, u = dev.outcome, dev.coalition, dev.outcome.u
            tag = f"{model.name} C={C} " + " ".join(dev.profile[j - 1].label() for j in C)
            not_better = [j for j in C if u[j - 1] <= u_star[j - 1]]
            if any(v < 0 for v in u):
                negative.instances += 1
                if any(u[j] < 0 for j in range(endowments.N) if j + 1 not in C):
                    negative.fail(f"{tag}: non-member with negative payoff {u}")
                continue
            Q = [j for j in range(1, endowments.N + 1) if u[j - 1] <= u_star[j - 1]]
            tickets_Q = sum(a[j - 1] for j in Q)
            if out.SEC:
                kept.instances += 1
                if not not_better:
                    kept.fail(f"{tag}: every member better off, u={u}")
                if not out.ROB and tickets_Q < t + 1:
                    kept.fail(f"{tag}: not-better-off players hold {tickets_Q} < t+1 shares")
                continue
            broken.instances += 1
            if out.INF:
                informed.instances += 1
                broken.cases["informed"] += 1
                f = out.informant
                if not not_better:
                    informed.fail(f"{tag}: every member better off, u={u}")
                    broken.fail(f"{tag}: informed deviation with every member better off")
                if f in Q:
                    informed.fail(f"{tag}: informant {f} not better off")
                if tickets_Q < n - t:
                    informed.fail(f"{tag}: not-better-off players hold {tickets_Q} < n-t shares")
                continue
            f = min(out.holders)
            if f not in C:
                broken.fail(f"{tag}: lowest holder {f} is outside the coalition")
            if u[f - 1] <= a[f - 1] + P:
                broken.cases["cheap_informer"] += 1
                inform_now = Strategy(dev.profile[f - 1].stage0, dev.profile[f - 1].send_to, Stage2.INFORM)
                gain = redev.payoff(dev.profile, f, inform_now, model)
                if gain < ell - e[f - 1] or gain <= u[f - 1]:
                    broken.fail(f"{tag}: informing pays {gain}, floor {ell - e[f - 1]}, current {u[f - 1]}")
            elif out.ROB:
                broken.cases["rich_informer_robust"] += 1
                losers = [j for j in range(1, endowments.N + 1) if u[j - 1] < a[j - 1]]
                if not losers:
                    broken.fail(f"{tag}: no player below their deposit")
                    continue
                j = losers[0]
                back = redev.payoff(dev.profile, j, DEFAULT_STRATEGY, model)
                if j not in C or back < a[j - 1]:
                    broken.fail(f"{tag}: player {j} returning to default gets {back} < {a[j - 1]}")
            else:
                broken.cases["rich_informer_failed"] += 1
                broken.fail(f"{tag}: rich uninformed holder with failed reveal and all payoffs >= 0")
            if not not_better and redev.find(dev, model) is None:
                broken.fail(f"{tag}: self-enforcing with every member better off, u={u}")
    return checks
