"""Playing a strategy vector through a real escrow run."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..chain import TimeAtLeast
from ..escrow import ABORT, FINAL, EscrowConfig
from ..groupcrypto import GroupParams, get_profile
from ..protocol import EscrowRun, payout_account
from .model import (
    BoundViolation, Endowments, InvalidStrategy, Outcome, Stage2, Strategy, ZContext, check_bounds, outcome_class,
)

# timeline of a game run (simulated seconds); informing starts once the commit window closes
REGISTER_AT, TRIGGER_AT, COMMIT_AT = 0, 1, 2
MATURE_AT = 100


@dataclass(frozen=True)
class ChainResult:
    phase: str
    INF: bool
    informant: int | None
    ROB: bool
    w: tuple[int, ...]
    violations: tuple[str, ...]
    trace: tuple[str, ...] = ()
    summary: dict | None = None


@dataclass(frozen=True)
class Resolved:
    """Stage-1 share flows: slots known to each player and who can reconstruct."""

    holdings: tuple[frozenset, ...]
    holders: tuple[int, ...]


class GameInstance:
    """One endowment vector with caches shared by every profile played on it."""

    def __init__(self, endowments: Endowments, params: GroupParams | None = None, dkg_seed=0,
                 keep_traces: bool = False, check: bool = True, mature_at: int = MATURE_AT,
                 escrow_overrides: Mapping | None = None):
        self.escrow_overrides = dict(escrow_overrides or {})
        probe = EscrowConfig(app=0, params=params or get_profile("tiny"), **self.escrow_overrides)
        self.inform_at = TRIGGER_AT + probe.t_com + 1
        if self.inform_at + probe.inform_delay >= mature_at:
            raise ValueError(f"condition matures at {mature_at}, before an inform started at "
                             f"{self.inform_at} can be revealed")
        self.mature_at = mature_at
        self.endowments = endowments
        self.params = params or get_profile("tiny")
        self.dkg_seed = dkg_seed
        self.keep_traces = keep_traces
        self.check = check
        self.N = endowments.N
        self.t = endowments.t
        self.a = endowments.a
        self.e = endowments.e
        slots, nxt = [], 1
        for a in self.a:
            slots.append(frozenset(range(nxt, nxt + a)))
            nxt += a
        self.slots = tuple(slots)
        self._stage1: dict[tuple, Resolved] = {}
        self._chain: dict[tuple, ChainResult] = {}
        self.chain_runs = 0
        self.last_chain: ChainResult | None = None

    # -- stage 1 ------------------------------------------------------------------

    def resolve(self, sends: tuple) -> Resolved:
        hit = self._stage1.get(sends)
        if hit is not None:
            return hit
        holdings = [set(s) for s in self.slots]
        for i, to in enumerate(sends, start=1):
            if to is not None:
                holdings[to - 1] |= self.slots[i - 1]
        frozen = tuple(frozenset(h) for h in holdings)
        holders = tuple(i for i, h in enumerate(frozen, start=1) if len(h) >= self.t + 1)
        res = Resolved(frozen, holders)
        self._stage1[sends] = res
        return res

    def validate(self, strategies: Sequence[Strategy]):
        if len(strategies) != self.N:
            raise InvalidStrategyCount(len(strategies), self.N)
        for i, s in enumerate(strategies, start=1):
            for label, j in (("send", s.send_to),
                             ("route", s.stage0.route.to if s.stage0.route else None),
                             ("pledge", s.stage0.pledge.to if s.stage0.pledge else None)):
                if j is not None and (j == i or not 1 <= j <= self.N):
                    raise InvalidStrategy(f"player {i}: {label} target {j}")

    # -- the on-chain part -----------------------------------------------------------

    def chain_result(self, routes: tuple, sends: tuple, informs: tuple, broadcasts: tuple) -> ChainResult:
        key = (routes, sends, informs, broadcasts)
        hit = self._chain.get(key)
        if hit is not None:
            return hit
        res = self._run_chain(routes, self.resolve(sends), informs, broadcasts)
        self._chain[key] = res
        return res

    def _run_chain(self, routes, resolved: Resolved, informs, broadcasts) -> ChainResult:
        self.chain_runs += 1
        route_map = {i: to for i, to in enumerate(routes, start=1) if to is not None}
        run = EscrowRun(self.a, self.params, routes=route_map, dkg_seed=self.dkg_seed,
                        **self.escrow_overrides)
        run.register_all(REGISTER_AT)
        run.trigger(TimeAtLeast(self.mature_at), TRIGGER_AT)
        run.commit(COMMIT_AT)
        shares = run.transcript.final_shares

        def secret(slots):
            return run.secret_from([shares[j - 1] for j in sorted(slots)])

        informants = {i: secret(resolved.holdings[i - 1])
                      for i in range(1, self.N + 1) if informs[i - 1]}
        if informants:
            run.inform(informants, self.inform_at)
        run.chain.advance_to(self.mature_at)
        if run.escrow.phase.name != ABORT:
            known = set()
            publishers = [i for i in range(1, self.N + 1) if broadcasts[i - 1]]
            for i in publishers:
                known |= resolved.holdings[i - 1]
            if len(known) >= self.t + 1:
                run.reveal(publishers[0], secret(known), self.mature_at + 1)
        run.chain.advance_to(self.mature_at + run.config.t_rev + 1)

        esc = run.escrow
        inf = esc.abort_reason == "informed"
        informant = esc.informant - payout_account(0) if inf else None
        return ChainResult(
            phase=str(esc.phase),
            INF=inf,
            informant=informant,
            ROB=esc.phase.name == FINAL,
            w=tuple(run.wealth()),
            violations=tuple(run.violations()),
            trace=tuple(run.chain.trace_lines()) if self.keep_traces else (),
            summary=run.summary() if self.keep_traces else None,
        )

    # -- whole game -------------------------------------------------------------------

    def play(self, strategies: Sequence[Strategy], z_model: Callable[[ZContext], tuple],
             lenient: bool = False) -> Outcome:
        """Play a full strategy vector.

        An inform or steal order from a player who ends stage 1 without t+1
        shares raises InvalidStrategy, or degrades to comply when ``lenient``.
        """
        self.validate(strategies)
        sends = tuple(s.send_to for s in strategies)
        resolved = self.resolve(sends)
        holders = resolved.holders
        informs, broadcasts, stealers, withholders = [], [], [], []
        for i, s in enumerate(strategies, start=1):
            act = s.stage2
            able = i in holders
            if act in (Stage2.INFORM, Stage2.STEAL) and not able:
                if not lenient:
                    raise InvalidStrategy(f"player {i} cannot {act.value} without {self.t + 1} shares")
                act = Stage2.COMPLY
            informs.append(act is Stage2.INFORM or (act is Stage2.DEFAULT and able))
            broadcasts.append(act is not Stage2.WITHHOLD)
            if act is Stage2.STEAL:
                stealers.append(i)
            elif act is Stage2.WITHHOLD:
                withholders.append(i)
        routes = tuple(s.stage0.route.to if s.stage0.route else None for s in strategies)
        cr = self.chain_result(routes, sends, tuple(informs), tuple(broadcasts))
        self.last_chain = cr
        if cr.violations:
            raise BoundViolation(list(cr.violations))

        sec = not holders
        ctx = ZContext(self.N, self.endowments.P, sec, cr.ROB, cr.INF, tuple(stealers), tuple(withholders))
        z = tuple(z_model(ctx))
        cls = outcome_class(cr.INF, sec, cr.ROB)
        y = [0] * self.N
        for i, s in enumerate(strategies, start=1):
            pledge = s.stage0.pledge
            e_i = self.e[i - 1]
            if pledge is not None and e_i and pledge.cond == cls:
                y[i - 1] -= e_i
                if pledge.to is not None:
                    y[pledge.to - 1] += e_i
        out = Outcome(
            INF=cr.INF, SEC=sec, ROB=cr.ROB, informant=cr.informant, phase=cr.phase,
            holders=holders, stealers=tuple(stealers), withholders=tuple(withholders),
            engaged=tuple(s.stage0.engaged for s in strategies),
            z=z, y=tuple(y), w=cr.w,
        )
        if self.check:
            bad = check_bounds(out, self.endowments)
            if bad:
                raise BoundViolation(bad)
        return out


class InvalidStrategyCount(InvalidStrategy):
    def __init__(self, got: int, want: int):
        super().__init__(f"{got} strategies for {want} players")


def play(endowments: Endowments, strategies: Sequence[Strategy], z_model, *,
         lenient: bool = False, **instance_options) -> Outcome:
    """Play one strategy vector on a fresh game instance (see GameInstance for options)."""
    return GameInstance(endowments, **instance_options).play(strategies, z_model, lenient=lenient)
