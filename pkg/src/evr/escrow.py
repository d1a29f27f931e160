"""The randomness escrow as a contract on :mod:`evr.chain`.

Phases: registration -> commit -> pending(i) -> reveal(i) -> ... -> final,
with abort reachable from commit, pending and reveal. Time-driven moves
(commit deadline, condition maturity, reveal timeout) are applied both from
the chain's clock hook and at the start of every call, so a timeout is seen
no later than the next interaction.

Single-shot mode publishes a scalar ``x`` checked as ``g^x == X``. Multi-shot
mode (``rounds=k``) publishes per-round VRF outputs checked against the same
key, now read as ``PK``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .chain import CallContext, Condition, Contract, ContractError
from .groupcrypto import DleqProof, GroupParams, hash_commit, ver, vrf_verify

REGISTRATION, COMMIT, PENDING, REVEAL, FINAL, ABORT = (
    "registration", "commit", "pending", "reveal", "final", "abort")


class WrongPhase(ContractError):
    pass


class WrongDeposit(ContractError):
    pass


class NotApplication(ContractError):
    pass


class TooFewPlayers(ContractError):
    pass


class NotSlotOwner(ContractError):
    pass


class MissingDeposit(ContractError):
    pass


class AlreadyPending(ContractError):
    pass


class NoPendingInform(ContractError):
    pass


class TooEarly(ContractError):
    pass


class DigestMismatch(ContractError):
    pass


class CndMatured(ContractError):
    pass


class BadSecret(ContractError):
    pass


class TooLate(ContractError):
    pass


class AtomicInformDisabled(ContractError):
    pass


@dataclass(frozen=True)
class Phase:
    name: str
    round: int = 0

    def __str__(self):
        return f"{self.name}({self.round})" if self.name in (PENDING, REVEAL) else self.name


@dataclass(frozen=True)
class EscrowConfig:
    app: int
    params: GroupParams
    t_com: int = 10
    t_rev: int = 10
    inform_delay: int = 30
    inform_deposit: int = 1
    # a committed inform that is not revealed within inform_delay + inform_window can be replaced
    inform_window: int = 30
    atomic_inform: bool = False
    rounds: int | None = None  # None: single-shot
    messages: tuple[bytes, ...] | None = None

    @property
    def multishot(self) -> bool:
        return self.rounds is not None

    def message(self, i: int) -> bytes:
        if self.messages is not None:
            return self.messages[i - 1]
        return round_message(i)


def round_message(i: int) -> bytes:
    return i.to_bytes(8, "big")


@dataclass(frozen=True)
class EscrowParams:
    n: int
    t: int
    P: int
    ell: int
    cnd: tuple  # one condition per round

    @classmethod
    def for_n(cls, n: int, cnd: Sequence[Condition]) -> "EscrowParams":
        t = 2 * n // 3
        return cls(n=n, t=t, P=n - t, ell=n, cnd=tuple(cnd))


@dataclass(frozen=True)
class PendingInform:
    digest: bytes
    depositor: int
    commit_time: int
    round: int


def allowed_transition(a: Phase, b: Phase, k: int) -> bool:
    if a.name == REGISTRATION:
        return b == Phase(COMMIT)
    if a.name == COMMIT:
        return b in (Phase(PENDING, 1), Phase(ABORT))
    if a.name == PENDING:
        return b in (Phase(REVEAL, a.round), Phase(ABORT))
    if a.name == REVEAL:
        nxt = Phase(PENDING, a.round + 1) if a.round < k else Phase(FINAL)
        return b in (nxt, Phase(ABORT))
    return False


def check_phase_history(history: Sequence[Phase], k: int = 1) -> list[str]:
    bad = []
    if history and history[0] != Phase(REGISTRATION):
        bad.append(f"starts in {history[0]}")
    for a, b in zip(history, history[1:]):
        if not allowed_transition(a, b, k):
            bad.append(f"{a} -> {b}")
    return bad


class EscrowContract(Contract):
    def __init__(self, config: EscrowConfig):
        self.config = config
        self.phase = Phase(REGISTRATION)
        self.history: list[Phase] = [self.phase]
        self.accounts: list[int] = []
        self.params: EscrowParams | None = None
        self.commit_start: int | None = None
        self.local_state: dict[int, dict] = {}
        self.X: int | None = None
        self.x: int | None = None
        self.revealed: list[tuple[int, int, DleqProof]] = []
        self.ver_com: bool | None = None
        self.ver_rev: list[bool | None] = [None] * (config.rounds or 1)
        self.pending_inform: PendingInform | None = None
        self.window_start: int | None = None
        self.last_round_done: int = 0
        self.abort_reason: str | None = None
        self.informant: int | None = None
        self.payouts: list[tuple[str, int, int]] = []

    # -- helpers ------------------------------------------------------------------

    _LISTS = ("history", "accounts", "revealed", "ver_rev", "payouts")

    def snapshot(self):
        snap = dict(self.__dict__)
        for name in self._LISTS:
            snap[name] = list(snap[name])
        snap["local_state"] = dict(self.local_state)
        return snap

    def restore(self, snap):
        self.__dict__.clear()
        self.__dict__.update(snap)
        for name in self._LISTS:
            self.__dict__[name] = list(snap[name])
        self.local_state = dict(snap["local_state"])

    @property
    def n(self) -> int:
        return len(self.accounts)

    @property
    def k(self) -> int:
        return self.config.rounds or 1

    def _goto(self, phase: Phase):
        self.phase = phase
        self.history.append(phase)

    def _abort(self, reason: str):
        self.abort_reason = reason
        self._goto(Phase(ABORT))

    def _pay(self, ctx: CallContext, to: int, amount: int, kind: str):
        if amount:
            ctx.pay(to, amount)
            self.payouts.append((kind, to, amount))

    def _verify(self, rnd: int, value: int, proof) -> bool:
        params = self.config.params
        if self.config.multishot:
            if proof is None:
                return False
            if not isinstance(proof, DleqProof):
                proof = DleqProof(*proof)
            return vrf_verify(self.X, self.config.message(rnd), value, proof, params)
        return 0 <= value < params.q and ver(value, self.X, params)

    def _cnd(self, rnd: int) -> Condition:
        return self.params.cnd[rnd - 1]

    # -- time-driven transitions ----------------------------------------------------

    def on_time(self, ctx: CallContext):
        before = self.phase
        self._sync(ctx)
        if self.phase != before:
            return f"{before} -> {self.phase}"
        return None

    def _sync(self, ctx: CallContext):
        while True:
            phase = self.phase
            if phase.name == COMMIT and ctx.now - self.commit_start >= self.config.t_com:
                self._close_commit(ctx)
            elif phase.name == PENDING:
                mt = ctx.mature_time(self._cnd(phase.round))
                if mt is None:
                    return
                self.window_start = max(mt, self.last_round_done)
                self._goto(Phase(REVEAL, phase.round))
            elif phase.name == REVEAL and ctx.now - self.window_start >= self.config.t_rev:
                self.ver_rev[phase.round - 1] = False
                self._abort("reveal-timeout")
            else:
                return

    def _close_commit(self, ctx: CallContext):
        misbehaving = self._misbehaving_slots()
        self.ver_com = not misbehaving
        if self.ver_com:
            p = self.config.params.p
            X = 1
            for slot in range(1, self.n + 1):
                X = X * self.local_state[slot]["commitment"][0] % p
            self.X = X
            self._goto(Phase(PENDING, 1))
            return
        for slot in range(1, self.n + 1):
            if slot not in misbehaving:
                self._pay(ctx, self.accounts[slot - 1], 1, "commit-refund")
        self._abort("commit-failed")

    def _misbehaving_slots(self) -> set[int]:
        params, t = self.config.params, self.params.t
        bad = set()
        for slot in range(1, self.n + 1):
            frag = self.local_state.get(slot)
            if frag is None:
                bad.add(slot)
                continue
            com = frag["commitment"]
            if len(com) != t + 1 or not all(params.is_element(a) for a in com):
                bad.add(slot)
            for accused in frag["complaints"]:
                bad.add(accused)
        return bad

    # -- contract functions ----------------------------------------------------------

    def handle(self, ctx, function, args):
        self._sync(ctx)
        return super().handle(ctx, function, args)

    def fn_register(self, ctx: CallContext, count: int | None = None):
        if self.phase.name != REGISTRATION:
            raise WrongPhase(str(self.phase))
        want = 1 if count is None else count
        if want < 1 or ctx.value != want:
            raise WrongDeposit(f"attached {ctx.value} for {want} registration(s)")
        self.accounts.extend([ctx.sender] * want)

    def fn_comTrigger(self, ctx: CallContext, cnd):
        if ctx.sender != self.config.app:
            raise NotApplication(ctx.sender)
        if self.phase.name != REGISTRATION:
            raise WrongPhase(str(self.phase))
        if self.n < 3:
            raise TooFewPlayers(self.n)
        cnds = tuple(cnd) if self.config.multishot else (cnd,)
        if len(cnds) != self.k:
            raise ContractError(f"expected {self.k} conditions, got {len(cnds)}")
        self.params = EscrowParams.for_n(self.n, cnds)
        self.commit_start = ctx.now
        self._goto(Phase(COMMIT))

    def fn_interactCommit(self, ctx: CallContext, fragment: dict):
        if self.phase.name != COMMIT:
            raise WrongPhase(str(self.phase))
        slot = fragment["slot"]
        if not 1 <= slot <= self.n or self.accounts[slot - 1] != ctx.sender:
            raise NotSlotOwner(f"{ctx.sender} does not own slot {slot}")
        self.local_state[slot] = {
            "commitment": list(fragment["commitment"]),
            "complaints": list(fragment.get("complaints", ())),
        }

    def fn_informCommit(self, ctx: CallContext, digest: bytes):
        if self.phase.name != PENDING:
            raise WrongPhase(str(self.phase))
        if ctx.value != self.config.inform_deposit:
            raise MissingDeposit(f"attached {ctx.value}, deposit is {self.config.inform_deposit}")
        cur = self.pending_inform
        if cur is not None:
            stale_at = cur.commit_time + self.config.inform_delay + self.config.inform_window
            if ctx.now < stale_at:
                raise AlreadyPending(f"inform from {cur.depositor} pending")
        self.pending_inform = PendingInform(bytes(digest), ctx.sender, ctx.now, self.phase.round)

    def fn_informReveal(self, ctx: CallContext, value: int, acc: int, proof=None):
        if self.phase.name == REVEAL and self.pending_inform is not None:
            raise CndMatured(str(self.phase))
        if self.phase.name != PENDING:
            raise WrongPhase(str(self.phase))
        cur = self.pending_inform
        if cur is None:
            raise NoPendingInform()
        if ctx.now < cur.commit_time + self.config.inform_delay:
            raise TooEarly(f"reveal allowed from {cur.commit_time + self.config.inform_delay}")
        if hash_commit(value, acc, self.config.params) != cur.digest:
            raise DigestMismatch()
        rnd = self.phase.round
        self.pending_inform = None
        if not self._verify(rnd, value, proof):
            return "InformRejected"
        if self.config.multishot:
            self.revealed.append((rnd, value, proof if isinstance(proof, DleqProof) else DleqProof(*proof)))
        else:
            self.x = value
        self.ver_rev[rnd - 1] = True
        self.informant = acc
        self._pay(ctx, acc, self.params.ell, "inform")
        self._pay(ctx, cur.depositor, self.config.inform_deposit, "inform-deposit")
        self._abort("informed")
        return "Informed"

    def fn_inform(self, ctx: CallContext, x_inform: int, acc: int):
        """One-shot informing exactly as in the original pseudocode (front-runnable)."""
        if not self.config.atomic_inform:
            raise AtomicInformDisabled()
        if self.phase.name != PENDING:
            raise WrongPhase(str(self.phase))
        rnd = self.phase.round
        ok = self._verify(rnd, x_inform, None)
        self.ver_rev[rnd - 1] = ok
        if ok:
            self.x = x_inform
            self.informant = acc
            self._pay(ctx, acc, self.params.ell, "inform")
            self._abort("informed")
            return "Informed"
        return "InformRejected"

    def fn_reveal(self, ctx: CallContext, value: int, proof=None):
        if self.phase.name != REVEAL:
            if self.phase.name == ABORT and self.abort_reason == "reveal-timeout":
                raise TooLate()
            raise WrongPhase(str(self.phase))
        rnd = self.phase.round
        if not self._verify(rnd, value, proof):
            raise BadSecret()
        self.ver_rev[rnd - 1] = True
        if self.config.multishot:
            self.revealed.append((rnd, value, proof if isinstance(proof, DleqProof) else DleqProof(*proof)))
        else:
            self.x = value
        if rnd < self.k:
            self.last_round_done = ctx.now
            self._goto(Phase(PENDING, rnd + 1))
            self._sync(ctx)
            return None
        for acc in self.accounts:
            self._pay(ctx, acc, 1, "refund")
        self._goto(Phase(FINAL))
        return None

    def fn_read(self, ctx: CallContext):
        return None

    # -- reads -------------------------------------------------------------------------

    def read(self) -> dict:
        p = self.params
        return {
            "phase": str(self.phase),
            "verCom": self.ver_com,
            "verRev": list(self.ver_rev),
            "X": self.X,
            "x": self.x,
            "sigmas": [(r, s) for r, s, _ in self.revealed],
            "n": self.n,
            "t": p.t if p else None,
            "P": p.P if p else None,
            "ell": p.ell if p else None,
            "abort_reason": self.abort_reason,
        }
