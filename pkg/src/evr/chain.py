"""Idealized smart-contract platform: accounts, an append-only log and a clock.

Transactions issued at the same time are processed in ascending issuer id.
Contract calls run synchronously; a call that raises ``ContractError`` is
rolled back but stays in the log, so the log is an exact replay record.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

MAX_CALL_DEPTH = 8


class ChainError(Exception):
    pass


class UnknownAccount(ChainError):
    pass


class NonEOAIssuer(ChainError):
    pass


class InsufficientBalance(ChainError):
    pass


class CallDepthExceeded(ChainError):
    pass


class ContractError(Exception):
    """A contract function refused to run; the transaction becomes a no-op."""

    @property
    def code(self) -> str:
        return type(self).__name__


class AccountKind(str, Enum):
    EOA = "EOA"
    CONTRACT = "Contract"


@dataclass
class Account:
    id: int
    balance: int
    kind: AccountKind
    contract: Any = None


@dataclass(frozen=True)
class Transaction:
    issuer: int
    target: int
    function: str
    args: tuple = ()
    attached: int = 0
    issue_time: int = 0


@dataclass(frozen=True)
class LogEntry:
    seq: int
    time: int
    tx: Transaction
    ok: bool
    effect: str


@dataclass(frozen=True)
class ChainState:
    """Immutable snapshot of a chain: balances, log and clock."""

    balances: tuple[tuple[int, int], ...]
    kinds: tuple[tuple[int, str], ...]
    log: tuple[LogEntry, ...]
    clock: int

    def balance(self, acc: int) -> int:
        return dict(self.balances)[acc]


# -- verifiable conditions ---------------------------------------------------------

@dataclass(frozen=True)
class TimeAtLeast:
    seconds: int


@dataclass(frozen=True)
class TxPresent:
    """Matches a successfully processed transaction; ``None`` fields match anything."""

    target: int | None = None
    function: str | None = None
    issuer: int | None = None

    def matches(self, entry: LogEntry) -> bool:
        tx = entry.tx
        return (entry.ok
                and (self.target is None or tx.target == self.target)
                and (self.function is None or tx.function == self.function)
                and (self.issuer is None or tx.issuer == self.issuer))


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


Condition = TimeAtLeast | TxPresent | And | Or


def mature_time(cnd: Condition, state) -> int | None:
    """Earliest clock value at which ``cnd`` held, or None if it does not hold yet.

    ``state`` is anything with ``clock`` and ``log`` (a Chain or a ChainState).
    """
    if isinstance(cnd, TimeAtLeast):
        return cnd.seconds if state.clock >= cnd.seconds else None
    if isinstance(cnd, TxPresent):
        for entry in state.log:
            if cnd.matches(entry):
                return entry.time
        return None
    if isinstance(cnd, (And, Or)):
        times = [mature_time(c, state) for c in cnd.parts]
        if isinstance(cnd, And):
            return None if any(t is None for t in times) else max(times, default=0)
        known = [t for t in times if t is not None]
        return min(known) if known else None
    raise TypeError(f"not a condition: {cnd!r}")


def matured(cnd: Condition, state) -> bool:
    return mature_time(cnd, state) is not None


def condition_to_json(cnd: Condition) -> dict:
    if isinstance(cnd, TimeAtLeast):
        return {"TimeAtLeast": cnd.seconds}
    if isinstance(cnd, TxPresent):
        return {"TxPresent": {"target": cnd.target, "function": cnd.function, "issuer": cnd.issuer}}
    key = type(cnd).__name__
    return {key: [condition_to_json(c) for c in cnd.parts]}


def condition_from_json(obj) -> Condition:
    if isinstance(obj, (int, float)):
        return TimeAtLeast(int(obj))
    if not isinstance(obj, Mapping) or len(obj) != 1:
        raise ValueError(f"bad condition {obj!r}")
    (kind, body), = obj.items()
    if kind == "TimeAtLeast":
        return TimeAtLeast(int(body))
    if kind == "TxPresent":
        return TxPresent(**dict(body or {}))
    if kind in ("And", "Or"):
        parts = tuple(condition_from_json(b) for b in body)
        return And(parts) if kind == "And" else Or(parts)
    raise ValueError(f"unknown condition kind {kind!r}")


# -- contracts ---------------------------------------------------------------------

class Contract:
    """Base class for contract logic.

    Subclasses implement ``fn_<name>(ctx, *args)`` methods. State must live in
    instance attributes so the default snapshot/restore can roll it back.
    """

    def handle(self, ctx: "CallContext", function: str, args: Sequence):
        method = getattr(self, f"fn_{function}", None)
        if method is None:
            raise UnknownFunction(function)
        return method(ctx, *args)

    def on_time(self, ctx: "CallContext"):
        return None

    def on_payment(self, ctx: "CallContext", amount: int):
        return None

    def snapshot(self):
        return copy.deepcopy(self.__dict__)

    def restore(self, snap):
        self.__dict__.clear()
        self.__dict__.update(snap)


class UnknownFunction(ContractError):
    pass


class CallContext:
    def __init__(self, chain: "Chain", self_id: int, sender: int | None, value: int,
                 depth: int, issuer: int | None):
        self.chain = chain
        self.self_id = self_id
        self.sender = sender
        self.value = value
        self.depth = depth
        self.issuer = issuer

    @property
    def now(self) -> int:
        return self.chain.clock

    def balance(self) -> int:
        return self.chain.balance(self.self_id)

    def matured(self, cnd: Condition) -> bool:
        return matured(cnd, self.chain)

    def mature_time(self, cnd: Condition) -> int | None:
        return mature_time(cnd, self.chain)

    def pay(self, to: int, amount: int):
        self.chain._transfer(self.self_id, to, amount)
        target = self.chain._account(to)
        if target.kind is AccountKind.CONTRACT and amount:
            self.chain._enter(self.depth + 1)
            target.contract.on_payment(
                CallContext(self.chain, to, self.self_id, amount, self.depth + 1, self.issuer), amount)

    def call(self, target: int, function: str, args: Sequence = (), value: int = 0):
        return self.chain._invoke(self.self_id, target, function, tuple(args), value,
                                  self.depth + 1, self.issuer)


# -- the chain -----------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, bytes):
        return v.hex()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (TimeAtLeast, TxPresent, And, Or)):
        return condition_to_json(v)
    if hasattr(v, "to_json"):
        return v.to_json()
    if hasattr(v, "__dataclass_fields__"):
        return {k: _jsonable(getattr(v, k)) for k in v.__dataclass_fields__}
    if isinstance(v, Enum):
        return v.value
    return v


class Chain:
    def __init__(self, genesis: Mapping[int, int] | None = None, max_depth: int = MAX_CALL_DEPTH):
        self.accounts: dict[int, Account] = {}
        self.log: list[LogEntry] = []
        self.trace: list[dict] = []
        self.clock = 0
        self.max_depth = max_depth
        for acc, bal in (genesis or {}).items():
            self.add_eoa(acc, bal)

    # setup
    def add_eoa(self, acc: int, balance: int = 0):
        if acc in self.accounts:
            raise ValueError(f"account {acc} exists")
        if balance < 0:
            raise ValueError("balances are non-negative")
        self.accounts[acc] = Account(acc, balance, AccountKind.EOA)

    def deploy(self, acc: int, contract: Contract):
        if acc in self.accounts:
            raise ValueError(f"account {acc} exists")
        self.accounts[acc] = Account(acc, 0, AccountKind.CONTRACT, contract)
        return contract

    # reads
    def _account(self, acc: int) -> Account:
        try:
            return self.accounts[acc]
        except KeyError:
            raise UnknownAccount(acc) from None

    def balance(self, acc: int) -> int:
        return self._account(acc).balance

    def contract(self, acc: int):
        return self._account(acc).contract

    def total_supply(self) -> int:
        return sum(a.balance for a in self.accounts.values())

    def balances(self) -> dict[int, int]:
        return {k: self.accounts[k].balance for k in sorted(self.accounts)}

    def state(self) -> ChainState:
        ids = sorted(self.accounts)
        return ChainState(
            balances=tuple((i, self.accounts[i].balance) for i in ids),
            kinds=tuple((i, self.accounts[i].kind.value) for i in ids),
            log=tuple(self.log),
            clock=self.clock,
        )

    # time
    def advance_time(self, dt: int):
        if dt < 0:
            raise ValueError("time only moves forward")
        self.advance_to(self.clock + dt)

    def advance_to(self, t: int):
        if t < self.clock:
            raise ValueError(f"cannot move clock back from {self.clock} to {t}")
        if t == self.clock:
            return
        self.clock = t
        for acc in sorted(self.accounts):
            account = self.accounts[acc]
            if account.kind is AccountKind.CONTRACT:
                ctx = CallContext(self, acc, None, 0, 0, None)
                effect = account.contract.on_time(ctx)
                if effect:
                    self._record(None, acc, "@tick", (), effect)

    # writes
    def submit(self, txs: Iterable[Transaction]) -> list[LogEntry]:
        txs = list(txs)
        for tx in txs:
            issuer = self._account(tx.issuer)
            if issuer.kind is not AccountKind.EOA:
                raise NonEOAIssuer(tx.issuer)
            self._account(tx.target)
            if tx.issue_time < self.clock:
                raise ValueError(f"transaction issued at {tx.issue_time}, clock is {self.clock}")
        out = []
        for tx in sorted(txs, key=lambda tx: (tx.issue_time, tx.issuer)):
            self.advance_to(tx.issue_time)
            out.append(self._process(tx))
        return out

    def _process(self, tx: Transaction) -> LogEntry:
        snap = self._snapshot()
        try:
            result = self._invoke(tx.issuer, tx.target, tx.function, tuple(tx.args),
                                  tx.attached, 0, tx.issuer)
            ok, effect = True, "ok" if result is None else str(result)
        except InsufficientBalance:
            self._restore(snap)
            ok, effect = False, "InsufficientBalance"
        except (ContractError, CallDepthExceeded) as exc:
            self._restore(snap)
            ok, effect = False, type(exc).__name__
        entry = LogEntry(len(self.log), self.clock, tx, ok, effect)
        self.log.append(entry)
        self._record(tx.issuer, tx.target, tx.function, tx.args, effect)
        return entry

    def _record(self, issuer, target, function, args, effect):
        self.trace.append({
            "seq": len(self.trace),
            "time": self.clock,
            "issuer": issuer,
            "target": target,
            "function": function,
            "args": _jsonable(args),
            "effect": effect,
            "balances_after": {str(k): v for k, v in self.balances().items()},
        })

    def _enter(self, depth: int):
        if depth > self.max_depth:
            raise CallDepthExceeded(depth)

    def _invoke(self, sender, target, function, args, value, depth, issuer):
        self._enter(depth)
        account = self._account(target)
        if value:
            self._transfer(sender, target, value)
        if account.kind is AccountKind.EOA:
            if function != "transfer":
                raise UnknownFunction(function)
            return None
        ctx = CallContext(self, target, sender, value, depth, issuer)
        return account.contract.handle(ctx, function, args)

    def _transfer(self, src: int, dst: int, amount: int):
        if amount < 0:
            raise ValueError("negative transfer")
        a, b = self._account(src), self._account(dst)
        if a.balance < amount:
            raise InsufficientBalance(f"{src} holds {a.balance}, needs {amount}")
        a.balance -= amount
        b.balance += amount

    def _snapshot(self):
        return ({k: a.balance for k, a in self.accounts.items()},
                {k: a.contract.snapshot() for k, a in self.accounts.items()
                 if a.kind is AccountKind.CONTRACT})

    def _restore(self, snap):
        balances, contracts = snap
        for k, bal in balances.items():
            self.accounts[k].balance = bal
        for k, s in contracts.items():
            self.accounts[k].contract.restore(s)

    def trace_lines(self) -> list[str]:
        return [json.dumps(rec, separators=(",", ":")) for rec in self.trace]


def total_supply(state: ChainState | Chain) -> int:
    if isinstance(state, Chain):
        return state.total_supply()
    return sum(b for _, b in state.balances)
