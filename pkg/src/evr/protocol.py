"""Drives full escrow runs on a fresh chain.

Account id layout used throughout:

    0            the application (calls comTrigger)
    1..N         player EOAs, funded with their deposits
    100+i        player i's fresh payout EOA, funded with one inform deposit
    10000        the escrow contract
    10000+i      player i's deposit forwarder, when registering via a side contract
"""

from __future__ import annotations

from dataclasses import replace
from functools import lru_cache
from typing import Mapping, Sequence

from .chain import Chain, CallContext, Contract, ContractError, Transaction
from .dkg import DkgConfig, DkgTranscript, Deviation, dkg_commit_run
from .escrow import EscrowConfig, EscrowContract, check_phase_history
from .groupcrypto import GroupParams, Share, hash_commit, reconstruct

APP = 0
PAYOUT_BASE = 100
ESCROW = 10_000


def payout_account(player: int) -> int:
    return PAYOUT_BASE + player


def forwarder_account(player: int) -> int:
    return ESCROW + player


class DepositForwarder(Contract):
    """Registers on the owner's behalf and passes every coin it receives to ``beneficiary``."""

    def __init__(self, owner: int, beneficiary: int, escrow: int = ESCROW):
        self.owner = owner
        self.beneficiary = beneficiary
        self.escrow = escrow

    def snapshot(self):
        return None

    def restore(self, snap):
        pass

    def fn_register(self, ctx: CallContext, count: int):
        if ctx.sender != self.owner:
            raise ContractError("only the owner registers")
        ctx.call(self.escrow, "register", (count,), value=ctx.value)

    def fn_relay(self, ctx: CallContext, function: str, args):
        if ctx.sender != self.owner:
            raise ContractError("only the owner relays")
        return ctx.call(self.escrow, function, tuple(args))

    def on_payment(self, ctx: CallContext, amount: int):
        if ctx.sender == self.escrow:
            ctx.pay(self.beneficiary, amount)


@lru_cache(maxsize=64)
def cached_transcript(n: int, t: int, params: GroupParams, seed, misbehavior=()) -> DkgTranscript:
    return dkg_commit_run(DkgConfig(n, t, params, tuple(misbehavior)), seed)


class EscrowRun:
    """One escrow instance on its own chain, with per-player bookkeeping."""

    def __init__(self, deposits: Sequence[int], params: GroupParams, *, config: EscrowConfig | None = None,
                 routes: Mapping[int, int] | None = None, dkg_seed=0,
                 misbehavior: Sequence[tuple[int, Deviation]] = (), **overrides):
        if config is None:
            config = EscrowConfig(app=APP, params=params, **overrides)
        elif overrides:
            config = replace(config, **overrides)
        self.config = config
        self.params = params
        self.deposits = tuple(deposits)
        self.N = len(self.deposits)
        self.routes = dict(routes or {})
        self.dkg_seed = dkg_seed
        self.misbehavior = tuple(misbehavior)
        self.chain = Chain()
        self.chain.add_eoa(APP, 0)
        for i, a in enumerate(self.deposits, start=1):
            self.chain.add_eoa(i, a)
        for i in range(1, self.N + 1):
            self.chain.add_eoa(payout_account(i), config.inform_deposit)
        self.escrow: EscrowContract = self.chain.deploy(ESCROW, EscrowContract(config))
        for i, to in sorted(self.routes.items()):
            self.chain.deploy(forwarder_account(i), DepositForwarder(i, to))
        self.genesis_supply = self.chain.total_supply()
        self.transcript: DkgTranscript | None = None

    # -- ownership -----------------------------------------------------------------

    def slots_of(self, player: int) -> list[int]:
        regs = self.escrow.accounts
        return [k + 1 for k, acc in enumerate(regs) if self._registrant(acc) == player]

    def _registrant(self, acc: int) -> int:
        return acc - ESCROW if acc > ESCROW else acc

    def holdings(self, player: int, extra: Sequence[int] = ()) -> list[Share]:
        slots = set(self.slots_of(player)) | set(extra)
        return [self.transcript.final_shares[j - 1] for j in sorted(slots)]

    # -- phases ---------------------------------------------------------------------

    def register_all(self, at: int = 0):
        txs = []
        for i, a in enumerate(self.deposits, start=1):
            if a == 0:
                continue
            if i in self.routes:
                txs.append(Transaction(i, forwarder_account(i), "register", (a,), a, at))
            else:
                txs.append(Transaction(i, ESCROW, "register", (a,), a, at))
        return self.chain.submit(txs)

    def trigger(self, cnd, at: int = 1):
        return self.chain.submit([Transaction(APP, ESCROW, "comTrigger", (cnd,), 0, at)])

    def commit(self, at: int = 2, skip_slots: Sequence[int] = ()):
        p = self.escrow.params
        self.transcript = cached_transcript(p.n, p.t, self.params, self.dkg_seed, self.misbehavior)
        txs = []
        for slot in range(1, p.n + 1):
            if slot in skip_slots:
                continue
            frag = self.transcript.fragment(slot)
            acc = self.escrow.accounts[slot - 1]
            if acc > ESCROW:
                txs.append(Transaction(acc - ESCROW, acc, "relay", ("interactCommit", (frag,)), 0, at))
            else:
                txs.append(Transaction(acc, ESCROW, "interactCommit", (frag,), 0, at))
        out = self.chain.submit(txs)
        self.chain.advance_to(max(self.chain.clock, self.escrow.commit_start + self.config.t_com))
        return out

    def secret_from(self, shares: Sequence[Share]) -> int:
        return reconstruct(shares, self.escrow.params.t, self.params)

    def inform(self, informants: Mapping[int, int], at: int):
        """Two-phase informing by each ``player -> x`` entry, all committed at ``at``."""
        commits, reveals = [], []
        for player, x in sorted(informants.items()):
            acc = payout_account(player)
            digest = hash_commit(x, acc, self.params)
            commits.append(Transaction(acc, ESCROW, "informCommit", (digest,), self.config.inform_deposit, at))
            reveals.append(Transaction(acc, ESCROW, "informReveal", (x, acc), 0, at + self.config.inform_delay))
        return self.chain.submit(commits) + self.chain.submit(reveals)

    def reveal(self, player: int, x: int, at: int, proof=None):
        args = (x,) if proof is None else (x, proof)
        return self.chain.submit([Transaction(player, ESCROW, "reveal", args, 0, at)])

    # -- audit ------------------------------------------------------------------------

    def wealth(self) -> list[int]:
        """Per-player coins held on chain across the player's EOAs, net of the payout float."""
        out = []
        for i in range(1, self.N + 1):
            out.append(self.chain.balance(i) + self.chain.balance(payout_account(i))
                       - self.config.inform_deposit)
        return out

    def violations(self) -> list[str]:
        bad = [f"phase: {v}" for v in check_phase_history(self.escrow.history, self.escrow.k)]
        if self.chain.total_supply() != self.genesis_supply:
            bad.append(f"conservation: {self.chain.total_supply()} != {self.genesis_supply}")
        p = self.escrow.params
        if p is not None and (p.t != 2 * p.n // 3 or p.P != p.n - p.t or p.ell != p.n):
            bad.append(f"parameter law: {p}")
        for i in self.routes:
            if self.chain.balance(forwarder_account(i)):
                bad.append(f"forwarder {i} holds coins")
        return bad

    def summary(self) -> dict:
        r = self.escrow.read()
        return {
            "phase": r["phase"],
            "verCom": r["verCom"],
            "verRev": r["verRev"],
            "x": r["x"],
            "sigmas": r["sigmas"],
            "payouts": [list(p) for p in self.escrow.payouts],
        }
