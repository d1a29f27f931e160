"""Joint-Feldman key generation among share slots, with injectable deviations.

Every slot deals a random degree-t polynomial, sends sub-share f_i(j) to slot
j and publishes Feldman commitments. Receivers check each sub-share and
complain (accuser, accused) on failure. The aggregated secret is the sum of
the dealt constants; no transcript ever stores it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .groupcrypto import (
    FeldmanCommitment, GroupParams, Share, feldman_commit, poly_eval, reconstruct,
    share_public_key, verify_share,
)


class Timeout(Exception):
    """Too few slots took part to reconstruct."""


@dataclass(frozen=True)
class CorruptSubShare:
    to: int


@dataclass(frozen=True)
class WithholdSubShare:
    to: int


@dataclass(frozen=True)
class CorruptCommitment:
    pass


Deviation = CorruptSubShare | WithholdSubShare | CorruptCommitment


@dataclass(frozen=True)
class DkgConfig:
    n: int
    t: int
    params: GroupParams
    misbehavior: tuple[tuple[int, Deviation], ...] = ()

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need at least 3 share slots")
        if not 0 < self.t < self.n:
            raise ValueError(f"need 0 < t < n, got t={self.t}, n={self.n}")
        if self.n >= self.params.q:
            raise ValueError("group order too small for this many slots")


@dataclass(frozen=True)
class DkgTranscript:
    n: int
    t: int
    params: GroupParams
    commitments: tuple[FeldmanCommitment, ...]  # per dealer, slot order
    X: int
    final_shares: tuple[Share, ...]  # per slot, slot order
    complaints: tuple[tuple[int, int], ...]  # (accuser, accused)

    @property
    def aggregate(self) -> FeldmanCommitment:
        p = self.params.p
        coeffs = [1] * (self.t + 1)
        for com in self.commitments:
            for k, a_k in enumerate(com.coeff_commits):
                coeffs[k] = coeffs[k] * a_k % p
        return FeldmanCommitment(tuple(coeffs))

    def share_public_keys(self) -> dict[int, int]:
        agg = self.aggregate
        return {j: share_public_key(j, agg, self.params) for j in range(1, self.n + 1)}

    def fragment(self, slot: int) -> dict:
        """What slot ``slot`` submits to the escrow: its dealing commitment and complaints."""
        return {
            "slot": slot,
            "commitment": list(self.commitments[slot - 1].coeff_commits),
            "complaints": sorted(b for a, b in self.complaints if a == slot),
        }

    def to_json(self) -> dict:
        return {
            "params": {"p": self.params.p, "q": self.params.q, "g": self.params.g},
            "n": self.n,
            "t": self.t,
            "commitments": [list(c.coeff_commits) for c in self.commitments],
            "X": self.X,
            "shares": [[s.index, s.value] for s in self.final_shares],
            "complaints": [list(c) for c in self.complaints],
        }


def dkg_commit_run(cfg: DkgConfig, rng_seed=None) -> DkgTranscript:
    params, n, t, q = cfg.params, cfg.n, cfg.t, cfg.params.q
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    deviations: dict[int, list] = {}
    for slot, dev in cfg.misbehavior:
        if not 1 <= slot <= n:
            raise ValueError(f"misbehaving slot {slot} out of range")
        deviations.setdefault(slot, []).append(dev)

    commitments = []
    # inbox[j][i] = sub-share dealt by i to j, absent if withheld
    inbox: dict[int, dict[int, int]] = {j: {} for j in range(1, n + 1)}
    for i in range(1, n + 1):
        poly = [rng.randrange(q) for _ in range(t + 1)]
        com = feldman_commit(poly, params)
        devs = deviations.get(i, [])
        if any(isinstance(d, CorruptCommitment) for d in devs):
            bumped = com.coeff_commits[-1] * params.g % params.p
            com = FeldmanCommitment(com.coeff_commits[:-1] + (bumped,))
        commitments.append(com)
        for j in range(1, n + 1):
            if any(isinstance(d, WithholdSubShare) and d.to == j for d in devs):
                continue
            value = poly_eval(poly, j, q)
            if any(isinstance(d, CorruptSubShare) and d.to == j for d in devs):
                value = (value + 1) % q
            inbox[j][i] = value

    complaints = []
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            if i == j:
                continue
            value = inbox[j].get(i)
            if value is None or not verify_share(Share(j, value), commitments[i - 1], params):
                complaints.append((j, i))

    X = 1
    for com in commitments:
        X = X * com.public_key % params.p
    final = tuple(Share(j, sum(inbox[j].values()) % q) for j in range(1, n + 1))
    return DkgTranscript(n, t, params, tuple(commitments), X, final, tuple(complaints))


def dkg_reveal_run(transcript: DkgTranscript, participating: Iterable[int], t: int | None = None) -> int:
    """Pool the final shares of ``participating`` slots and recover the key."""
    t = transcript.t if t is None else t
    if transcript.complaints:
        raise ValueError("cannot reveal after a failed commit run")
    slots = sorted(set(participating))
    if len(slots) < t + 1:
        raise Timeout(f"{len(slots)} slots participated, {t + 1} needed")
    return reconstruct([transcript.final_shares[j - 1] for j in slots], t, transcript.params)


def shares_for(transcript: DkgTranscript, slots: Sequence[int]) -> list[Share]:
    return [transcript.final_shares[j - 1] for j in sorted(slots)]
