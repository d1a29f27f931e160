"""k-round randomness from one shared key.

Round i publishes sigma_i = H1(m_i)^x, assembled from threshold partial
evaluations of the DKG shares and carrying a proof against the public key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .chain import Condition, TimeAtLeast, condition_to_json, matured
from .dkg import Timeout
from .escrow import round_message
from .groupcrypto import (
    DleqProof, GroupParams, Share, combine_partials, partial_eval, threshold_prove, vrf_output,
    vrf_verify,
)


class NotMatured(Exception):
    """The round's condition has not matured yet."""


class OutOfOrder(Exception):
    """A round was requested before its predecessor completed."""


@dataclass(frozen=True)
class RoundSchedule:
    k: int
    cnds: tuple[Condition, ...]
    messages: tuple[bytes, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one round")
        if len(self.cnds) != self.k or len(self.messages) != self.k:
            raise ValueError("one condition and one message per round")

    @classmethod
    def evenly_spaced(cls, k: int, first: int = 100, spacing: int = 100,
                      messages: Sequence[bytes] | None = None) -> "RoundSchedule":
        cnds = tuple(TimeAtLeast(first + spacing * r) for r in range(k))
        msgs = tuple(messages) if messages is not None else tuple(round_message(i) for i in range(1, k + 1))
        return cls(k, cnds, msgs)

    def message(self, i: int) -> bytes:
        return self.messages[i - 1]

    def cnd(self, i: int) -> Condition:
        return self.cnds[i - 1]


@dataclass(frozen=True)
class RoundOutput:
    round: int
    sigma: int
    proof: DleqProof
    random_bits: bytes

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "sigma": self.sigma,
            "proof": [self.proof.challenge, self.proof.response],
            "random_bits": self.random_bits.hex(),
        }


def extract_randomness(sigma: int, params: GroupParams) -> bytes:
    """32 bytes derived from the unique round value."""
    return vrf_output(sigma, params)


def produce_round(shares: Sequence[Share], i: int, schedule: RoundSchedule, pk: int, *,
                  t: int, share_pks: Mapping[int, int], params: GroupParams,
                  chain=None, completed: int | None = None) -> RoundOutput:
    """Run the i-th reveal among the holders of ``shares``.

    With ``chain`` given, the round's condition must have matured on it; with
    ``completed`` given, exactly rounds 1..i-1 must be done.
    """
    if not 1 <= i <= schedule.k:
        raise ValueError(f"round {i} outside 1..{schedule.k}")
    if completed is not None and completed != i - 1:
        raise OutOfOrder(f"round {i} requested after {completed} completed rounds")
    if chain is not None and not matured(schedule.cnd(i), chain):
        raise NotMatured(f"round {i}: {condition_to_json(schedule.cnd(i))} not matured")
    if len({s.index for s in shares}) <= t:
        raise Timeout(f"round {i}: {len(shares)} participants, {t + 1} needed")
    m = schedule.message(i)
    partials = [(s.index, *partial_eval(s, m, params)) for s in shares]
    sigma = combine_partials(partials, t, m, share_pks, params)
    proof = threshold_prove(shares, m, pk, sigma, params)
    if not vrf_verify(pk, m, sigma, proof, params):
        raise AssertionError("combined round output failed verification")
    return RoundOutput(i, sigma, proof, extract_randomness(sigma, params))
