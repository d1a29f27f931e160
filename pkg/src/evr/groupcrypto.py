"""Prime-order group arithmetic, Shamir/Feldman sharing and a DLEQ-based VRF.

Everything here is a pure function over small immutable values. Integers are
encoded big-endian at a fixed width (the byte length of ``p``) with a two-byte
length prefix, so digests are reproducible bit for bit:

    enc(v) = len(v_bytes).to_bytes(2, "big") || v.to_bytes(width(p), "big")

Account ids are encoded the same way at a fixed width of 8 bytes.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

ACCOUNT_WIDTH = 8


class CryptoError(Exception):
    pass


class InvalidThreshold(CryptoError):
    pass


class NotEnoughShares(CryptoError):
    pass


class DuplicateIndex(CryptoError):
    pass


class InvalidPartial(CryptoError):
    def __init__(self, index: int):
        super().__init__(f"partial evaluation from share {index} failed DLEQ verification")
        self.index = index


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int
    h1_domain_tag: bytes = b"evr/H1"
    name: str = "custom"

    def __post_init__(self):
        if (self.p - 1) % self.q:
            raise ValueError("q must divide p - 1")
        if self.g in (0, 1) or pow(self.g, self.q, self.p) != 1:
            raise ValueError("g must generate the order-q subgroup")
        if not _is_probable_prime(self.q):
            raise ValueError("q must be prime")

    @property
    def width(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def is_element(self, v: int) -> bool:
        return 0 < v < self.p and pow(v, self.q, self.p) == 1

    def elements(self) -> list[int]:
        """All members of the order-q subgroup (tiny groups only)."""
        out, v = [], 1
        for _ in range(self.q):
            out.append(v)
            v = v * self.g % self.p
        return sorted(out)


@dataclass(frozen=True)
class Share:
    index: int
    value: int


@dataclass(frozen=True)
class FeldmanCommitment:
    coeff_commits: tuple[int, ...]

    @property
    def public_key(self) -> int:
        return self.coeff_commits[0]

    @property
    def threshold(self) -> int:
        return len(self.coeff_commits) - 1


@dataclass(frozen=True)
class DleqProof:
    challenge: int
    response: int


def _is_probable_prime(v: int) -> bool:
    if v < 2:
        return False
    for sp in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if v % sp == 0:
            return v == sp
    d, r = v - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        y = pow(a, d, v)
        if y in (1, v - 1):
            continue
        for _ in range(r - 1):
            y = y * y % v
            if y == v - 1:
                break
        else:
            return False
    return True


# RFC 3526 group 14 (2048-bit safe prime); 4 = 2^2 generates the prime-order subgroup.
_MODP_2048 = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)

PROFILES: dict[str, GroupParams] = {
    # exhaustive-oracle sizes
    "micro": GroupParams(p=23, q=11, g=4, name="micro"),
    "tiny": GroupParams(p=607, q=101, g=64, name="tiny"),
    "standard": GroupParams(p=_MODP_2048, q=(_MODP_2048 - 1) // 2, g=4, name="standard"),
}


def get_profile(name: str) -> GroupParams:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown group profile {name!r}; known: {sorted(PROFILES)}") from None


# -- encodings ---------------------------------------------------------------

def enc_int(v: int, width: int) -> bytes:
    return width.to_bytes(2, "big") + v.to_bytes(width, "big")


def sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.digest()


def _hash_to_scalar(params: GroupParams, *ints: int, tag: bytes) -> int:
    w = params.width
    return int.from_bytes(sha256(enc_int(len(tag), 2), tag, *(enc_int(v, w) for v in ints)), "big") % params.q


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


# -- commitments ---------------------------------------------------------------

def ver(x: int, X: int, params: GroupParams) -> bool:
    """The reveal check: ``X == g^x``."""
    return pow(params.g, x % params.q, params.p) == X


def hash_commit(x: int, acc: int, params: GroupParams) -> bytes:
    return sha256(b"evr/inform", enc_int(x, params.width), enc_int(acc, ACCOUNT_WIDTH))


# -- secret sharing ------------------------------------------------------------

def poly_eval(coeffs: Sequence[int], at: int, q: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * at + c) % q
    return acc


def feldman_commit(coeffs: Sequence[int], params: GroupParams) -> FeldmanCommitment:
    return FeldmanCommitment(tuple(pow(params.g, c, params.p) for c in coeffs))


def shamir_share(x: int, t: int, n: int, params: GroupParams, rng_seed=None,
                 coeffs: Sequence[int] | None = None) -> tuple[list[Share], FeldmanCommitment]:
    """Split ``x`` with a random degree-``t`` polynomial; any ``t+1`` shares recover it.

    ``coeffs`` pins the non-constant coefficients (a_1..a_t) for known-answer tests.
    """
    if t <= 0 or t >= n:
        raise InvalidThreshold(f"need 0 < t < n, got t={t}, n={n}")
    if n >= params.q:
        raise InvalidThreshold(f"n={n} must be below the group order {params.q}")
    if coeffs is None:
        rng = _rng(rng_seed)
        coeffs = [rng.randrange(params.q) for _ in range(t)]
    elif len(coeffs) != t:
        raise InvalidThreshold(f"expected {t} coefficients, got {len(coeffs)}")
    poly = [x % params.q, *(c % params.q for c in coeffs)]
    shares = [Share(i, poly_eval(poly, i, params.q)) for i in range(1, n + 1)]
    return shares, feldman_commit(poly, params)


def share_public_key(index: int, com: FeldmanCommitment, params: GroupParams) -> int:
    """``prod_k A_k^(index^k)``, which equals ``g^f(index)`` for an honest dealer."""
    acc, power = 1, 1
    for a_k in com.coeff_commits:
        acc = acc * pow(a_k, power, params.p) % params.p
        power = power * index % params.q
    return acc


def verify_share(share: Share, com: FeldmanCommitment, params: GroupParams) -> bool:
    if not 0 <= share.value < params.q:
        return False
    return pow(params.g, share.value, params.p) == share_public_key(share.index, com, params)


def lagrange_at_zero(indices: Sequence[int], i: int, q: int) -> int:
    num, den = 1, 1
    for j in indices:
        if j != i:
            num = num * j % q
            den = den * (j - i) % q
    return num * pow(den, -1, q) % q


def _check_indices(indices: Sequence[int], t: int):
    if len(set(indices)) != len(indices):
        raise DuplicateIndex(f"duplicate share index in {sorted(indices)}")
    if len(indices) < t + 1:
        raise NotEnoughShares(f"{len(indices)} shares given, {t + 1} required")


def reconstruct(shares: Iterable[Share], t: int, params: GroupParams) -> int:
    shares = list(shares)
    idx = [s.index for s in shares]
    _check_indices(idx, t)
    return sum(s.value * lagrange_at_zero(idx, s.index, params.q) for s in shares) % params.q


# -- VRF -------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def hash_to_group(m: bytes, params: GroupParams) -> int:
    """H1(m): hash into Z_p^* and clear the cofactor, retrying on the identity.

    The discrete log of the result is unknown to everyone, which the VRF
    needs; g^H(m) would let anyone compute H1(m)^x from the public key.
    """
    cofactor = (params.p - 1) // params.q
    n_bytes = params.width + 16
    ctr = 0
    while True:
        digest = b"".join(sha256(params.h1_domain_tag, ctr.to_bytes(4, "big"), blk.to_bytes(2, "big"), m)
                          for blk in range((n_bytes + 31) // 32))
        v = int.from_bytes(digest[:n_bytes], "big") % params.p
        if v:
            h = pow(v, cofactor, params.p)
            if h != 1:
                return h
        ctr += 1


def vrf_keygen(params: GroupParams, rng_seed=None) -> tuple[int, int]:
    sk = 1 + _rng(rng_seed).randrange(params.q - 1)
    return sk, pow(params.g, sk, params.p)


def dleq_challenge(params: GroupParams, h: int, pk: int, sigma: int, a1: int, a2: int) -> int:
    return _hash_to_scalar(params, params.g, h, pk, sigma, a1, a2, tag=b"evr/dleq")


def _nonce(params: GroupParams, sk: int, m: bytes, extra: bytes = b"") -> int:
    w = params.width
    k = int.from_bytes(sha256(b"evr/nonce", enc_int(sk, w), extra, m), "big") % params.q
    return k or 1


def vrf_eval(sk: int, m: bytes, params: GroupParams) -> tuple[int, DleqProof]:
    h = hash_to_group(m, params)
    sigma = pow(h, sk, params.p)
    pk = pow(params.g, sk, params.p)
    k = _nonce(params, sk, m)
    a1, a2 = pow(params.g, k, params.p), pow(h, k, params.p)
    c = dleq_challenge(params, h, pk, sigma, a1, a2)
    return sigma, DleqProof(c, (k - c * sk) % params.q)


def vrf_verify(pk: int, m: bytes, sigma: int, proof: DleqProof, params: GroupParams) -> bool:
    """Chaum-Pedersen check that log_g(pk) == log_H1(m)(sigma)."""
    p, q = params.p, params.q
    if not (params.is_element(pk) and params.is_element(sigma)):
        return False
    if not (0 <= proof.challenge < q and 0 <= proof.response < q):
        return False
    h = hash_to_group(m, params)
    a1 = pow(params.g, proof.response, p) * pow(pk, proof.challenge, p) % p
    a2 = pow(h, proof.response, p) * pow(sigma, proof.challenge, p) % p
    return dleq_challenge(params, h, pk, sigma, a1, a2) == proof.challenge


def vrf_output(sigma: int, params: GroupParams) -> bytes:
    return sha256(b"evr/out", enc_int(sigma, params.width))


# -- threshold evaluation ---------------------------------------------------------

def partial_eval(share: Share, m: bytes, params: GroupParams) -> tuple[int, DleqProof]:
    """A share holder's VRF evaluation, provable against ``g^share``."""
    return vrf_eval(share.value, m, params)


def combine_partials(partials: Sequence[tuple[int, int, DleqProof]], t: int, m: bytes,
                     share_pks: Mapping[int, int], params: GroupParams) -> int:
    """Lagrange-combine verified partials ``(index, sigma_i, proof_i)`` into ``H1(m)^x``."""
    idx = [i for i, _, _ in partials]
    _check_indices(idx, t)
    for i, sigma_i, proof_i in partials:
        pk_i = share_pks.get(i)
        if pk_i is None or not vrf_verify(pk_i, m, sigma_i, proof_i, params):
            raise InvalidPartial(i)
    sigma = 1
    for i, sigma_i, _ in partials:
        sigma = sigma * pow(sigma_i, lagrange_at_zero(idx, i, params.q), params.p) % params.p
    return sigma


def threshold_prove(shares: Sequence[Share], m: bytes, pk: int, sigma: int,
                    params: GroupParams) -> DleqProof:
    """Two-round threshold Chaum-Pedersen proof for a combined ``sigma``.

    Round one: each holder j publishes (g^k_j, H1(m)^k_j). The joint challenge
    is hashed over the Lagrange-combined commitments. Round two: each holder
    answers k_j - c*share_j, and the responses combine with the same weights,
    so no party ever holds the full key.
    """
    p, q = params.p, params.q
    idx = [s.index for s in shares]
    h = hash_to_group(m, params)
    subset = b"".join(i.to_bytes(4, "big") for i in sorted(idx))
    nonces = {s.index: _nonce(params, s.value, m, subset) for s in shares}
    lam = {i: lagrange_at_zero(idx, i, q) for i in idx}
    a1 = a2 = 1
    for i, k in nonces.items():
        a1 = a1 * pow(params.g, k * lam[i] % q, p) % p
        a2 = a2 * pow(h, k * lam[i] % q, p) % p
    c = dleq_challenge(params, h, pk, sigma, a1, a2)
    response = sum(lam[s.index] * (nonces[s.index] - c * s.value) for s in shares) % q
    return DleqProof(c, response)


def qualifying_subsets(indices: Sequence[int], t: int):
    for size in range(t + 1, len(indices) + 1):
        yield from combinations(sorted(indices), size)
