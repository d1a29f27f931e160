import itertools
import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from evr.cli import check_vectors, make_vectors
from evr.groupcrypto import (
    DleqProof, DuplicateIndex, dleq_challenge, InvalidPartial, InvalidThreshold, NotEnoughShares, Share,
    combine_partials, feldman_commit, hash_commit, hash_to_group, partial_eval, poly_eval,
    qualifying_subsets, reconstruct, shamir_share, share_public_key, threshold_prove, ver,
    verify_share, vrf_eval, vrf_keygen, vrf_output, vrf_verify,
)
from oracles import discrete_log, hash_to_group_ref, interpolate_constant, modpow_naive

DATA = Path(__file__).parent / "data"


# -- sharing -------------------------------------------------------------------------

def test_linear_sharing_example(micro):
    shares, com = shamir_share(3, 1, 3, micro, coeffs=[2])
    assert [(s.index, s.value) for s in shares] == [(1, 5), (2, 7), (3, 9)]
    assert com.coeff_commits == (modpow_naive(micro.g, 3, micro.p), modpow_naive(micro.g, 2, micro.p))
    assert com.public_key == pow(micro.g, 3, micro.p)


def test_reconstruct_example(micro):
    assert reconstruct([Share(1, 5), Share(2, 7)], 1, micro) == 3
    assert interpolate_constant([(1, 5), (2, 7)], 11) == 3


def test_full_threshold_needs_every_share(tiny):
    shares, _ = shamir_share(42, 4, 5, tiny, rng_seed=1)
    assert reconstruct(shares, 4, tiny) == 42
    with pytest.raises(NotEnoughShares):
        reconstruct(shares[:4], 4, tiny)


def test_sharing_errors(tiny):
    for t, n in ((0, 3), (3, 3), (4, 3)):
        with pytest.raises(InvalidThreshold):
            shamir_share(1, t, n, tiny)
    with pytest.raises(InvalidThreshold):
        shamir_share(1, 2, 101, tiny)
    with pytest.raises(DuplicateIndex):
        reconstruct([Share(1, 1), Share(1, 1), Share(2, 2)], 2, tiny)


@given(st.integers(0, 100), st.integers(3, 9), st.data())
def test_every_qualifying_subset_reconstructs(tiny, x, n, data):
    t = data.draw(st.integers(1, n - 1))
    shares, com = shamir_share(x, t, n, tiny, rng_seed=data.draw(st.integers(0, 2**32)))
    assert all(verify_share(s, com, tiny) for s in shares)
    subset = data.draw(st.lists(st.sampled_from(shares), min_size=t + 1, unique=True))
    assert reconstruct(subset, t, tiny) == x
    assert interpolate_constant([(s.index, s.value) for s in subset[: t + 1]], tiny.q) == x


def test_shares_match_direct_polynomial_evaluation(tiny):
    coeffs = [17, 5, 99, 64, 3]
    shares, com = shamir_share(coeffs[0], 4, 6, tiny, coeffs=coeffs[1:])
    for s in shares:
        assert s.value == sum(c * s.index ** k for k, c in enumerate(coeffs)) % tiny.q
        assert share_public_key(s.index, com, tiny) == modpow_naive(tiny.g, s.value, tiny.p)


def test_feldman_rejects_every_single_coordinate_perturbation(tiny):
    shares, com = shamir_share(55, 3, 6, tiny, rng_seed=9)
    for s in shares:
        for delta in range(1, tiny.q):
            assert not verify_share(Share(s.index, (s.value + delta) % tiny.q), com, tiny)
        for k in range(len(com.coeff_commits)):
            bumped = list(com.coeff_commits)
            bumped[k] = bumped[k] * tiny.g % tiny.p
            assert not verify_share(s, type(com)(tuple(bumped)), tiny)


def test_perfect_secrecy_at_threshold_exhaustive(micro):
    """Every t shares fit exactly one degree-t polynomial per candidate secret (q=11, n=6, t=4)."""
    q, n, t = micro.q, 6, 4
    polys = list(itertools.product(range(q), repeat=t + 1))
    evals = [tuple(poly_eval(c, i, q) for i in range(n + 1)) for c in polys]
    for subset in itertools.combinations(range(1, n + 1), t):
        seen = {(row[0], *(row[i] for i in subset)) for row in evals}
        # (secret, t share values) determine the polynomial, and every combination occurs
        assert len(seen) == q ** (t + 1) == len(polys)


# -- binding and digests -------------------------------------------------------------

def test_ver_examples(tiny):
    x = 37
    X = pow(tiny.g, x, tiny.p)
    assert ver(x, X, tiny)
    assert not ver((x + 1) % tiny.q, X, tiny)


def test_ver_binding_exhaustive(tiny):
    for X in tiny.elements():
        preimages = [x for x in range(tiny.q) if ver(x, X, tiny)]
        assert preimages == [discrete_log(X, tiny.g, tiny.p, tiny.q)]


def test_hash_commit(tiny):
    d = hash_commit(5, 101, tiny)
    assert len(d) == 32
    assert d == hash_commit(5, 101, tiny)
    assert d != hash_commit(5, 102, tiny)
    assert d != hash_commit(6, 101, tiny)


# -- VRF -------------------------------------------------------------------------------

def test_hash_to_group_lands_in_subgroup(tiny, standard):
    for params in (tiny, standard):
        for m in (b"", b"a", b"round-7"):
            h = hash_to_group(m, params)
            assert params.is_element(h) and h != 1
            assert h == hash_to_group_ref(m, params.p, params.q)



def test_vrf_eval_matches_direct_exponentiation(tiny):
    sk, pk = vrf_keygen(tiny, 3)
    assert 1 <= sk < tiny.q and pk == pow(tiny.g, sk, tiny.p)
    for m in (b"x", b"y", (5).to_bytes(8, "big")):
        sigma, proof = vrf_eval(sk, m, tiny)
        assert sigma == modpow_naive(hash_to_group(m, tiny), sk, tiny.p)
        assert vrf_eval(sk, m, tiny) == (sigma, proof)
        assert vrf_verify(pk, m, sigma, proof, tiny)


def test_vrf_distinct_messages_give_distinct_outputs(standard):
    sk, pk = vrf_keygen(standard, 11)
    s1, _ = vrf_eval(sk, b"m1", standard)
    s2, _ = vrf_eval(sk, b"m2", standard)
    assert s1 != s2


def test_vrf_keygen_seeds_differ(standard):
    assert vrf_keygen(standard, 1)[0] != vrf_keygen(standard, 2)[0]


def test_tampered_sigma_with_reproven_proof_fails_on_standard(standard):
    """The prover's algorithm run on sigma*g yields no accepting proof at full size."""
    sk, pk = vrf_keygen(standard, 5)
    m = b"tamper"
    sigma, proof = vrf_eval(sk, m, standard)
    forged = sigma * standard.g % standard.p
    assert not vrf_verify(pk, m, forged, proof, standard)
    h = hash_to_group(m, standard)
    for k in (7, 2**200 + 3, 12345678901234567890):
        a1, a2 = pow(standard.g, k, standard.p), pow(h, k, standard.p)
        c = dleq_challenge(standard, h, pk, forged, a1, a2)
        attempt = DleqProof(c, (k - c * sk) % standard.q)
        assert not vrf_verify(pk, m, forged, attempt, standard)


def test_vrf_rejects_out_of_range_inputs(tiny):
    sk, pk = vrf_keygen(tiny, 3)
    sigma, proof = vrf_eval(sk, b"m", tiny)
    non_member = next(v for v in range(2, tiny.p) if not tiny.is_element(v))
    assert not vrf_verify(pk, b"m", non_member, proof, tiny)
    assert not vrf_verify(non_member, b"m", sigma, proof, tiny)
    assert not vrf_verify(pk, b"m", sigma, DleqProof(proof.challenge + tiny.q, proof.response), tiny)


def test_tiny_group_soundness_error_is_about_one_over_q(tiny):
    """On q=101 the proof is only 1/q-sound: a wrong sigma has about q accepting (c, s) pairs."""
    sk, pk = vrf_keygen(tiny, 8)
    m = b"soundness"
    sigma, _ = vrf_eval(sk, m, tiny)
    wrong = sigma * tiny.g % tiny.p
    hits = sum(vrf_verify(pk, m, wrong, DleqProof(c, s), tiny)
               for c in range(tiny.q) for s in range(tiny.q))
    # Binomial(q^2, 1/q): mean 101, sd about 10
    assert 50 <= hits <= 160


def test_output_bits_are_balanced(standard):
    """Bit frequency of hashed group elements over 10^4 messages stays within 3 sd of uniform."""
    ones, total = 0, 0
    for i in range(10_000):
        # full exponentiation per message would take minutes; H1 images are group elements too
        sigma = hash_to_group(i.to_bytes(8, "big"), standard)
        out = vrf_output(sigma, standard)
        ones += sum(bin(b).count("1") for b in out)
        total += 8 * len(out)
    sd = (total * 0.25) ** 0.5
    assert abs(ones - total / 2) <= 3 * sd


# -- threshold evaluation --------------------------------------------------------------

def _threshold_setup(params, n=6, t=4, seed=4):
    shares, com = shamir_share(77, t, n, params, rng_seed=seed)
    pks = {s.index: share_public_key(s.index, com, params) for s in shares}
    return shares, com, pks


def test_combine_partials_equals_direct_evaluation(tiny):
    shares, com, pks = _threshold_setup(tiny)
    m = b"beacon"
    expected = pow(hash_to_group(m, tiny), 77, tiny.p)
    for subset in qualifying_subsets([s.index for s in shares], 4):
        chosen = [shares[i - 1] for i in subset]
        partials = [(s.index, *partial_eval(s, m, tiny)) for s in chosen]
        sigma = combine_partials(partials, 4, m, pks, tiny)
        assert sigma == expected == vrf_eval(77, m, tiny)[0]
        proof = threshold_prove(chosen, m, com.public_key, sigma, tiny)
        assert vrf_verify(com.public_key, m, sigma, proof, tiny)


def test_corrupted_partial_is_named(tiny):
    shares, _, pks = _threshold_setup(tiny)
    m = b"beacon"
    partials = [(s.index, *partial_eval(s, m, tiny)) for s in shares[:5]]
    idx, sigma_i, proof_i = partials[2]
    partials[2] = (idx, sigma_i * tiny.g % tiny.p, proof_i)
    with pytest.raises(InvalidPartial) as err:
        combine_partials(partials, 4, m, pks, tiny)
    assert err.value.index == idx
    with pytest.raises(NotEnoughShares):
        combine_partials(partials[:4], 4, m, pks, tiny)


def test_threshold_proof_on_standard_profile(standard):
    shares, com, pks = _threshold_setup(standard, n=4, t=2, seed=1)
    m = b"round"
    partials = [(s.index, *partial_eval(s, m, standard)) for s in shares[1:]]
    sigma = combine_partials(partials, 2, m, pks, standard)
    proof = threshold_prove(shares[1:], m, com.public_key, sigma, standard)
    assert vrf_verify(com.public_key, m, sigma, proof, standard)


# -- known-answer vectors -----------------------------------------------------------------

@pytest.mark.parametrize("profile", ["tiny", "micro"])
def test_known_answer_vectors(profile):
    frozen = json.loads((DATA / f"vectors_{profile}.json").read_text())
    assert make_vectors(profile, 0) == frozen
    assert check_vectors(frozen) == []


def test_feldman_commit_matches_naive_powers(micro):
    com = feldman_commit([3, 2, 10], micro)
    assert com.coeff_commits == tuple(modpow_naive(micro.g, c, micro.p) for c in (3, 2, 10))
