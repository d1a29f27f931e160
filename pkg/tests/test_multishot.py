import pytest
from hypothesis import given, settings, strategies as st

from evr.chain import TimeAtLeast, Transaction
from evr.dkg import Timeout
from evr.escrow import ABORT, FINAL, PENDING, Phase, round_message
from evr.groupcrypto import DleqProof, hash_commit, vrf_verify
from evr.multishot import (
    NotMatured, OutOfOrder, RoundOutput, RoundSchedule, extract_randomness, produce_round,
)
from evr.protocol import ESCROW, EscrowRun, payout_account
from oracles import hash_to_group_ref, interpolate_constant

K = 3


def multishot_run(params, deposits=(2, 2, 2), k=K, **kw):
    schedule = RoundSchedule.evenly_spaced(k)
    run = EscrowRun(deposits, params, rounds=k, **kw)
    run.register_all()
    run.trigger(schedule.cnds)
    run.commit()
    return run, schedule


def round_inputs(run):
    tr = run.transcript
    return dict(t=tr.t, share_pks=tr.share_public_keys(), params=run.params)


def key_of(run):
    tr = run.transcript
    return interpolate_constant([(s.index, s.value) for s in tr.final_shares[: tr.t + 1]], run.params.q)


def test_three_rounds_match_oracle_and_finish(tiny):
    run, schedule = multishot_run(tiny)
    x = key_of(run)
    pk = run.escrow.X
    outputs = []
    for i in range(1, K + 1):
        run.chain.advance_to(schedule.cnd(i).seconds)
        out = produce_round(run.transcript.final_shares, i, schedule, pk, chain=run.chain,
                            completed=i - 1, **round_inputs(run))
        assert out.sigma == pow(hash_to_group_ref(round_message(i), tiny.p, tiny.q), x, tiny.p)
        assert vrf_verify(pk, schedule.message(i), out.sigma, out.proof, tiny)
        run.reveal(1, out.sigma, run.chain.clock, out.proof)
        outputs.append(out)
    assert run.escrow.phase == Phase(FINAL)
    assert run.escrow.read()["sigmas"] == [(o.round, o.sigma) for o in outputs]
    assert len({o.random_bits for o in outputs}) == K
    assert run.wealth() == [2, 2, 2] and run.violations() == []


def test_round_two_with_t_participants_times_out(tiny):
    run, schedule = multishot_run(tiny)
    pk, inputs = run.escrow.X, round_inputs(run)
    shares = run.transcript.final_shares
    run.chain.advance_to(100)
    first = produce_round(shares, 1, schedule, pk, chain=run.chain, completed=0, **inputs)
    run.reveal(1, first.sigma, 100, first.proof)
    run.chain.advance_to(200)
    with pytest.raises(Timeout):
        produce_round(shares[: inputs["t"]], 2, schedule, pk, chain=run.chain, completed=1, **inputs)
    run.chain.advance_to(300)
    assert run.escrow.phase == Phase(ABORT) and run.escrow.ver_rev == [True, False, None]
    assert run.chain.balance(ESCROW) == 6


def test_rounds_must_be_in_order(tiny):
    run, schedule = multishot_run(tiny)
    run.chain.advance_to(300)
    with pytest.raises(OutOfOrder):
        produce_round(run.transcript.final_shares, 3, schedule, run.escrow.X, completed=1, **round_inputs(run))


def test_round_not_matured(tiny):
    run, schedule = multishot_run(tiny)
    with pytest.raises(NotMatured):
        produce_round(run.transcript.final_shares, 1, schedule, run.escrow.X, chain=run.chain, **round_inputs(run))


def test_escrow_rejects_reveal_before_maturity(tiny):
    run, schedule = multishot_run(tiny)
    out = produce_round(run.transcript.final_shares, 1, schedule, run.escrow.X, **round_inputs(run))
    (entry,) = run.reveal(1, out.sigma, 50, out.proof)
    assert entry.effect == "WrongPhase" and run.escrow.phase == Phase(PENDING, 1)


def test_escrow_rejects_proofless_or_wrong_round(tiny):
    run, schedule = multishot_run(tiny)
    inputs = round_inputs(run)
    second = produce_round(run.transcript.final_shares, 2, schedule, run.escrow.X, **inputs)
    run.chain.advance_to(100)
    (entry,) = run.reveal(1, second.sigma, 100, second.proof)
    assert entry.effect == "BadSecret"
    (entry,) = run.reveal(1, second.sigma, 100)
    assert entry.effect == "BadSecret"


def test_multishot_informing_pays_informant(tiny):
    run, schedule = multishot_run(tiny)
    out = produce_round(run.transcript.final_shares, 1, schedule, run.escrow.X, **round_inputs(run))
    acc = payout_account(2)
    entries = run.chain.submit([Transaction(acc, ESCROW, "informCommit", (hash_commit(out.sigma, acc, tiny),), 1, 20)])
    entries += run.chain.submit([Transaction(acc, ESCROW, "informReveal",
                                             (out.sigma, acc, (out.proof.challenge, out.proof.response)), 0, 50)])
    assert [e.effect for e in entries] == ["ok", "Informed"]
    assert run.wealth() == [0, 6, 0]


def test_schedule_validation():
    with pytest.raises(ValueError):
        RoundSchedule(0, (), ())
    with pytest.raises(ValueError):
        RoundSchedule(2, (TimeAtLeast(1),), (b"a", b"b"))
    sched = RoundSchedule.evenly_spaced(2, first=10, spacing=5, messages=[b"a", b"b"])
    assert sched.cnds == (TimeAtLeast(10), TimeAtLeast(15)) and sched.message(2) == b"b"


def test_extract_randomness(tiny, standard):
    assert extract_randomness(123, tiny) == extract_randomness(123, tiny)
    assert len(extract_randomness(123, tiny)) == 32
    assert extract_randomness(123, tiny) != extract_randomness(124, tiny)
    assert len(extract_randomness(standard.g, standard)) == 32


def test_round_output_json(tiny):
    out = RoundOutput(1, 5, DleqProof(2, 3), b"\x01" * 32)
    assert out.to_json() == {"round": 1, "sigma": 5, "proof": [2, 3], "random_bits": "01" * 32}


@settings(max_examples=25)
@given(st.data())
def test_every_qualifying_subset_gives_same_round_value(tiny, data):
    run, schedule = multishot_run(tiny, deposits=(2, 2, 3))
    inputs = round_inputs(run)
    shares = run.transcript.final_shares
    i = data.draw(st.integers(1, K))
    subset = data.draw(st.lists(st.sampled_from(shares), min_size=inputs["t"] + 1, unique=True))
    out = produce_round(subset, i, schedule, run.escrow.X, **inputs)
    full = produce_round(shares, i, schedule, run.escrow.X, **inputs)
    # proofs use subset-dependent nonces; the value itself is unique
    assert (out.sigma, out.random_bits) == (full.sigma, full.random_bits)
