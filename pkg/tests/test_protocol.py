from evr.chain import TimeAtLeast, Transaction
from evr.escrow import FINAL, Phase
from evr.protocol import ESCROW, EscrowRun, forwarder_account, payout_account
from oracles import expected_deposit_payoffs, interpolate_constant

CND = TimeAtLeast(100)


def secret(run):
    t = run.escrow.params.t
    return interpolate_constant([(s.index, s.value) for s in run.transcript.final_shares[: t + 1]], run.params.q)


def test_forwarder_redirects_refunds(tiny):
    a = (2, 1, 1)
    run = EscrowRun(a, tiny, routes={1: 3})
    run.register_all()
    assert run.escrow.accounts == [forwarder_account(1)] * 2 + [2, 3]
    assert run.slots_of(1) == [1, 2]
    run.trigger(CND)
    run.commit()
    run.reveal(2, secret(run), 101)
    assert run.escrow.phase == Phase(FINAL)
    assert run.wealth() == expected_deposit_payoffs(a, {1: 3}, True, None, 4) == [0, 1, 3]
    assert run.chain.balance(forwarder_account(1)) == 0
    assert run.violations() == []


def test_forwarder_only_serves_owner(tiny):
    run = EscrowRun((1, 1, 1), tiny, routes={1: 2})
    (entry,) = run.chain.submit([Transaction(2, forwarder_account(1), "register", (1,), 1, 0)])
    assert entry.effect == "ContractError" and run.chain.balance(2) == 1


def test_commit_is_relayed_through_forwarder(tiny):
    run = EscrowRun((1, 1, 1), tiny, routes={2: 1})
    run.register_all()
    run.trigger(CND)
    entries = run.commit()
    assert [e.effect for e in entries] == ["ok"] * 3
    assert run.escrow.ver_com is True


def test_informing_ignores_routes(tiny):
    a = (1, 1, 1)
    run = EscrowRun(a, tiny, routes={1: 2})
    run.register_all()
    run.trigger(CND)
    run.commit()
    run.inform({1: secret(run)}, at=20)
    assert run.wealth() == expected_deposit_payoffs(a, {1: 2}, False, 1, 3) == [3, 0, 0]
    assert run.chain.balance(payout_account(1)) == 4
    assert run.chain.balance(ESCROW) == 0


def test_summary_shape(tiny):
    run = EscrowRun((1, 1, 1), tiny)
    run.register_all()
    run.trigger(CND)
    run.commit()
    s = run.summary()
    assert set(s) == {"phase", "verCom", "verRev", "x", "sigmas", "payouts"}
    assert s["phase"] == "pending(1)" and s["payouts"] == []
