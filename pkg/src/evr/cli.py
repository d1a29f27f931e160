"""Command-line front door: protocol runs, certification, proof checks and test vectors.

Exit codes: 0 success, 1 invariant violation or unexpected search result,
2 configuration error, 3 search budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .chain import TimeAtLeast, Transaction
from .dkg import DkgConfig, Timeout, dkg_commit_run, dkg_reveal_run
from .game import (
    BoundViolation, Endowments, GameInstance, InvalidStrategy, SearchBudgetExceeded, SpaceToggles,
    Stage2, Strategy, Z_MODELS, check_bounds, cpne_certify, decentralization_check, default_strategy,
    lemma_scenarios, strategy_space,
)
from .groupcrypto import (
    PROFILES, DleqProof, Share, enc_int, feldman_commit, get_profile, hash_commit, hash_to_group, lagrange_at_zero,
    reconstruct, shamir_share, verify_share, vrf_eval, vrf_keygen, vrf_output, vrf_verify,
)
from .multishot import RoundSchedule, produce_round
from .protocol import ESCROW, EscrowRun

ESCROW_KEYS = ("t_com", "t_rev", "inform_delay", "inform_deposit", "inform_window", "atomic_inform")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    group_profile: str = "tiny"
    a: tuple[int, ...] = (1, 1, 1)
    e: tuple[int, ...] = (0, 0, 0)
    escrow: dict = field(default_factory=dict)
    mature_at: int = 100
    rounds: int | None = None
    round_spacing: int = 100
    participants: dict[int, list[int]] = field(default_factory=dict)
    strategies: tuple[Strategy, ...] | None = None
    z_model: str = "ZeroZ"
    search: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def endowments(self) -> Endowments:
        return Endowments.of(self.a, self.e)


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def parse_config(raw: Any) -> ScenarioConfig:
    _require(isinstance(raw, dict), "config must be a mapping")
    known = {"name", "group_profile", "endowments", "escrow", "schedule", "strategies", "z_model",
             "search", "seed"}
    extra = set(raw) - known
    _require(not extra, f"unknown config keys: {sorted(extra)}")
    cfg = ScenarioConfig(name=str(raw.get("name", "scenario")))
    cfg.group_profile = raw.get("group_profile", "tiny")
    _require(cfg.group_profile in PROFILES, f"unknown group profile {cfg.group_profile!r}")
    end = raw.get("endowments", {"a": [1, 1, 1]})
    _require(isinstance(end, dict) and isinstance(end.get("a"), list), "endowments.a must be a list")
    cfg.a = tuple(int(v) for v in end["a"])
    cfg.e = tuple(int(v) for v in end.get("e", [0] * len(cfg.a)))
    _require(len(cfg.e) == len(cfg.a), "endowments.a and endowments.e differ in length")
    _require(all(v >= 0 for v in cfg.a + cfg.e), "endowments are non-negative")
    esc = raw.get("escrow") or {}
    _require(isinstance(esc, dict), "escrow must be a mapping")
    bad = set(esc) - set(ESCROW_KEYS) - {"mature_at"}
    _require(not bad, f"unknown escrow keys: {sorted(bad)}")
    cfg.mature_at = int(esc.get("mature_at", 100))
    cfg.escrow = {k: esc[k] for k in ESCROW_KEYS if k in esc}
    sched = raw.get("schedule")
    if sched is not None:
        _require(isinstance(sched, dict) and int(sched.get("rounds", 0)) >= 1, "schedule.rounds must be >= 1")
        cfg.rounds = int(sched["rounds"])
        cfg.round_spacing = int(sched.get("spacing", 100))
        cfg.participants = {int(k): [int(s) for s in v] for k, v in (sched.get("participants") or {}).items()}
    strategies = raw.get("strategies")
    if strategies is not None:
        _require(isinstance(strategies, list) and len(strategies) == len(cfg.a),
                 "strategies must list one entry per player")
        try:
            cfg.strategies = tuple(Strategy.from_json(dict(s or {})) for s in strategies)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad strategy: {exc}") from None
    cfg.z_model = raw.get("z_model", "ZeroZ")
    _require(cfg.z_model in Z_MODELS, f"unknown z_model {cfg.z_model!r}")
    cfg.search = dict(raw.get("search") or {})
    cfg.seed = int(raw.get("seed", 0))
    return cfg


def load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from None
    return parse_config(raw)


def gate(cfg: ScenarioConfig, allow_unsafe: bool):
    n = sum(cfg.a)
    if n < 3:
        raise ConfigError(f"need at least 3 deposits, got {n}")
    if not allow_unsafe and not decentralization_check(cfg.endowments):
        raise ConfigError("endowments break the decentralization bound; pass --allow-unsafe to run anyway")


# -- output helpers ---------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def emit(lines: list[str], out: str | None):
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------------

def cmd_run(cfg: ScenarioConfig, out: str | None) -> int:
    params = get_profile(cfg.group_profile)
    if cfg.rounds is not None:
        lines, ok = _run_multishot(cfg, params)
    else:
        lines, ok = _run_single(cfg, params)
    emit(lines, out)
    if not ok:
        print("InvariantViolation: see the final line of the trace", file=sys.stderr)
        return 1
    return 0


def _run_single(cfg: ScenarioConfig, params):
    try:
        game = GameInstance(cfg.endowments, params, cfg.seed, keep_traces=True, check=False,
                            mature_at=cfg.mature_at, escrow_overrides=cfg.escrow)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    strategies = cfg.strategies or default_strategy(len(cfg.a))
    try:
        outcome = game.play(strategies, Z_MODELS[cfg.z_model])
    except InvalidStrategy as exc:
        raise ConfigError(str(exc)) from None
    except BoundViolation as exc:
        return [_dump({"error": "InvariantViolation", "violations": exc.violations})], False
    chain_res = game.last_chain
    violations = list(chain_res.violations) + check_bounds(outcome, cfg.endowments)
    summary = dict(chain_res.summary)
    summary.update(outcome=outcome.to_json(), violations=violations, scenario=cfg.name)
    return list(chain_res.trace) + [_dump(summary)], not violations


def _run_multishot(cfg: ScenarioConfig, params):
    schedule = RoundSchedule.evenly_spaced(cfg.rounds, cfg.mature_at, cfg.round_spacing)
    try:
        run = EscrowRun(cfg.a, params, dkg_seed=cfg.seed, rounds=cfg.rounds, **cfg.escrow)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    run.register_all(0)
    run.trigger(list(schedule.cnds), 1)
    run.commit(2)
    tr = run.transcript
    pks = tr.share_public_keys()
    t = run.escrow.params.t
    rounds = []
    for i in range(1, cfg.rounds + 1):
        if run.escrow.phase.name != "pending":
            break
        at = max(run.chain.clock, _mature(schedule, i))
        run.chain.advance_to(at)
        slots = cfg.participants.get(i, list(range(1, run.escrow.n + 1)))
        shares = [tr.final_shares[s - 1] for s in slots]
        try:
            res = produce_round(shares, i, schedule, run.escrow.X, t=t, share_pks=pks, params=params,
                                chain=run.chain, completed=len(rounds))
        except Timeout:
            run.chain.advance_to(at + run.config.t_rev)
            break
        run.chain.submit([Transaction(1, ESCROW, "reveal", (res.sigma, res.proof), 0, at + 1)])
        rounds.append(res)
    run.chain.advance_to(run.chain.clock + run.config.t_rev + 1)
    violations = run.violations()
    summary = run.summary()
    summary.update(rounds=[r.to_json() for r in rounds], violations=violations, scenario=cfg.name)
    return run.chain.trace_lines() + [_dump(summary)], not violations


def _mature(schedule: RoundSchedule, i: int) -> int:
    cnd = schedule.cnd(i)
    assert isinstance(cnd, TimeAtLeast)
    return cnd.seconds


def cmd_certify(cfg: ScenarioConfig, out: str | None) -> int:
    search = cfg.search
    toggles = search.get("toggles") or {}
    try:
        space = strategy_space(cfg.endowments, SpaceToggles(
            routes=bool(toggles.get("routes", True)),
            pledges=bool(toggles.get("pledges", True)),
            sends=bool(toggles.get("sends", True)),
            actions=tuple(Stage2(a) for a in toggles.get("actions", [s.value for s in Stage2])),
        ))
        models = search.get("z_models", list(Z_MODELS))
        unknown = [m for m in models if m not in Z_MODELS]
        _require(not unknown, f"unknown z models {unknown}")
        report = cpne_certify(cfg.endowments, space, models,
                              redeviation=search.get("redeviation", "committed"),
                              include_grand=bool(search.get("include_grand", True)),
                              budget=int(search.get("budget", 5_000_000)),
                              params=get_profile(cfg.group_profile), dkg_seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    body = report.to_json()
    body["scenario"] = cfg.name
    if search.get("omit_wallclock"):
        del body["wallclock"]
    emit([json.dumps(body, indent=2, sort_keys=True)], out)
    if search.get("expect_counterexample"):
        return 0 if report.counterexamples else 1
    return 0 if report.ok else 1


def cmd_lemmas(cfg: ScenarioConfig, out: str | None) -> int:
    models = cfg.search.get("z_models", list(Z_MODELS))
    checks = lemma_scenarios(cfg.endowments, models, params=get_profile(cfg.group_profile), dkg_seed=cfg.seed)
    emit([json.dumps([c.to_json() for c in checks], indent=2, sort_keys=True)], out)
    return 0 if all(c.passed for c in checks) else 1


def make_vectors(profile: str, seed: int = 0) -> dict:
    """Known-answer vectors for the group primitives, all derived from ``seed``."""
    params = get_profile(profile)
    rng = random.Random(seed)
    n = 6
    t = 2 * n // 3
    x = rng.randrange(params.q)
    coeffs = [rng.randrange(params.q) for _ in range(t)]
    shares, com = shamir_share(x, t, n, params, coeffs=coeffs)
    sk, pk = vrf_keygen(params, rng.randrange(2**64))
    vrf = []
    for m in (b"", b"round", (1).to_bytes(8, "big")):
        sigma, proof = vrf_eval(sk, m, params)
        vrf.append({"m": m.hex(), "h": hash_to_group(m, params), "sigma": sigma,
                    "challenge": proof.challenge, "response": proof.response,
                    "output": vrf_output(sigma, params).hex()})
    acc = 101
    return {
        "profile": profile,
        "params": {"p": params.p, "q": params.q, "g": params.g},
        "encoding": {"value": x, "width": params.width, "bytes": enc_int(x, params.width).hex()},
        "sharing": {
            "x": x, "t": t, "n": n, "coeffs": [x, *coeffs],
            "shares": [[s.index, s.value] for s in shares],
            "commitments": list(com.coeff_commits),
            "X": com.public_key,
            "lagrange_at_zero": {str(i): lagrange_at_zero(list(range(1, t + 2)), i, params.q)
                                 for i in range(1, t + 2)},
        },
        "inform_digest": {"x": x, "acc": acc, "digest": hash_commit(x, acc, params).hex()},
        "vrf": {"sk": sk, "pk": pk, "evaluations": vrf},
    }


def check_vectors(vec: dict) -> list[str]:
    """Re-derive what can be re-derived from a vector file; returns problems found."""
    params = get_profile(vec["profile"])
    s = vec["sharing"]
    shares = [Share(i, v) for i, v in s["shares"]]
    com = feldman_commit(s["coeffs"], params)
    bad = []
    if list(com.coeff_commits) != s["commitments"] or pow(params.g, s["x"], params.p) != s["X"]:
        bad.append("commitments")
    if not all(verify_share(sh, com, params) for sh in shares):
        bad.append("shares")
    if reconstruct(shares[: s["t"] + 1], s["t"], params) != s["x"]:
        bad.append("reconstruct")
    for ev in vec["vrf"]["evaluations"]:
        if not vrf_verify(vec["vrf"]["pk"], bytes.fromhex(ev["m"]), ev["sigma"],
                          DleqProof(ev["challenge"], ev["response"]), params):
            bad.append(f"vrf {ev['m']}")
    return bad


def cmd_vectors(profile: str, seed: int, out: str | None) -> int:
    vec = make_vectors(profile, seed)
    emit([json.dumps(vec, indent=2, sort_keys=True)], out)
    return 0 if not check_vectors(vec) else 1


def cmd_dkg_demo(cfg: ScenarioConfig, out: str | None) -> int:
    params = get_profile(cfg.group_profile)
    n = sum(cfg.a)
    tr = dkg_commit_run(DkgConfig(n, 2 * n // 3, params), cfg.seed)
    x = dkg_reveal_run(tr, range(1, n + 1))
    body = tr.to_json() | {"x": x, "ver": pow(params.g, x, params.p) == tr.X}
    emit([json.dumps(body, indent=2, sort_keys=True)], out)
    return 0 if body["ver"] else 1


def cmd_vrf_demo(cfg: ScenarioConfig, out: str | None) -> int:
    params = get_profile(cfg.group_profile)
    sk, pk = vrf_keygen(params, cfg.seed)
    rows = []
    for i in range(1, 4):
        m = i.to_bytes(8, "big")
        sigma, proof = vrf_eval(sk, m, params)
        rows.append({"m": m.hex(), "sigma": sigma, "proof": [proof.challenge, proof.response],
                     "verified": vrf_verify(pk, m, sigma, proof, params),
                     "output": vrf_output(sigma, params).hex()})
    emit([json.dumps({"pk": pk, "evaluations": rows}, indent=2, sort_keys=True)], out)
    return 0 if all(r["verified"] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "execute one protocol run and write its trace"),
                            ("certify", "search coalition deviations from the default strategy"),
                            ("lemmas", "re-check each step of the equilibrium argument"),
                            ("vectors", "emit known-answer vectors for the group primitives"),
                            ("dkg-demo", "run key generation and reveal once"),
                            ("vrf-demo", "evaluate and verify the VRF on a few messages")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML scenario file")
        p.add_argument("--seed", type=int, help="overrides the config seed (unsigned 64-bit)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--allow-unsafe", action="store_true",
                       help="run endowments that break the decentralization bound")
        p.add_argument("--profile", choices=sorted(PROFILES), help="overrides the config group profile")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            _require(0 <= args.seed < 2**64, "--seed must fit in 64 unsigned bits")
            cfg.seed = args.seed
        if args.profile:
            cfg.group_profile = args.profile
        if args.command == "vectors":
            return cmd_vectors(cfg.group_profile, cfg.seed, args.out)
        if args.command in ("run", "certify", "lemmas"):
            gate(cfg, args.allow_unsafe)
        handler = {"run": cmd_run, "certify": cmd_certify, "lemmas": cmd_lemmas,
                   "dkg-demo": cmd_dkg_demo, "vrf-demo": cmd_vrf_demo}[args.command]
        return handler(cfg, args.out)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except SearchBudgetExceeded as exc:
        print(f"SearchBudgetExceeded: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
