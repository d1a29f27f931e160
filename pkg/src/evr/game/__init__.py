"""The N-player escrow game: strategies, payoffs and coalition-deviation search."""

from .certify import (
    BUCKETS, CertReport, Counterexample, Deviation, LemmaCheck, Redeviator, SpaceToggles, coalitions,
    cpne_certify, lemma_scenarios, search_size, strategy_space,
)
from .model import (
    DEFAULT_STRATEGY, DEPOSIT_RANGE, FAILURE_CONFISCATION, ILLICIT_PROFIT, INFORM_PAYOUT, NO_PROFIT_WHEN_SAFE,
    OUTCOME_CLASSES, PAYOFF_RANGE, PLEDGE_BUDGET, PLEDGE_CONSENT, PLEDGE_NET, PREDICATES, REFUND_FLOOR,
    BoundViolation, Endowments, FallbackSplit, InvalidStrategy, Outcome, PlayerEndowment, PledgeAll,
    RegisterViaContract, SearchBudgetExceeded, SideContractChoice, Stage2, StealSplit, Strategy, ZContext,
    ZeroZ, Z_MODELS, check_bounds, decentralization_check, default_strategy, split_evenly,
)
from .play import GameInstance, play

__all__ = [
    "BUCKETS", "CertReport", "Counterexample", "Deviation", "LemmaCheck", "Redeviator", "SpaceToggles",
    "coalitions", "cpne_certify", "lemma_scenarios", "search_size", "strategy_space",
    "DEFAULT_STRATEGY", "OUTCOME_CLASSES", "BoundViolation", "Endowments", "FallbackSplit",
    "InvalidStrategy", "Outcome", "PlayerEndowment", "PledgeAll", "RegisterViaContract",
    "SearchBudgetExceeded", "SideContractChoice", "Stage2", "StealSplit", "Strategy", "ZContext",
    "ZeroZ", "Z_MODELS", "check_bounds", "decentralization_check", "default_strategy", "split_evenly",
    "DEPOSIT_RANGE", "FAILURE_CONFISCATION", "ILLICIT_PROFIT", "INFORM_PAYOUT", "NO_PROFIT_WHEN_SAFE",
    "PAYOFF_RANGE", "PLEDGE_BUDGET", "PLEDGE_CONSENT", "PLEDGE_NET", "PREDICATES", "REFUND_FLOOR",
    "GameInstance", "play",
]
