from mevc.contracts.airdrop import Airdrop, AirdropState, Drop
from mevc.contracts.amm import AMM, AmmState, Swap
from mevc.contracts.coinpusher import CoinPusher, CoinPusherState, Push

__all__ = [
    "AMM",
    "Airdrop",
    "AirdropState",
    "AmmState",
    "CoinPusher",
    "CoinPusherState",
    "Drop",
    "Push",
    "Swap",
]
