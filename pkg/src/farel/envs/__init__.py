from .fraud import FraudBiasSpec, FraudEnv, FraudGenSpec, Transaction
from .hiring import Applicant, BiasSpec, HiringConfig, HiringEnv, PopulationSpec

__all__ = [
    "Applicant",
    "BiasSpec",
    "FraudBiasSpec",
    "FraudEnv",
    "FraudGenSpec",
    "HiringConfig",
    "HiringEnv",
    "PopulationSpec",
    "Transaction",
]
