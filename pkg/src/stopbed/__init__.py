"""Sequential Bayesian experimental design with learned optimal stopping."""
from .belief import GaussianBelief, GridBelief, NoiseModel
from .costs import ConstantCost, QuadraticCost, TableCost
from .env_convdiff import ConvDiffConfig, ConvDiffEnv
from .env_lingauss import LinGaussConfig, LinGaussEnv
from .mdp import Formulation, RewardSpec
from .nn import DenseNet, Optimizer
from .train import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "GaussianBelief", "GridBelief", "NoiseModel",
    "ConstantCost", "QuadraticCost", "TableCost",
    "ConvDiffConfig", "ConvDiffEnv", "LinGaussConfig", "LinGaussEnv",
    "Formulation", "RewardSpec", "DenseNet", "Optimizer",
    "TrainConfig",
]
