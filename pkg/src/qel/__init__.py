"""Contextual QAOA policies trained end to end on task loss, simulated exactly."""

from qel._kernels import ACTIVE as BACKEND
from qel.ansatz import CircuitLayout, QelParams, init_params, run_circuit
from qel.datagen import Dataset, gen_bmp, gen_maxcut, gen_qap, split
from qel.evaluation import brute_force_optimum, evaluate, natural_cost, relative_regret
from qel.gradient import GradMode, grad_exact, grad_fd, grad_shots
from qel.inference import decide, greedy_repair
from qel.instance import Context, ContextualInstance
from qel.ising import IsingModel, ProblemSpec, diagonalize, ground_state
from qel.loss import loss_exact, loss_shots
from qel.training import OptimizerConfig, TrainState, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CircuitLayout",
    "Context",
    "ContextualInstance",
    "Dataset",
    "GradMode",
    "IsingModel",
    "OptimizerConfig",
    "ProblemSpec",
    "QelParams",
    "TrainState",
    "brute_force_optimum",
    "decide",
    "diagonalize",
    "evaluate",
    "gen_bmp",
    "gen_maxcut",
    "gen_qap",
    "grad_exact",
    "grad_fd",
    "grad_shots",
    "greedy_repair",
    "ground_state",
    "init_params",
    "loss_exact",
    "loss_shots",
    "natural_cost",
    "relative_regret",
    "run_circuit",
    "split",
    "train",
]
