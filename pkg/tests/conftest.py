import numpy as np
import pytest

from qel.ansatz import CircuitLayout, init_params
from qel.instance import ContextualInstance
from qel.ising import ProblemSpec


def random_distances(n, rng):
    D = rng.uniform(size=(n, n))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    return D


def make_instance(kind, size, rng, d_x=3, penalty=2.0, edges=None):
    """Random instance with Gaussian covariates and positive coefficients."""
    spec = ProblemSpec(kind, size, edges=edges, penalty=0.0 if kind == "maxcut" else penalty)
    m = len(spec.uncertain_edges())
    X = rng.normal(size=(m, d_x))
    y = rng.uniform(0.2, 2.0, size=m)
    D = random_distances(size, rng) if kind == "qap" else None
    return ContextualInstance(spec, X, D, y=y)


def make_params(inst, p, strategy, encoder, rng, angle_scale=1.0):
    layout = CircuitLayout.for_spec(inst.spec, p, strategy, encoder, inst.d_x)
    return init_params(layout, rng, (inst.covariates, inst.y), angle_scale=angle_scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
