import numpy as np
import pytest

from nehari.grid import DomainSpec, GridFunction
from nehari.model import Nonlinearity, ProblemSpec


def make_spec(domain, q=3.0, f1=((1.0, 4.0),), f2=((1.0, 4.0),),
              V1=1.0, V2=1.0, lam=0.3, delta=0.3):
    """Assemble a ProblemSpec from constants or callables."""
    def field(data):
        if callable(data):
            return GridFunction.from_callable(domain, data)
        return GridFunction.constant(domain, data)

    return ProblemSpec(
        domain=domain, q=q,
        f1=Nonlinearity(f1), f2=Nonlinearity(f2),
        V1=field(V1), V2=field(V2), lam=field(lam), delta=delta,
    )


@pytest.fixture(scope="session")
def bounded_spec():
    """The 1D bounded default: (0,1), 256 interior nodes, f = |s|^2 s, q = 3."""
    return make_spec(DomainSpec.dirichlet_box(1.0, 256))


@pytest.fixture(scope="session")
def small_bounded_spec():
    return make_spec(DomainSpec.dirichlet_box(1.0, 64))


@pytest.fixture(scope="session")
def bounded_2d_spec():
    """A 2D box with varying potentials, two-term nonlinearity and q = 2.5."""
    dom = DomainSpec.dirichlet_box((1.0, 1.0), (24, 24))
    return make_spec(
        dom, q=2.5,
        f1=((1.0, 3.5), (0.5, 4.5)), f2=((1.0, 4.0),),
        V1=lambda x, y: 1.0 + 0.5 * np.sin(np.pi * x) * y,
        V2=2.0,
        lam=lambda x, y: 0.4 * np.sqrt(2.0 * (1.0 + 0.5 * np.sin(np.pi * x) * y)),
        delta=0.4,
    )


@pytest.fixture(scope="session")
def periodic_spec_1d():
    """1D torus, period 8, 16 nodes per cell, cosine potential well."""
    dom = DomainSpec.periodic_torus([8], 16)
    return make_spec(
        dom,
        V1=lambda x: 1.0 + 0.25 * np.cos(2.0 * np.pi * x),
        V2=1.0,
        lam=0.2,
    )


@pytest.fixture(scope="session")
def periodic_spec_2d():
    """Small 2D torus for fast solver tests."""
    dom = DomainSpec.periodic_torus([6, 6], 8)
    return make_spec(dom, lam=0.3)


def random_state(spec, rng, smooth=False):
    from nehari.energy import State

    dom = spec.domain
    u = rng.standard_normal(dom.shape)
    v = rng.standard_normal(dom.shape)
    return State.from_values(dom, u, v)
