import numpy as np
import pytest

from delaynet.measures import DelayMeasure
from delaynet.model import NetworkParams, StimulusFn

ACCEPTANCE = {}


def reference_network(variant: str = "atom", gamma: float = 0.05) -> NetworkParams:
    """Two neurons, unit decay, unit atoms at -1; ``variant="exp"`` swaps mu_12 for 2 e^{2t}."""
    stim = [StimulusFn.pulse(1.0, 0.0, 1.0), StimulusFn.pulse(0.5, 0.0, 1.0)]
    p = NetworkParams.uniform(2, 1.0, 0.1, 0.5, 0.2, DelayMeasure.atom(-1.0), stim, gamma)
    if variant == "exp":
        p = p.replace(mu=((None, DelayMeasure.exponential(2.0, 2.0)), (DelayMeasure.atom(-1.0), None)))
    return p


def decoupled_network(stimulus=None, gamma: float = 0.1, alpha: float = 1.0) -> NetworkParams:
    """Single neuron ``x' = -alpha x + I(t)``."""
    stim = stimulus if stimulus is not None else StimulusFn.zero()
    return NetworkParams.uniform(1, alpha, 0.0, 0.0, 0.0, DelayMeasure(), [stim], gamma)


@pytest.fixture
def ref_net():
    return reference_network()


@pytest.fixture
def ref_net_exp():
    return reference_network("exp")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance():
    def record(number: int, name: str, passed: bool, detail: str = ""):
        ACCEPTANCE[number] = (name, bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {name}: {detail}")


def pulse_response(t, amp, center, width):
    """Bounded solution of ``x' = -x + amp exp(-((t - center) / width)^2)`` on the whole line."""
    from scipy.special import erfc, erfcx

    t = np.asarray(t, dtype=float)
    q = (t - center) / width
    z = 0.5 * width - q
    k = amp * width * 0.5 * np.sqrt(np.pi)
    # erfcx form where z >= 0 avoids overflow; the plain form is safe elsewhere
    safe = np.where(z >= 0, z, 0.0)
    big = k * erfcx(safe) * np.exp(-q * q)
    small = k * np.exp(center - t + 0.25 * width * width) * erfc(np.where(z < 0, z, 0.0))
    return np.where(z >= 0, big, small)
