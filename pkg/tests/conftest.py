import pytest

from empathic_mftg.matrix_games import ForwardingParams


@pytest.fixture(scope="module")
def forwarding_fixture():
    """Two-relay forwarding dilemma with every band non-empty."""
    return ForwardingParams(m11=1.0, m21=0.8, n11=1.0, n12=0.9, c1=0.5, c2=0.5)
