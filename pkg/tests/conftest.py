import numpy as np
import pytest

from inner_clt.blaschke import BlaschkeProduct


@pytest.fixture
def fb():
    """z * b_{1/2}: lambda = 0.5, mu = -0.75."""
    return BlaschkeProduct((0.0, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


PRODUCTS = {
    "z2": BlaschkeProduct.power(2),
    "z3": BlaschkeProduct.power(3),
    "zb_half": BlaschkeProduct((0.0, 0.5)),
    "zb_complex": BlaschkeProduct((0.0, 0.3 + 0.4j)),
}
