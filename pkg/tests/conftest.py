import numpy as np
import pytest
import scipy.sparse as sp

from skewpencil import SparsePencil, gen_skew_tridiag, gen_toeplitz_spd


def random_pencil(rng, n, cond=1.0):
    """Dense random skew A and SPD B with ``||B|| = 1`` and condition number ``cond``."""
    r = rng.standard_normal((n, n))
    a = (r - r.T) / 2
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    b = (q * np.logspace(0, -np.log10(cond), n)) @ q.T
    b = (b + b.T) / 2
    return a, b


def tridiag_pencil(n, rho=None, delta=1.0, upsilon=1.0):
    a = gen_skew_tridiag(n, upsilon)
    b = sp.identity(n, format="csr") if rho is None else gen_toeplitz_spd(n, rho, delta)
    return SparsePencil(a, b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
