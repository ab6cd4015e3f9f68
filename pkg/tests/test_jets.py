import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gtorsion import jets
from gtorsion.diffgeo import fd_jet

coords = arrays(np.float64, 3, elements=st.floats(-1.0, 1.0))


def sample_fn(x):
    a = jets.sin(x[0]) * x[1] + jets.cos(x[2]) ** 2
    b = 1.0 / (2.0 + x[0] * x[0]) - jets.sqrt(1.5 + x[1] * x[2])
    M = jets.stack([jets.stack([a, b]), jets.stack([b * b, a - b])])
    return jets.matmul(M, jets.inv(M + 3.0 * jets.eye(2, like=M)))


@settings(max_examples=40, deadline=None)
@given(coords)
def test_jet_matches_central_differences(x):
    val, d1, d2 = jets.jet_of(sample_fn, x)
    f0, f1, f2 = fd_jet(sample_fn, x, 1e-5, 1e-3, richardson=True)
    assert np.allclose(val, f0, atol=1e-12)
    assert np.allclose(d1, f1, atol=1e-7)
    assert np.allclose(d2, f2, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(coords)
def test_second_derivatives_are_symmetric(x):
    _, _, d2 = jets.jet_of(sample_fn, x)
    assert np.allclose(d2, np.swapaxes(d2, -1, -2), atol=1e-12)


def test_plain_arrays_pass_through():
    x = np.array([0.3, -0.2, 0.1])
    assert not jets.is_jet(sample_fn(x))
    assert np.allclose(jets.value(jets.variable(x)), x)


def test_constant_has_zero_derivatives():
    c = jets.Jet.constant(np.eye(3), 4)
    assert c.nvars == 4
    assert not np.any(c.d1) and not np.any(c.d2)
