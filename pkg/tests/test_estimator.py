import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rboxlib import AngleCoder, ConfigError, InvalidInputError


def test_fit_builds_table():
    coder = AngleCoder(scheme="gcl", omega=22.5).fit()
    assert coder.code_length_ == 3
    assert coder.num_categories_ == 8
    assert coder.table_.config.scheme == "gcl"


def test_unfitted_raises():
    coder = AngleCoder()
    with pytest.raises(NotFittedError):
        coder.transform([10.0])
    with pytest.raises(NotFittedError):
        coder.inverse_transform(np.zeros((1, 8)))
    with pytest.raises(NotFittedError):
        coder.code_length_


def test_transform_roundtrip():
    coder = AngleCoder(scheme="bcl", omega=1.0).fit()
    thetas = np.array([89.0, -89.0, 0.0, 45.5])
    targets = coder.transform(thetas)
    assert targets.shape == (4, 8)
    decoded = coder.inverse_transform(8.0 * targets - 4.0)
    d = np.abs(thetas - decoded) % 180.0
    assert np.minimum(d, 180.0 - d).max() <= 0.5 + 1e-9


def test_transform_accepts_column_vector():
    coder = AngleCoder(scheme="onehot", omega=22.5).fit()
    flat = coder.transform([10.0, 20.0])
    col = coder.transform(np.array([[10.0], [20.0]]))
    assert np.array_equal(flat, col)
    with pytest.raises(InvalidInputError):
        coder.transform(np.zeros((2, 3)))


def test_fit_transform_shortcut():
    out = AngleCoder(scheme="bcl", omega=22.5).fit_transform([45.0])
    assert out.shape == (1, 3)


def test_get_set_params():
    coder = AngleCoder(omega=22.5)
    params = coder.get_params()
    assert params["omega"] == 22.5
    assert params["scheme"] == "bcl"
    coder.set_params(scheme="csl")
    assert coder.fit().num_categories_ == 8


def test_clone_keeps_params_drops_state():
    coder = AngleCoder(scheme="gcl", omega=22.5).fit()
    fresh = clone(coder)
    assert fresh.get_params() == coder.get_params()
    with pytest.raises(NotFittedError):
        fresh.transform([0.0])


def test_invalid_params_fail_at_fit():
    coder = AngleCoder(omega=7.0)  # construction must not validate
    with pytest.raises(ConfigError):
        coder.fit()
