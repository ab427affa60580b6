"""scikit-learn style adapter over the angle coding tables."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .coding import CodingConfig, build_code_table, decode_logits_batch, encode_angles
from .errors import InvalidInputError


class AngleCoder(TransformerMixin, BaseEstimator):
    """Transformer between angles and classification targets.

    ``transform`` maps ground-truth angles (degrees, canonical range) to
    codeword target rows; ``inverse_transform`` maps raw logit rows back to
    angles. Fitting just materializes the code table; there is nothing to
    learn from data, so ``fit`` accepts and ignores X/y like other
    stateless scikit-learn transformers.

    Parameters mirror CodingConfig. Examples:

        coder = AngleCoder(scheme="gcl", omega=180 / 256).fit()
        targets = coder.transform([30.0, -45.0])
        angles = coder.inverse_transform(logits)
    """

    def __init__(self, scheme="bcl", omega=1.0, angle_range=180.0,
                 csl_radius=4.0, csl_window="gaussian",
                 decode_threshold=0.5, invalid_code="wrap"):
        self.scheme = scheme
        self.omega = omega
        self.angle_range = angle_range
        self.csl_radius = csl_radius
        self.csl_window = csl_window
        self.decode_threshold = decode_threshold
        self.invalid_code = invalid_code

    def fit(self, X=None, y=None):
        """Build the code table from the parameters. X and y are ignored."""
        self.table_ = build_code_table(CodingConfig(
            scheme=self.scheme, omega=self.omega, angle_range=self.angle_range,
            csl_radius=self.csl_radius, csl_window=self.csl_window,
            decode_threshold=self.decode_threshold,
            invalid_code=self.invalid_code))
        return self

    def _table(self):
        table = getattr(self, "table_", None)
        if table is None:
            raise NotFittedError(
                "This AngleCoder instance is not fitted yet; call fit() first.")
        return table

    @staticmethod
    def _as_column(X, name):
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        if arr.ndim != 1:
            raise InvalidInputError(
                f"{name} must be a 1-D sequence or single-column array, "
                f"got shape {arr.shape}")
        return arr

    def transform(self, X):
        """Angles (n,) or (n, 1) -> codeword targets (n, code_length)."""
        return encode_angles(self._as_column(X, "X"), self._table())

    def inverse_transform(self, X):
        """Logits (n, code_length) -> decoded angles (n,)."""
        return decode_logits_batch(np.asarray(X, dtype=np.float64), self._table())

    @property
    def code_length_(self):
        return self._table().code_length

    @property
    def num_categories_(self):
        return self._table().num_categories
