"""Angle coding for classification-style angle prediction.

An angle in the canonical long-side range is discretized into one of C
bins (C = angle_range / omega) and the bin index is represented either
sparsely (one output per bin: "onehot", "csl") or densely (one output per
bit of the index: "bcl" for plain binary, "gcl" for Gray code). Decoding
maps network logits back to an angle in degrees.

Sparse schemes bin by lower edge, floor((90 - theta) / omega), so the
half-bin-offset decode 90 - omega * (argmax + 0.5) returns exactly the bin
center. Dense schemes bin by nearest, -round((theta - 90) / omega), so the
plain decode 90 - omega * k is already the bin center. Both pairings are
exact inverses up to quantization, worst case omega / 2.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, InvalidInputError
from .validation import (
    as_finite_vector,
    check_choice,
    check_finite_scalar,
    check_index,
    check_positive_scalar,
)

SPARSE_SCHEMES = frozenset({"onehot", "csl"})
DENSE_SCHEMES = frozenset({"bcl", "gcl"})
SCHEMES = SPARSE_SCHEMES | DENSE_SCHEMES

_WINDOWS = frozenset({"gaussian", "pulse"})
_INVALID_CODE_POLICIES = frozenset({"wrap", "clamp"})


def _sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _categories_for(omega, angle_range):
    """Number of bins, validated to be an integer count >= 2."""
    ratio = angle_range / omega
    c = round(ratio)
    if abs(ratio - c) > 1e-6:
        raise ConfigError(
            f"angle_range / omega must be an integer bin count, got {ratio!r}")
    if c < 2:
        raise ConfigError(f"need at least 2 bins, got {c}")
    return int(c)


@dataclass(frozen=True)
class CodingConfig:
    """Parameters defining an angle code.

    Attributes:
        scheme: "onehot", "csl", "bcl" or "gcl".
        omega: Bin width in degrees.
        angle_range: Total angular extent covered by the code (180 for the
            long-side definition).
        csl_radius: Window radius (Gaussian sigma) in bins for "csl".
        csl_window: "gaussian" or "pulse".
        decode_threshold: Sigmoid threshold separating 0 and 1 bits when
            decoding dense codes.
        invalid_code: What to do with dense codewords whose integer value
            falls outside [0, C): "wrap" (mod C) or "clamp" (to C - 1).
    """

    scheme: str = "bcl"
    omega: float = 1.0
    angle_range: float = 180.0
    csl_radius: float = 4.0
    csl_window: str = "gaussian"
    decode_threshold: float = 0.5
    invalid_code: str = "wrap"

    def __post_init__(self):
        scheme = str(self.scheme).lower()
        check_choice(scheme, "scheme", SCHEMES)
        object.__setattr__(self, "scheme", scheme)
        object.__setattr__(self, "omega", check_positive_scalar(self.omega, "omega"))
        object.__setattr__(
            self, "angle_range", check_positive_scalar(self.angle_range, "angle_range"))
        object.__setattr__(
            self, "csl_radius", check_positive_scalar(self.csl_radius, "csl_radius"))
        check_choice(self.csl_window, "csl_window", _WINDOWS)
        thr = check_finite_scalar(self.decode_threshold, "decode_threshold")
        if not 0.0 < thr < 1.0:
            raise ConfigError(f"decode_threshold must lie in (0, 1), got {thr}")
        object.__setattr__(self, "decode_threshold", thr)
        check_choice(self.invalid_code, "invalid_code", _INVALID_CODE_POLICIES)
        # Fails early when omega does not evenly divide angle_range.
        _categories_for(self.omega, self.angle_range)

    @property
    def num_categories(self):
        return _categories_for(self.omega, self.angle_range)

    @property
    def is_dense(self):
        return self.scheme in DENSE_SCHEMES


@dataclass(frozen=True, eq=False)
class AngleCodeTable:
    """Materialized code table: one codeword row per angle bin."""

    config: CodingConfig
    num_categories: int
    code_length: int
    codewords: np.ndarray  # (num_categories, code_length) float64

    def __post_init__(self):
        self.codewords.setflags(write=False)

    @property
    def is_dense(self):
        return self.config.is_dense

    def codeword_strings(self):
        """Codewords as bit strings; only meaningful for 0/1-valued tables."""
        if self.config.scheme == "csl":
            raise InvalidInputError("csl codewords are soft; use the raw table")
        return ["".join(str(int(b)) for b in row) for row in self.codewords]

    def to_jsonable(self):
        """JSON-friendly dict with bit strings (or float lists for csl)."""
        if self.config.scheme == "csl":
            words = [[float(v) for v in row] for row in self.codewords]
        else:
            words = self.codeword_strings()
        return {
            "scheme": self.config.scheme,
            "omega": self.config.omega,
            "angle_range": self.config.angle_range,
            "num_categories": self.num_categories,
            "code_length": self.code_length,
            "codewords": words,
        }


def _int_to_bits(values, length):
    """Big-endian bit matrix of non-negative integers."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(length - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def build_code_table(config):
    """Construct the codeword table for a coding configuration.

    Dense tables use ceil(log2(C)) bits per angle; the Gray variant encodes
    index i as i XOR (i >> 1) so neighbouring bins differ in a single bit.
    The csl table holds a circular window (peak 1 at the target bin) rather
    than hard bits.

    Args:
        config: CodingConfig.

    Returns:
        AngleCodeTable.
    """
    if not isinstance(config, CodingConfig):
        raise InvalidInputError("build_code_table expects a CodingConfig")
    c = config.num_categories
    scheme = config.scheme
    if scheme == "onehot":
        codewords = np.eye(c, dtype=np.float64)
        length = c
    elif scheme == "csl":
        idx = np.arange(c)
        d = np.abs(idx[None, :] - idx[:, None])
        d = np.minimum(d, c - d).astype(np.float64)
        if config.csl_window == "gaussian":
            codewords = np.exp(-(d ** 2) / (2.0 * config.csl_radius ** 2))
        else:
            codewords = (d <= config.csl_radius).astype(np.float64)
        length = c
    else:
        length = max(1, (c - 1).bit_length())
        indices = np.arange(c, dtype=np.int64)
        if scheme == "gcl":
            indices = indices ^ (indices >> 1)
        codewords = _int_to_bits(indices, length)
    return AngleCodeTable(config, c, length, codewords)


def _round_half_away(x):
    return math.copysign(math.floor(abs(x) + 0.5), x)


def discretize(theta, omega, angle_range=180.0):
    """Nearest-bin index of an angle: (-round((theta - 90) / omega)) mod C.

    The 90 generalizes to angle_range / 2. Rounding is half away from zero.

    Args:
        theta: Angle in degrees, canonical in (-angle_range/2, angle_range/2].
        omega: Bin width in degrees.
        angle_range: Angular period covered by the code.

    Returns:
        Integer bin index in [0, C).
    """
    omega = check_positive_scalar(omega, "omega")
    angle_range = check_positive_scalar(angle_range, "angle_range")
    c = _categories_for(omega, angle_range)
    half = angle_range / 2.0
    theta = check_finite_scalar(theta, "theta")
    if not (-half < theta <= half):
        raise InvalidInputError(
            f"theta must lie in ({-half}, {half}], got {theta}")
    k = -int(_round_half_away((theta - half) / omega))
    return k % c


def _nearest_bin_indices(thetas, omega, angle_range, c):
    half = angle_range / 2.0
    x = (thetas - half) / omega
    r = np.copysign(np.floor(np.abs(x) + 0.5), x)
    return (-r.astype(np.int64)) % c


def _lower_edge_bin_indices(thetas, omega, angle_range, c):
    half = angle_range / 2.0
    return np.floor((half - thetas) / omega).astype(np.int64) % c


def encode_index(theta, table):
    """Bin index used by ``encode_angle`` for this table's scheme."""
    cfg = table.config
    half = cfg.angle_range / 2.0
    theta = check_finite_scalar(theta, "theta")
    if not (-half < theta <= half):
        raise InvalidInputError(
            f"theta must lie in ({-half}, {half}], got {theta}")
    arr = np.asarray([theta], dtype=np.float64)
    if cfg.is_dense:
        idx = _nearest_bin_indices(arr, cfg.omega, cfg.angle_range, table.num_categories)
    else:
        idx = _lower_edge_bin_indices(arr, cfg.omega, cfg.angle_range, table.num_categories)
    return int(idx[0])


def encode_angle(theta, table):
    """Target vector for one ground-truth angle.

    Args:
        theta: Angle in degrees, canonical.
        table: AngleCodeTable.

    Returns:
        float64 array of length table.code_length (a copy).
    """
    return table.codewords[encode_index(theta, table)].copy()


def encode_angles(thetas, table):
    """Vectorized ``encode_angle``: (n,) angles to an (n, code_length) matrix."""
    cfg = table.config
    thetas = as_finite_vector(thetas, "thetas")
    half = cfg.angle_range / 2.0
    if np.any(thetas <= -half) or np.any(thetas > half):
        raise InvalidInputError(f"angles must lie in ({-half}, {half}]")
    if cfg.is_dense:
        idx = _nearest_bin_indices(thetas, cfg.omega, cfg.angle_range, table.num_categories)
    else:
        idx = _lower_edge_bin_indices(thetas, cfg.omega, cfg.angle_range, table.num_categories)
    return table.codewords[idx]


def gray_to_binary(bits):
    """Convert a Gray-coded bit vector (big-endian) to plain binary.

    b[0] = g[0], b[i] = b[i-1] XOR g[i]; implemented as a prefix XOR.
    """
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("bits must be a non-empty 1-D sequence")
    arr = arr.astype(np.int64)
    if not np.all((arr == 0) | (arr == 1)):
        raise InvalidInputError("bits must be 0 or 1")
    return np.bitwise_xor.accumulate(arr)


def _bits_to_indices(bits, table):
    """Integer bin indices from an (n, L) hard-bit matrix, Gray-decoded if needed."""
    cfg = table.config
    bits = bits.astype(np.int64)
    if cfg.scheme == "gcl":
        bits = np.bitwise_xor.accumulate(bits, axis=1)
    powers = 1 << np.arange(table.code_length - 1, -1, -1, dtype=np.int64)
    k = bits @ powers
    if cfg.invalid_code == "wrap":
        return k % table.num_categories
    return np.minimum(k, table.num_categories - 1)


def decode_logits_batch(logits, table):
    """Vectorized ``decode_logits``: (n, code_length) logits to (n,) degrees."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] != table.code_length:
        raise InvalidInputError(
            f"logits must have shape (n, {table.code_length}), got {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("logits must be finite")
    cfg = table.config
    half = cfg.angle_range / 2.0
    p = _sigmoid(logits)
    if cfg.is_dense:
        bits = (p >= cfg.decode_threshold)
        k = _bits_to_indices(bits, table)
        return half - cfg.omega * k.astype(np.float64)
    # Sparse: winning bin, ties to the lowest index; bin-center decode.
    i = np.argmax(p, axis=1).astype(np.float64)
    return half - cfg.omega * (i + 0.5)


def decode_logits(logits, table):
    """Predicted angle in degrees from raw network outputs.

    Dense schemes threshold sigmoid(logit) at ``decode_threshold`` per bit
    (Gray codes are converted to binary first), turn the bits into a bin
    index, apply the invalid-code policy, and return 90 - omega * k.
    Sparse schemes return 90 - omega * (argmax + 0.5). The result is always
    inside the canonical range.

    Args:
        logits: Sequence of length table.code_length.
        table: AngleCodeTable.

    Returns:
        Angle in degrees.
    """
    logits = as_finite_vector(logits, "logits", length=table.code_length)
    return float(decode_logits_batch(logits[None, :], table)[0])


_THICKNESS_METHODS = frozenset({"reg"}) | SCHEMES


def prediction_thickness(method, anchors, angle_range=180.0, omega=None):
    """Per-location output count of the angle prediction layer.

    Direct regression needs one output per anchor; sparse classification
    needs anchors * (angle_range / omega); dense classification needs
    anchors * ceil(log2(angle_range / omega)).

    Args:
        method: "reg", "onehot", "csl", "bcl" or "gcl".
        anchors: Anchors per location (positive integer).
        angle_range: Angular extent covered.
        omega: Bin width in degrees (unused for "reg").

    Returns:
        Integer thickness.
    """
    method = str(method).lower()
    check_choice(method, "method", _THICKNESS_METHODS)
    anchors = check_index(anchors, "anchors")
    if anchors < 1:
        raise InvalidInputError(f"anchors must be >= 1, got {anchors}")
    if method == "reg":
        return anchors
    angle_range = check_positive_scalar(angle_range, "angle_range")
    omega = check_positive_scalar(omega, "omega")
    ratio = angle_range / omega
    if abs(ratio - round(ratio)) <= 1e-9:
        ratio = float(round(ratio))
    if ratio < 2.0:
        raise ConfigError(f"angle_range / omega must be >= 2, got {ratio}")
    if method in SPARSE_SCHEMES:
        if ratio != round(ratio):
            raise ConfigError(
                f"sparse coding needs an integer bin count, got {ratio}")
        return anchors * int(ratio)
    return anchors * math.ceil(math.log2(ratio))


class QuantizationStats(NamedTuple):
    max_error: float
    mean_error: float


def quantization_error_stats(omega, n_samples, seed, angle_range=180.0, scheme="bcl"):
    """Empirical encode-decode error of the dense path on uniform angles.

    Draws angles uniformly over the canonical range, encodes each to hard
    bits, decodes from saturated logits and measures the modular angle
    error. The worst case is omega / 2 and the expectation omega / 4.

    Args:
        omega: Bin width in degrees.
        n_samples: Number of random angles.
        seed: RNG seed.
        angle_range: Angular period.
        scheme: Coding scheme to exercise (any of the four).

    Returns:
        QuantizationStats(max_error, mean_error).
    """
    n_samples = check_index(n_samples, "n_samples")
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    table = build_code_table(CodingConfig(scheme=scheme, omega=omega,
                                          angle_range=angle_range))
    rng = np.random.default_rng(seed)
    half = angle_range / 2.0
    thetas = half - rng.random(n_samples) * angle_range  # in (-half, half]
    targets = encode_angles(thetas, table)
    logits = 8.0 * targets - 4.0  # saturated: bit 1 -> +4, bit 0 -> -4
    decoded = decode_logits_batch(logits, table)
    d = np.abs(thetas - decoded) % angle_range
    err = np.minimum(d, angle_range - d)
    return QuantizationStats(float(err.max()), float(err.mean()))
