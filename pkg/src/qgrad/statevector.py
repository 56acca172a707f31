"""Dense statevectors over the grid and the per-axis quantum Fourier transform.

Basis labels are signed: along every axis the array position ``i`` holds the
label ``i - 2**(n-1)``. The inverse transform maps label ``k`` to
``2**(-n/2) * sum_h exp(-2 pi i k h / 2**n) |h>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec


@dataclass
class State:
    spec: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(self.spec.shape)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def copy(self) -> State:
        return State(self.spec, self.amplitudes.copy())


def uniform_superposition(spec: GridSpec) -> State:
    amp = np.full(spec.shape, 2.0 ** (-spec.n * spec.d / 2), dtype=np.complex128)
    return State(spec, amp)


def qft_matrix(n: int, inverse: bool = True) -> np.ndarray:
    """Dense single-axis transform with signed row/column labels."""
    size = 1 << n
    labels = np.arange(-(size // 2), size // 2)
    sign = -1.0 if inverse else 1.0
    # reduce k*h mod 2**n before scaling to keep the angle small and exact
    prod = np.mod(np.outer(labels, labels), size)
    return np.exp(sign * 2j * np.pi * prod / size) / math.sqrt(size)


def _transform(state: State, inverse: bool, method: str) -> State:
    amp = state.amplitudes
    if method == "dense":
        mat = qft_matrix(state.spec.n, inverse=inverse)
        for axis in range(state.spec.d):
            amp = np.moveaxis(np.tensordot(mat, amp, axes=([1], [axis])), 0, axis)
    elif method == "fft":
        axes = tuple(range(state.spec.d))
        shifted = np.fft.ifftshift(amp, axes=axes)
        out = np.fft.fftn(shifted, axes=axes, norm="ortho") if inverse else np.fft.ifftn(shifted, axes=axes, norm="ortho")
        amp = np.fft.fftshift(out, axes=axes)
    else:
        raise ValueError(f"unknown transform method {method!r}")
    return State(state.spec, amp)


def inverse_qft_all_axes(state: State, method: str = "fft") -> State:
    """Inverse QFT applied independently along each of the ``d`` axes.

    ``method="dense"`` multiplies by the explicit matrix; ``"fft"`` uses the
    FFT with index shifts and agrees with the dense form to rounding.
    """
    return _transform(state, inverse=True, method=method)


def qft_all_axes(state: State, method: str = "fft") -> State:
    """Adjoint of :func:`inverse_qft_all_axes`."""
    return _transform(state, inverse=False, method=method)


class OutcomeDistribution:
    """Measurement probabilities indexed by signed label tuples."""

    def __init__(self, spec: GridSpec, probabilities: np.ndarray):
        self.spec = spec
        self.probabilities = probabilities.reshape(spec.shape)

    def __getitem__(self, h) -> float:
        h = np.atleast_1d(np.asarray(h, dtype=np.int64))
        return float(self.probabilities[tuple(h + self.spec.offset)])

    def __len__(self) -> int:
        return self.probabilities.size

    def items(self):
        labels = self.spec.axis_indices()
        for idx in np.ndindex(*self.spec.shape):
            yield tuple(int(labels[i]) for i in idx), float(self.probabilities[idx])

    def total(self) -> float:
        return float(self.probabilities.sum())

    def marginal(self, axis: int) -> np.ndarray:
        """Probabilities over the signed labels of one axis (0-based)."""
        others = tuple(a for a in range(self.spec.d) if a != axis)
        return self.probabilities.sum(axis=others) if others else self.probabilities.copy()


def outcome_distribution(state: State) -> OutcomeDistribution:
    return OutcomeDistribution(state.spec, np.abs(state.amplitudes) ** 2)


def sample_outcomes(state: State, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws of signed label vectors, shape ``(size, d)``."""
    probs = (np.abs(state.amplitudes) ** 2).ravel()
    probs = probs / probs.sum()
    flat = rng.choice(probs.size, size=size, p=probs)
    idx = np.stack(np.unravel_index(flat, state.spec.shape), axis=-1)
    return idx.astype(np.int64) - state.spec.offset


def sample_outcome(state: State, rng: np.random.Generator) -> np.ndarray:
    return sample_outcomes(state, rng, 1)[0]


def peak_window_probability(n: int, a: float, radius: float = 4.0, method: str = "dense") -> float:
    """Probability that the inverse QFT of ``e^{iak}`` lands within ``radius`` of ``2**n a / (2 pi)``."""
    spec = GridSpec(d=1, n=n, r=1.0)
    k = spec.axis_indices()
    state = State(spec, np.exp(1j * a * k) / math.sqrt(spec.axis_size))
    probs = outcome_distribution(inverse_qft_all_axes(state, method=method)).probabilities
    centre = spec.axis_size * a / (2 * math.pi)
    return float(probs[np.abs(k - centre) <= radius].sum())


def qft_peak_probability(n: int, a: float) -> float:
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if abs(a) > 2 * math.pi / 3 + 1e-12:
        raise ValueError(f"phase slope {a} outside [-2pi/3, 2pi/3]")
    return peak_window_probability(n, a, radius=4.0)
