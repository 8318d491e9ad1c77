"""Unitary DFT on centred uniform grids.

Nodes are ``y_k = (k - M/2) h`` and ``theta_m = (m - M/2) * 2 pi / (M h)`` per axis;
with these, ``(2 pi)^(-1/2) h sum_k exp(-i y_k theta_m) u_k`` reduces to one FFT
with alternating signs before and after.
"""
from __future__ import annotations

import numpy as np
import scipy.fft


def _alternating(m: int) -> np.ndarray:
    return 1.0 - 2.0 * (np.arange(m) % 2)


def _signs(shape) -> np.ndarray:
    s = np.ones(shape)
    for ax, m in enumerate(shape):
        view = [1] * len(shape)
        view[ax] = m
        s = s * _alternating(m).reshape(view)
    return s


def unitary_dft(values: np.ndarray, h: float, inverse: bool = False) -> np.ndarray:
    """Forward (or inverse) unitary transform of samples with spacing ``h`` on every axis.

    Every axis length must be a multiple of 4 so that ``(-1)^(M/2) = 1``.
    """
    values = np.asarray(values)
    n = values.ndim
    signs = _signs(values.shape)
    fn = scipy.fft.ifftn if inverse else scipy.fft.fftn
    out = fn(values * signs, norm="forward" if inverse else "backward") * signs
    return out * ((2 * np.pi) ** (-n / 2) * h**n)


def centred_nodes(m: int, h: float) -> np.ndarray:
    return (np.arange(m) - m // 2) * h
