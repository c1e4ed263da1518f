"""Per-region blurred perturbations and their gradients.

``xhat = x + sum_r M_r * blur(delta; sigma_r)``: the full perturbation is
blurred once per region intensity and masked afterwards.
"""

from dataclasses import dataclass
import math

import numpy as np

from .blur import (
    DEFAULT_RADIUS,
    SIGMA_MAX,
    SIGMA_MIN,
    adjoint_blur,
    apply_blur,
    build_kernel,
    kernel_sigma_grad,
)

OMEGA_MIN = math.log(SIGMA_MIN)
OMEGA_MAX = math.log(SIGMA_MAX)


def clamp_omega(omega):
    return np.clip(np.asarray(omega, dtype=np.float64), OMEGA_MIN, OMEGA_MAX)


def omega_to_sigma(omega):
    return np.clip(np.exp(np.asarray(omega, dtype=np.float64)), SIGMA_MIN, SIGMA_MAX)


@dataclass(frozen=True)
class RegionBlurState:
    omega: np.ndarray

    @classmethod
    def zeros(cls, regions):
        return cls(np.zeros(regions))

    @property
    def sigma(self):
        return omega_to_sigma(self.omega)

    def __len__(self):
        return len(self.omega)


def _check(x, delta, masks, omega):
    if np.shape(x) != np.shape(delta):
        raise ValueError(f"image {np.shape(x)} and perturbation {np.shape(delta)} differ")
    if masks.shape != np.shape(x)[:2]:
        raise ValueError(f"masks {masks.shape} do not match image {np.shape(x)[:2]}")
    if len(omega) != masks.region_count:
        raise ValueError(f"{len(omega)} blur intensities for {masks.region_count} regions")


def _omega(state):
    return np.asarray(state.omega if isinstance(state, RegionBlurState) else state, dtype=np.float64)


def blurred_perturbation(delta, masks, state, k=DEFAULT_RADIUS):
    """``sum_r M_r * blur(delta; sigma_r)`` without the base image."""
    omega = _omega(state)
    delta = np.asarray(delta, dtype=np.float64)
    out = np.zeros_like(delta)
    for r, sigma in enumerate(omega_to_sigma(omega)):
        m = masks.mask(r)
        if not m.any():
            continue
        out += m[:, :, None] * apply_blur(delta, build_kernel(sigma, k))
    return out


def compose(x, delta, masks, state, k=DEFAULT_RADIUS):
    omega = _omega(state)
    _check(x, delta, masks, omega)
    return np.asarray(x, dtype=np.float64) + blurred_perturbation(delta, masks, omega, k)


def compose_grads(upstream, x, delta, masks, state, k=DEFAULT_RADIUS, want_omega=True):
    """Gradients of a loss through :func:`compose`.

    Returns ``(grad_delta, grad_omega)``; `grad_omega` is None when
    ``want_omega`` is false. The omega gradient is ``sigma_r * dL/dsigma_r``
    (the chain rule through ``sigma = exp(omega)``).
    """
    omega = _omega(state)
    _check(x, delta, masks, omega)
    upstream = np.asarray(upstream, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    grad_delta = np.zeros_like(delta)
    grad_omega = np.zeros(len(omega)) if want_omega else None
    for r, sigma in enumerate(omega_to_sigma(omega)):
        m = masks.mask(r)
        if not m.any():
            continue
        g = m[:, :, None] * upstream
        grad_delta += adjoint_blur(g, build_kernel(sigma, k))
        if want_omega:
            grad_omega[r] = sigma * kernel_sigma_grad(delta, sigma, k, g)
    return grad_delta, grad_omega
