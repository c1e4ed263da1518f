"""Two-stage protection: fit per-region blur intensities, then run PGD.

Stage 1 fits ``omega = log sigma`` per region with Adam so that a fixed
gaussian perturbation, blurred region-wise, disturbs the image's radial power
spectrum as little as possible. Stage 2 freezes omega and runs
l2-normalized PGD on the perturbation against ``L_adv + lambda * L_freq``
inside an l-infinity ball.
"""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from . import rng
from .blur import DEFAULT_RADIUS
from .compose import OMEGA_MAX, OMEGA_MIN, clamp_omega, compose, compose_grads, omega_to_sigma
from .image import check_valid_image
from .spectrum import DEFAULT_BANDS, l_freq, l_freq_grad

GRAD_FLOOR = 1e-12


@dataclass(frozen=True)
class ProtectConfig:
    epsilon: float = 16 / 255
    T1: int = 50
    T2: int = 100
    gamma1: float = 0.1
    gamma2: float = 20.0
    lam: float = 10.0
    k: int = DEFAULT_RADIUS
    B: int = DEFAULT_BANDS
    seed: int = 0
    # None means "same as epsilon"; 1.0 reproduces a unit-variance draw.
    delta0_scale: float | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # When set, Stage 1 is skipped and every region uses this blur intensity.
    fixed_sigma: float | None = None

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.T1 < 0 or self.T2 < 0:
            raise ValueError("step counts must be nonnegative")
        if self.gamma1 < 0 or self.gamma2 < 0 or self.lam < 0:
            raise ValueError("step sizes and lambda must be nonnegative")

    @property
    def delta0_std(self):
        return self.epsilon if self.delta0_scale is None else self.delta0_scale

    def to_dict(self):
        return asdict(self)


@dataclass
class ProtectResult:
    xhat: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    trace_stage1: np.ndarray
    trace_stage2: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def sigma(self):
        return omega_to_sigma(self.omega)


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grad):
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def initial_noise(shape, cfg):
    return rng.gaussian_like(cfg.seed, shape, scale=cfg.delta0_std)


def stage1_fit_omega(x, masks, cfg):
    """Adam on omega against ``L_freq`` with a fixed noise draw.

    Returns ``(omega, trace)``; ``trace[t]`` is the penalty at the start of
    step t. Outward gradients at the clamp boundary are dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    delta0 = initial_noise(x.shape, cfg)
    omega = np.zeros(masks.region_count)
    opt = Adam(cfg.gamma1, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    trace = np.empty(cfg.T1)
    for t in range(cfg.T1):
        xhat = compose(x, delta0, masks, omega, cfg.k)
        trace[t] = l_freq(xhat, x, cfg.B)
        upstream = l_freq_grad(xhat, x, cfg.B)
        _, g = compose_grads(upstream, x, delta0, masks, omega, cfg.k)
        g[(omega <= OMEGA_MIN) & (g > 0)] = 0.0
        g[(omega >= OMEGA_MAX) & (g < 0)] = 0.0
        omega = clamp_omega(opt.step(omega, g))
    return omega, trace


def stage2_pgd(x, masks, omega, objective, cfg, check_budget=True):
    """l2-normalized PGD on delta with omega frozen.

    Returns ``(delta, trace)`` where ``trace[t] = (L_adv, L_freq)`` at the start
    of step t.
    """
    x = np.asarray(x, dtype=np.float64)
    omega = np.array(omega, dtype=np.float64)
    eps = cfg.epsilon
    delta = np.zeros_like(x)
    trace = np.empty((cfg.T2, 2))
    for t in range(cfg.T2):
        xhat = compose(x, delta, masks, omega, cfg.k)
        trace[t] = objective.value(xhat), l_freq(xhat, x, cfg.B)
        upstream = objective.grad(xhat)
        if cfg.lam:
            upstream = upstream + cfg.lam * l_freq_grad(xhat, x, cfg.B)
        g, _ = compose_grads(upstream, x, delta, masks, omega, cfg.k, want_omega=False)
        norm = math.sqrt(float(np.sum(g * g)))
        if norm < GRAD_FLOOR:
            continue
        delta = np.clip(delta - cfg.gamma2 * g / norm, -eps, eps)
        if check_budget:
            assert np.max(np.abs(delta)) <= eps
    return delta, trace


def protect(x, masks, objective, cfg=ProtectConfig()):
    check_valid_image(x, "protect input")
    x = np.asarray(x, dtype=np.float64)
    if masks.shape != x.shape[:2]:
        raise ValueError(f"masks {masks.shape} do not match image {x.shape[:2]}")
    if cfg.fixed_sigma is None:
        omega, trace1 = stage1_fit_omega(x, masks, cfg)
    else:
        omega = clamp_omega(np.full(masks.region_count, math.log(cfg.fixed_sigma)))
        trace1 = np.zeros(0)
    frozen = omega.copy()
    delta, trace2 = stage2_pgd(x, masks, omega, objective, cfg)
    assert np.array_equal(frozen, omega)
    xhat = np.clip(compose(x, delta, masks, omega, cfg.k), 0.0, 1.0)
    return ProtectResult(xhat=xhat, delta=delta, omega=omega, trace_stage1=trace1, trace_stage2=trace2)
