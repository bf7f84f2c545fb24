"""Dimension reduction to 3D for spatial presentation: exact PCA and exact
(non-approximate) t-SNE."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ContractError

ProgressFn = Callable[[int, float], None]  # (iteration, kl divergence)


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray  # N x out_dim
    method: str  # "pca" | "tsne"
    diagnostics: dict


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    seed: int = 0

    def validate(self, n: int) -> None:
        if self.iterations < 250:
            raise ContractError("iterations must be >= 250")
        if not 1.0 < self.perplexity <= max((n - 1) / 3.0, 1.0 + 1e-12):
            raise ContractError(f"perplexity {self.perplexity} invalid for N={n}")


def pca(X: np.ndarray, out_dim: int = 3) -> Embedding:
    """Project column-centered X onto the top out_dim covariance eigenvectors.

    Sign convention: each component's largest-magnitude entry is positive,
    so layouts are reproducible across runs.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2 or d < out_dim:
        raise ContractError("pca needs N >= 2 and d >= out_dim")
    if not np.all(np.isfinite(X)):
        raise ContractError("pca input must be finite")
    Xc = X - X.mean(axis=0)
    cov = (Xc.T @ Xc) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    comps = eigvecs[:, order[:out_dim]]
    # deterministic sign: flip so the largest-|.| entry of each component is positive
    pivot = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[pivot, np.arange(comps.shape[1])])
    signs[signs == 0] = 1.0
    comps = comps * signs
    coords = Xc @ comps
    return Embedding(
        coords=coords,
        method="pca",
        diagnostics={
            "explained_variance": eigvals[:out_dim].tolist(),
            "total_variance": float(eigvals.sum()),
            "components": comps,
        },
    )


def calibrate_sigma(distances_sq: np.ndarray, perplexity: float,
                    tol: float = 1e-5, max_steps: int = 50) -> tuple[np.ndarray, float]:
    """Binary-search the Gaussian bandwidth for one point so the conditional
    neighbor distribution hits the target perplexity (2^entropy) within tol.

    Takes squared distances to the other N-1 points; returns (conditional
    probabilities, sigma). Unattainable targets clamp to the nearest
    attainable value (reported via the achieved perplexity of the result).
    """
    d2 = np.asarray(distances_sq, dtype=float)
    if not np.any(d2 > 0):
        raise ContractError("calibrate_sigma needs at least one positive distance")
    target_h = math.log2(perplexity)
    beta_lo, beta_hi = 0.0, math.inf
    beta = 1.0

    def entropy_and_p(beta: float) -> tuple[float, np.ndarray]:
        logits = -beta * (d2 - d2.min())
        p = np.exp(logits)
        s = p.sum()
        p = p / s
        nz = p[p > 0]
        h = float(-(nz * np.log2(nz)).sum())
        return h, p

    h, p = entropy_and_p(beta)
    for _ in range(max_steps):
        if abs(2.0 ** h - perplexity) <= tol:
            break
        if h > target_h:  # too flat -> narrow the kernel
            beta_lo = beta
            beta = beta * 2.0 if beta_hi is math.inf else (beta + beta_hi) / 2.0
        else:
            beta_hi = beta
            beta = (beta_lo + beta) / 2.0
        h, p = entropy_and_p(beta)
    sigma = math.sqrt(1.0 / (2.0 * beta)) if beta > 0 else math.inf
    return p, sigma


def _joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetric joint P matrix from conditional Gaussians with per-point
    calibrated bandwidths. Duplicate rows (zero distance) are treated as
    lying at the smallest positive distance x 1e-3."""
    n = X.shape[0]
    d2 = np.square(X[:, None, :] - X[None, :, :]).sum(axis=2)
    off = d2[~np.eye(n, dtype=bool)]
    pos = off[off > 0]
    if pos.size:
        floor = (math.sqrt(pos.min()) * 1e-3) ** 2
        d2 = np.where(d2 <= 0, floor, d2)
    cond = np.zeros((n, n))
    for i in range(n):
        row = np.delete(d2[i], i)
        if not np.any(row > 0):  # all rows identical: uniform conditionals
            p = np.full(n - 1, 1.0 / (n - 1))
        else:
            p, _ = calibrate_sigma(row, perplexity)
        cond[i, np.arange(n) != i] = p
    P = (cond + cond.T) / (2.0 * n)
    return np.maximum(P, 1e-12)


def kl_and_gradient(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q) and its analytic gradient for the Student-t low-dimensional
    similarities of standard t-SNE."""
    n = Y.shape[0]
    diff = Y[:, None, :] - Y[None, :, :]
    dist2 = np.square(diff).sum(axis=2)
    num = 1.0 / (1.0 + dist2)
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-12)
    kl = float(np.sum(P * np.log(P / Q)))
    PQ = (P - Q) * num
    grad = 4.0 * np.einsum("ij,ijk->ik", PQ, diff)
    return kl, grad


def tsne(X: np.ndarray, cfg: TsneConfig = TsneConfig(), out_dim: int = 3,
         progress: Optional[ProgressFn] = None) -> Embedding:
    """Exact symmetric-SNE gradient descent in `out_dim` dimensions.

    Deterministic given cfg.seed; diagnostics carry the KL divergence trace
    (always measured against the unexaggerated P).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 4:
        raise ContractError("tsne needs N >= 4")
    cfg.validate(n)
    P = _joint_probabilities(X, cfg.perplexity)
    rng = np.random.default_rng(cfg.seed)
    Y = rng.normal(scale=1e-4, size=(n, out_dim))
    velocity = np.zeros_like(Y)
    kl_trace: list[float] = []
    for it in range(cfg.iterations):
        exaggerating = it < cfg.exaggeration_iters
        P_eff = P * cfg.early_exaggeration if exaggerating else P
        if exaggerating:
            P_eff = P_eff / P_eff.sum()
        diff = Y[:, None, :] - Y[None, :, :]
        dist2 = np.square(diff).sum(axis=2)
        num = 1.0 / (1.0 + dist2)
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        grad = 4.0 * np.einsum("ij,ijk->ik", (P_eff - Q) * num, diff)
        kl = float(np.sum(P * np.log(P / Q)))
        kl_trace.append(kl)
        momentum = cfg.momentum_early if it < cfg.exaggeration_iters else cfg.momentum_late
        velocity = momentum * velocity - cfg.learning_rate * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if not np.all(np.isfinite(Y)):
            raise ContractError(f"tsne diverged at iteration {it}")
        if progress is not None and (it % 25 == 0 or it == cfg.iterations - 1):
            progress(it, kl)
    final_kl, _ = kl_and_gradient(P, Y)
    kl_trace.append(final_kl)
    return Embedding(
        coords=Y,
        method="tsne",
        diagnostics={"kl_divergence": final_kl, "kl_trace": kl_trace},
    )
