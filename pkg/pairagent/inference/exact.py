"""
Exact inference by enumeration.

Reference oracle for the variational engine: the full joint over latent
variables is built as one log-probability tensor (one axis per latent), so the
exact posterior, its marginals and -ln P(evidence) come out directly.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, xlogy

from ..errors import InferenceSizeError, ModelMisfitError
from .problem import Belief, InferenceProblem

# Largest latent space enumerated, in binary-variable equivalents.
MAX_BINARY_EQUIVALENTS = 20


def log_joint(problem: InferenceProblem, limit: float = MAX_BINARY_EQUIVALENTS) -> np.ndarray:
    """
    ln P(latents, evidence) as a tensor with one axis per latent (topological order).

    Raises:
        InferenceSizeError: if the latent space exceeds `limit` binary equivalents
    """
    graph = problem.graph
    latent = problem.latent
    size = problem.binary_equivalents()
    if size > limit + 1e-9:
        raise InferenceSizeError(
            f"{size:.1f} binary-equivalent latents exceed the enumeration limit of {limit}",
            details={"latents": len(latent), "binary_equivalents": size},
        )

    position = {v: i for i, v in enumerate(latent)}
    logp = np.zeros([graph.arity(v) for v in latent])
    with np.errstate(divide="ignore"):
        for child in graph.variables:
            names = [*graph.parents(child), child]
            table = np.log(graph.family_table(child))
            index = tuple(
                problem.evidence[n] if n in problem.evidence else slice(None) for n in names
            )
            sub = table[index]
            free = [n for n in names if n not in problem.evidence]
            order = sorted(range(len(free)), key=lambda i: position[free[i]])
            sub = np.transpose(sub, order) if free else sub
            shape = [1] * len(latent)
            for n in free:
                shape[position[n]] = graph.arity(n)
            logp = logp + np.reshape(sub, shape)
    return logp


def exact_posterior(problem: InferenceProblem) -> Belief:
    """
    Exact marginals of every latent given the evidence.

    The returned belief carries log_evidence = ln P(evidence) and
    free_energy = -ln P(evidence), the minimum of F over all beliefs.

    Raises:
        InferenceSizeError: beyond MAX_BINARY_EQUIVALENTS latent bits
        ModelMisfitError: if the evidence has zero probability
    """
    latent = problem.latent
    logp = log_joint(problem)
    log_z = float(logsumexp(logp))
    if not np.isfinite(log_z):
        raise ModelMisfitError("Evidence has zero probability under the model")

    posterior = np.exp(logp - log_z)
    marginals: dict[str, np.ndarray] = {}
    for i, v in enumerate(latent):
        axes = tuple(j for j in range(len(latent)) if j != i)
        m = posterior.sum(axis=axes) if axes else posterior
        marginals[v] = m / m.sum()

    return Belief(
        marginals=marginals,
        free_energy=-log_z,
        sweeps=0,
        converged=True,
        evidence=dict(problem.evidence),
        log_evidence=log_z,
        trace=[-log_z],
    )


def joint_free_energy(problem: InferenceProblem, q: np.ndarray) -> float:
    """
    F for an arbitrary (not necessarily factored) distribution over the latent tensor.

    Equals -ln P(evidence) exactly at the posterior and is larger everywhere else.
    """
    logp = log_joint(problem)
    if q.shape != logp.shape:
        raise ValueError(f"q has shape {q.shape}, expected {logp.shape}")
    if np.any((q > 0) & ~np.isfinite(logp)):
        return float("inf")
    cross = np.where(q > 0, q * np.where(np.isfinite(logp), logp, 0.0), 0.0)
    return float(np.sum(xlogy(q, q)) - np.sum(cross))


__all__ = ["MAX_BINARY_EQUIVALENTS", "log_joint", "exact_posterior", "joint_free_energy"]
