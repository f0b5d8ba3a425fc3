"""Equilibrium of damaged fishnet lattices.

In the collapsed configuration the transverse motion decouples and
equilibrium reduces to a scalar discrete Laplace equation on the lattice
graph: interior nodes average their surviving neighbors, the left boundary
is held at u = 0 and the right boundary at u = 1 (unit imposed end
displacement).  Link stress is sigma = E * (u_head - u_tail) / a and the
transmitted force equals the sum of link forces across any vertical cut.

``solve`` performs a fresh sparse direct solve for an arbitrary damage
state.  The Monte Carlo engine (see ``fishnet.mc``) does not call it in its
inner loop — it maintains an incrementally updated inverse — but its results
are required to agree with ``solve`` exactly, and tests enforce that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import cross_section_links, is_connected

__all__ = [
    "DamageState",
    "LinkStressField",
    "StructuralFailure",
    "solve",
    "eta_profile",
    "far_field_decay_exponent",
]

# relative residual bound for the reduced linear system
_RESIDUAL_TOL = 1e-12


class StructuralFailure(RuntimeError):
    """Raised when the damage state no longer connects the two boundaries."""


@dataclass(frozen=True)
class DamageState:
    """A set of failed links; ``k`` is the step counter (= failure count)."""

    failed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "failed", frozenset(self.failed))

    @property
    def k(self):
        return len(self.failed)

    def with_failed(self, link):
        return DamageState(self.failed | {link})


@dataclass(frozen=True)
class LinkStressField:
    """Per-link stresses under a unit imposed boundary displacement.

    Attributes
    ----------
    sigma : ndarray
        Link stresses (failed links carry 0).
    node_u : ndarray
        Nodal displacement field, u = 0 left, u = 1 right.
    force : float
        Transmitted force F (sum of link forces across a cut).
    sigma_nominal : float
        Nominal stress F / (m * A).
    eta : ndarray
        Stress redistribution ratios sigma / sigma_nominal.
    """

    sigma: np.ndarray
    node_u: np.ndarray
    force: float
    sigma_nominal: float
    eta: np.ndarray


def solve(mesh, damage=DamageState()):
    """Solve the damaged lattice under a unit end displacement.

    Parameters
    ----------
    mesh : FishnetMesh
    damage : DamageState, optional

    Returns
    -------
    LinkStressField

    Raises
    ------
    StructuralFailure
        If the surviving links no longer connect left to right boundary.

    Notes
    -----
    Nodes in components touching neither boundary (floating fragments) are
    assigned u = 0; their links carry zero stress.  Link indexing is never
    compacted, so fields are positionally comparable across damage states.
    """
    if not is_connected(mesh, damage.failed):
        raise StructuralFailure(f"damage state with {damage.k} failures disconnects the mesh")

    g = mesh.geometry
    m, n = g.rows, g.cols
    alive = np.ones(mesh.n_links, dtype=bool)
    if damage.failed:
        alive[np.fromiter(damage.failed, dtype=np.int64, count=len(damage.failed))] = False

    u = _solve_nodal(mesh, alive)

    coef = g.modulus / g.link_length
    sigma = np.where(alive, coef * (u[mesh.link_head] - u[mesh.link_tail]), 0.0)
    # transmitted force from the last cut; balance across cuts is a tested invariant
    force = float(np.sum(sigma[cross_section_links(mesh, n - 1)]) * g.link_area)
    sigma_nominal = force / (m * g.link_area)
    eta = sigma / sigma_nominal
    return LinkStressField(sigma=sigma, node_u=u, force=force, sigma_nominal=sigma_nominal, eta=eta)


def _solve_nodal(mesh, alive):
    """Nodal field for a damage state given by the ``alive`` link mask."""
    n = mesh.geometry.cols

    # nodes reachable from either boundary through surviving links; the rest
    # are floating fragments pinned to u = 0
    reachable = _reach_from_boundaries(mesh, alive)

    u = np.zeros(mesh.n_nodes)
    u[mesh.right_boundary] = 1.0

    free = reachable & (mesh.node_j > 0) & (mesh.node_j < n)
    free_idx = np.flatnonzero(free)
    if free_idx.size == 0:
        # 1-column mesh: no free nodes at all
        return u
    pos = np.full(mesh.n_nodes, -1, dtype=np.int64)
    pos[free_idx] = np.arange(free_idx.size)

    t = mesh.link_tail[alive]
    h = mesh.link_head[alive]
    rows, cols, vals = [], [], []
    rhs = np.zeros(free_idx.size)

    ft, fh = pos[t], pos[h]
    both = (ft >= 0) & (fh >= 0)
    # off-diagonal entries for free-free links
    rows.append(ft[both])
    cols.append(fh[both])
    vals.append(np.full(both.sum(), -1.0))
    rows.append(fh[both])
    cols.append(ft[both])
    vals.append(np.full(both.sum(), -1.0))
    # diagonal: degree over surviving links (free endpoints only)
    diag = np.zeros(free_idx.size)
    np.add.at(diag, ft[ft >= 0], 1.0)
    np.add.at(diag, fh[fh >= 0], 1.0)
    rows.append(np.arange(free_idx.size))
    cols.append(np.arange(free_idx.size))
    vals.append(diag)
    # Dirichlet contributions to the right-hand side
    tail_fixed = (ft < 0) & (fh >= 0)
    np.add.at(rhs, fh[tail_fixed], u[t[tail_fixed]])
    head_fixed = (fh < 0) & (ft >= 0)
    np.add.at(rhs, ft[head_fixed], u[h[head_fixed]])

    K = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(free_idx.size, free_idx.size),
    )
    uf = spla.spsolve(K.tocsc(), rhs)

    res = np.linalg.norm(K @ uf - rhs)
    scale = max(np.linalg.norm(rhs), 1.0)
    if not np.isfinite(uf).all() or res > _RESIDUAL_TOL * scale * 1e2:
        raise RuntimeError(f"reduced system solve failed (residual {res:.3e})")

    u[free_idx] = uf
    return u


def _reach_from_boundaries(mesh, alive):
    seen = np.zeros(mesh.n_nodes, dtype=bool)
    stack = list(mesh.left_boundary) + list(mesh.right_boundary)
    seen[mesh.left_boundary] = True
    seen[mesh.right_boundary] = True
    while stack:
        v = stack.pop()
        for e in mesh.adj_links[mesh.adj_indptr[v] : mesh.adj_indptr[v + 1]]:
            if not alive[e]:
                continue
            w = mesh.other_end(e, v)
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return seen


def eta_profile(field, mesh, origin):
    """Max |eta - 1| per graph-distance shell around a failed link.

    Parameters
    ----------
    field : LinkStressField
        Solution computed with ``origin`` failed.
    mesh : FishnetMesh
    origin : int
        The failed link the shells are measured from.

    Returns
    -------
    list of (int, float)
        ``(distance, max_deviation)`` per shell, distance 1 upward.  Two
        links are adjacent when they share a node.

    Raises
    ------
    ValueError
        If ``origin`` did not fail in the given field.
    """
    if field.sigma[origin] != 0.0:
        raise ValueError("origin link must be failed in the supplied field")

    dist = np.full(mesh.n_links, -1, dtype=np.int64)
    dist[origin] = 0
    frontier = [origin]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for e in frontier:
            for v in (mesh.link_tail[e], mesh.link_head[e]):
                for e2 in mesh.adj_links[mesh.adj_indptr[v] : mesh.adj_indptr[v + 1]]:
                    if dist[e2] < 0:
                        dist[e2] = d
                        nxt.append(e2)
        frontier = nxt

    dev = np.abs(field.eta - 1.0)
    out = []
    for shell in range(1, dist.max() + 1):
        members = dist == shell
        if members.any():
            out.append((shell, float(dev[members].max())))
    return out


def far_field_decay_exponent(mesh, damage, shells=(2, 8)):
    """Power-law exponent of the far-field redistribution decay.

    Fits ``log(max |eta - 1| per shell)`` against ``log(distance)`` over the
    shell range (default 2..8) around the first failed link and returns the
    least-squares slope (negative for a decaying field).

    Requires a mesh of at least 64 x 64 links and a nonempty, roughly
    centered damage pattern.
    """
    g = mesh.geometry
    if g.rows < 64 or g.cols < 64:
        raise ValueError("far-field fit requires a mesh of at least 64 x 64 links")
    if not damage.failed:
        raise ValueError("far-field fit requires at least one failed link")

    field = solve(mesh, damage)
    origin = min(damage.failed)
    profile = eta_profile(field, mesh, origin)
    lo, hi = shells
    pts = [(d, v) for d, v in profile if lo <= d <= hi and v > 0]
    if len(pts) < 3:
        raise ValueError("not enough shells with nonzero deviation for a fit")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)
