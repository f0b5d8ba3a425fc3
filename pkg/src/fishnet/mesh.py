"""Fishnet lattice construction.

The collapsed configuration of a diagonally pulled net is modeled as a
checkerboard diamond lattice: nodes sit at integer pairs ``(i, j)`` with
``i in [0, m]``, ``j in [0, n]`` and ``i + j`` even; links join ``(i, j)``
to ``(i±1, j+1)`` whenever both endpoints exist.  This convention gives

* exactly ``N = m*n`` links,
* exactly ``m`` links across every vertical cut (one per row),
* four-link equilibrium at interior nodes, degree <= 2 on the free edges,
* the 1 x n chain and m x 1 equal-load-sharing bundle as degenerate cases.

Link ids are assigned ``id = gap*m + row`` where ``gap`` is the cut index
(between node columns ``gap`` and ``gap+1``) and ``row`` is the transverse
row in ``[0, m)``; cross-sections are therefore contiguous id ranges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FishnetGeometry",
    "FishnetMesh",
    "build_mesh",
    "cross_section_links",
    "is_connected",
    "mesh_to_json",
]


@dataclass(frozen=True)
class FishnetGeometry:
    """Size and elastic parameters of a fishnet.

    Parameters
    ----------
    rows : int
        Links per transverse cross-section (m).
    cols : int
        Number of cross-section positions (n); total links N = m*n.
    link_length : float, optional
        Reference link length a.
    link_area : float, optional
        Link cross-section area A.
    modulus : float, optional
        Link elastic modulus E.
    """

    rows: int
    cols: int
    link_length: float = 1.0
    link_area: float = 1.0
    modulus: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("mesh requires rows >= 1 and cols >= 1")
        if self.link_length <= 0 or self.link_area <= 0 or self.modulus <= 0:
            raise ValueError("link_length, link_area and modulus must be positive")

    @property
    def n_links(self):
        return self.rows * self.cols


class FishnetMesh:
    """Immutable fishnet lattice graph.

    Built by :func:`build_mesh`; do not mutate the arrays.  Attributes:

    Attributes
    ----------
    geometry : FishnetGeometry
    node_i, node_j : ndarray of int
        Lattice coordinates per node (nodes ordered by column j, then row i).
    node_x, node_y : ndarray of float
        Original-configuration positions (links at +-45 degrees), for
        visualization only.
    link_tail, link_head : ndarray of int
        Node indices per link; tails in column ``gap``, heads in ``gap+1``.
    link_row, link_gap : ndarray of int
        Transverse row in [0, m) and cut index in [0, n) per link.
    left_boundary, right_boundary : ndarray of int
        Node indices with j = 0 and j = n.
    adj_indptr, adj_links : ndarray of int
        CSR adjacency: links incident to node v are
        ``adj_links[adj_indptr[v]:adj_indptr[v+1]]``.
    """

    def __init__(self, geometry, node_i, node_j, link_tail, link_head, link_row):
        m, n = geometry.rows, geometry.cols
        self.geometry = geometry
        self.node_i = node_i
        self.node_j = node_j
        scale = geometry.link_length / math.sqrt(2.0)
        self.node_x = node_j * scale
        self.node_y = node_i * scale
        self.link_tail = link_tail
        self.link_head = link_head
        self.link_row = link_row
        self.link_gap = np.arange(link_tail.size) // m
        self.left_boundary = np.flatnonzero(node_j == 0)
        self.right_boundary = np.flatnonzero(node_j == n)

        # CSR node -> incident links
        counts = np.zeros(node_i.size, dtype=np.int64)
        np.add.at(counts, link_tail, 1)
        np.add.at(counts, link_head, 1)
        indptr = np.zeros(node_i.size + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        adj = np.empty(2 * link_tail.size, dtype=np.int64)
        cursor = indptr[:-1].copy()
        for e in range(link_tail.size):
            a, b = link_tail[e], link_head[e]
            adj[cursor[a]] = e
            cursor[a] += 1
            adj[cursor[b]] = e
            cursor[b] += 1
        self.adj_indptr = indptr
        self.adj_links = adj

    @property
    def n_nodes(self):
        return self.node_i.size

    @property
    def n_links(self):
        return self.link_tail.size

    def node_index(self, i, j):
        """Index of lattice node (i, j), or -1 if absent."""
        return self._node_lookup.get((i, j), -1)

    def degree(self, v):
        return int(self.adj_indptr[v + 1] - self.adj_indptr[v])

    def other_end(self, link, v):
        """The endpoint of ``link`` that is not node ``v``."""
        t = self.link_tail[link]
        return self.link_head[link] if t == v else t


def build_mesh(geometry):
    """Construct the checkerboard fishnet lattice for a geometry.

    Parameters
    ----------
    geometry : FishnetGeometry

    Returns
    -------
    FishnetMesh

    Examples
    --------
    >>> mesh = build_mesh(FishnetGeometry(rows=2, cols=3))
    >>> mesh.n_links, mesh.n_nodes
    (6, 6)
    """
    m, n = geometry.rows, geometry.cols
    lookup = {}
    ii, jj = [], []
    for j in range(n + 1):
        for i in range(m + 1):
            if (i + j) % 2 == 0:
                lookup[(i, j)] = len(ii)
                ii.append(i)
                jj.append(j)
    node_i = np.array(ii, dtype=np.int64)
    node_j = np.array(jj, dtype=np.int64)

    tails = np.empty(m * n, dtype=np.int64)
    heads = np.empty(m * n, dtype=np.int64)
    rows = np.empty(m * n, dtype=np.int64)
    for gap in range(n):
        for row in range(m):
            if (row + gap) % 2 == 0:
                t, h = (row, gap), (row + 1, gap + 1)
            else:
                t, h = (row + 1, gap), (row, gap + 1)
            e = gap * m + row
            tails[e] = lookup[t]
            heads[e] = lookup[h]
            rows[e] = row

    mesh = FishnetMesh(geometry, node_i, node_j, tails, heads, rows)
    mesh._node_lookup = lookup
    return mesh


def cross_section_links(mesh, gap):
    """Ids of the m links crossing the cut between node columns gap and gap+1.

    Parameters
    ----------
    mesh : FishnetMesh
    gap : int
        Cut index, ``0 <= gap < cols``.

    Returns
    -------
    ndarray of int
        The ``rows`` link ids in the cut, ascending.
    """
    m, n = mesh.geometry.rows, mesh.geometry.cols
    if not 0 <= gap < n:
        raise ValueError(f"gap must lie in [0, {n}), got {gap}")
    return np.arange(gap * m, (gap + 1) * m, dtype=np.int64)


def is_connected(mesh, failed=()):
    """True iff surviving links join the left boundary to the right.

    Parameters
    ----------
    mesh : FishnetMesh
    failed : iterable of int, optional
        Ids of failed (removed) links.

    Returns
    -------
    bool
    """
    failed_mask = np.zeros(mesh.n_links, dtype=bool)
    failed_idx = np.fromiter(failed, dtype=np.int64, count=-1) if not isinstance(failed, np.ndarray) else failed
    if len(failed_idx):
        failed_mask[failed_idx] = True

    seen = np.zeros(mesh.n_nodes, dtype=bool)
    stack = list(mesh.left_boundary)
    seen[mesh.left_boundary] = True
    target = np.zeros(mesh.n_nodes, dtype=bool)
    target[mesh.right_boundary] = True
    while stack:
        v = stack.pop()
        if target[v]:
            return True
        for e in mesh.adj_links[mesh.adj_indptr[v] : mesh.adj_indptr[v + 1]]:
            if failed_mask[e]:
                continue
            w = mesh.other_end(e, v)
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return False


def mesh_to_json(mesh, indent=None):
    """Serialize a mesh to JSON (node positions + link endpoints)."""
    doc = {
        "rows": mesh.geometry.rows,
        "cols": mesh.geometry.cols,
        "link_length": mesh.geometry.link_length,
        "link_area": mesh.geometry.link_area,
        "modulus": mesh.geometry.modulus,
        "nodes": [
            {"i": int(i), "j": int(j), "x": float(x), "y": float(y)}
            for i, j, x, y in zip(mesh.node_i, mesh.node_j, mesh.node_x, mesh.node_y)
        ],
        "links": [
            {"id": e, "tail": int(mesh.link_tail[e]), "head": int(mesh.link_head[e]), "row": int(mesh.link_row[e])}
            for e in range(mesh.n_links)
        ],
    }
    return json.dumps(doc, indent=indent)
