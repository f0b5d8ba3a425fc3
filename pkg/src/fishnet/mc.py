"""Sequential element-deletion Monte Carlo.

Each sample draws i.i.d. link strengths, then repeatedly: solves the lattice
under a unit end displacement, scales the load to the first link failure
(load multiplier ``lambda = min s_j / sigma_j`` over positively stressed
surviving links), records the event, and deletes the critical link.  The
sample ends when the transmitted force vanishes, i.e. the boundaries are no
longer connected through surviving links.

The inner loop never re-factorizes the stiffness matrix.  The pristine
reduced inverse ``G0`` is computed once per mesh (dense; meshes of interest
have a few thousand free nodes at most) and each deletion appends one column
to a Woodbury low-rank correction: removing link ``e`` with incidence vector
``d`` turns ``K0 - D D^T`` into the running operator, whose inverse needs
only the capacitance matrix ``C = I - D^T G0 D``.  ``C``'s inverse is grown
in place by Schur-complement appends, O(k^2) per event plus one O(n*k)
matrix-vector product for the displacement field.  A vanishing Schur pivot
means the deletion spalled off a floating fragment (the operator went
singular); the sample then falls back to exact sparse re-solves, which also
pin fragments to u = 0 exactly like :func:`fishnet.solver.solve`.

Samples are embarrassingly parallel.  Sample ``i`` draws from a Philox
stream keyed by ``SeedSequence(master_seed, spawn_key=(i,))``, so results
are identical no matter how samples are chunked across workers.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mesh import build_mesh, cross_section_links
from .solver import _solve_nodal

__all__ = [
    "SampleRecord",
    "RunConfig",
    "simulate_one",
    "run_batch",
    "count_prepeak_failures",
]

# termination: transmitted force below this fraction of the pristine force
# means the boundaries are disconnected (any surviving path would conduct at
# least ~1/N of a link's share, many orders above this)
_FORCE_TOL = 1e-9

# Schur pivot below this flags a floating fragment; legitimate near-singular
# states (e.g. one of two remaining parallel bridges) stay above ~1e-4
_PIVOT_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """Outcome of one Monte Carlo sample.

    Attributes
    ----------
    peak_stress : float
        Peak nominal stress over the event curve.
    r_p : int
        Number of link failures strictly before the peak-load event; if
        several events tie at the peak, the first one is the peak.
    total_failures : int
        Deletion events until disconnection (the terminal event included).
    event_curve : ndarray or None
        ``(total_failures, 2)`` array of (displacement ``lambda^(k)``,
        nominal stress); None when curve recording is off.
    sample_seed : int
        64-bit digest of (master_seed, sample index) identifying the
        sample's random stream.
    """

    peak_stress: float
    r_p: int
    total_failures: int
    event_curve: Optional[np.ndarray]
    sample_seed: int


@dataclass(frozen=True)
class RunConfig:
    """Batch description for :func:`run_batch`.

    ``samples_path`` and ``curves_dir`` are optional output locations for
    the summary CSV and the per-sample event curves; curves are only
    written (or kept in memory) when ``record_curves`` is set.
    """

    geometry: object
    dist: object
    sample_count: int
    master_seed: int
    record_curves: bool = False
    samples_path: Optional[str] = None
    curves_dir: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


class _EngineStatics:
    """Per-mesh precomputation shared by all samples (read-only)."""

    def __init__(self, mesh):
        g = mesh.geometry
        n = g.cols
        self.mesh = mesh
        self.m = g.rows
        self.area = g.link_area
        self.coef = g.modulus / g.link_length
        self.head = mesh.link_head
        self.tail = mesh.link_tail
        self.cut = cross_section_links(mesh, n - 1)

        free = (mesh.node_j > 0) & (mesh.node_j < n)
        self.free_idx = np.flatnonzero(free)
        pos = np.full(mesh.n_nodes, -1, dtype=np.int64)
        pos[self.free_idx] = np.arange(self.free_idx.size)
        self.pos = pos
        nf = self.free_idx.size

        self.u_template = np.zeros(mesh.n_nodes)
        self.u_template[mesh.right_boundary] = 1.0
        # fixed-node potentials, for RHS bookkeeping when a boundary link dies
        self.u_fixed = self.u_template.copy()

        ft, fh = pos[self.tail], pos[self.head]
        if nf:
            # unit-conductance reduced Laplacian, same assembly as the solver
            K0 = np.zeros((nf, nf))
            both = (ft >= 0) & (fh >= 0)
            np.add.at(K0, (ft[both], fh[both]), -1.0)
            np.add.at(K0, (fh[both], ft[both]), -1.0)
            diag = np.zeros(nf)
            np.add.at(diag, ft[ft >= 0], 1.0)
            np.add.at(diag, fh[fh >= 0], 1.0)
            K0[np.arange(nf), np.arange(nf)] = diag

            f0 = np.zeros(nf)
            tail_fixed = (ft < 0) & (fh >= 0)
            np.add.at(f0, fh[tail_fixed], self.u_fixed[self.tail[tail_fixed]])
            head_fixed = (fh < 0) & (ft >= 0)
            np.add.at(f0, ft[head_fixed], self.u_fixed[self.head[head_fixed]])

            self.G0 = np.linalg.inv(K0)
            self.f0 = f0
            self.y0 = self.G0 @ f0
        else:
            # single-column mesh: every node is a boundary node
            self.G0 = np.zeros((0, 0))
            self.f0 = np.zeros(0)
            self.y0 = np.zeros(0)

        # a 1-row mesh is a series chain: every link carries coef/n exactly,
        # and the first deletion disconnects it, so only the pristine state
        # is ever evaluated -- use the analytic value to keep the
        # weakest-link identity bit-exact
        self.chain_sigma = self.coef / n if g.rows == 1 else None

        u0 = self.u_template.copy()
        u0[self.free_idx] = self.y0
        sigma0 = self.coef * (u0[self.head] - u0[self.tail])
        self.force0 = float(sigma0[self.cut].sum() * self.area)
        if self.chain_sigma is not None:
            self.force0 = self.chain_sigma * self.area


def _statics_for(mesh):
    st = getattr(mesh, "_mc_statics", None)
    if st is None:
        st = _EngineStatics(mesh)
        mesh._mc_statics = st
    return st


def simulate_one(mesh, strengths, sample_seed=0, record_curve=True):
    """Run the deletion loop for one strength realization.

    Parameters
    ----------
    mesh : FishnetMesh
    strengths : array_like
        One positive strength per link, in stress units.
    sample_seed : int, optional
        Recorded verbatim in the result.
    record_curve : bool, optional
        Keep the per-event curve in the record (cheap, but adds up over
        very large batches).

    Returns
    -------
    SampleRecord

    Raises
    ------
    ValueError
        On a strength vector of wrong length or with non-positive entries.
    """
    s = np.asarray(strengths, dtype=float)
    if s.shape != (mesh.n_links,):
        raise ValueError(f"expected {mesh.n_links} strengths, got shape {s.shape}")
    if not np.all(s > 0.0):
        raise ValueError("link strengths must be positive")

    st = _statics_for(mesh)
    n_links = mesh.n_links
    nf = st.free_idx.size

    alive = np.ones(n_links, dtype=bool)
    y = st.y0.copy()
    f = st.f0.copy()
    cap = 16
    W = np.empty((nf, cap))
    Cinv = np.zeros((cap, cap))
    tvec = np.empty(cap)
    dpos = np.empty((cap, 2), dtype=np.int64)
    k = 0
    fallback = False

    u_full = st.u_template.copy()
    lam_events = []
    sig_events = []

    for _ in range(n_links + 1):
        if st.chain_sigma is not None:
            # a chain transmits nothing once any link is gone
            sigma = np.where(alive, st.chain_sigma, 0.0) if alive.all() \
                else np.zeros(n_links)
        else:
            if fallback:
                u_full = _solve_nodal(mesh, alive)
            else:
                if k:
                    u_free = y + W[:, :k] @ (Cinv[:k, :k] @ tvec[:k])
                else:
                    u_free = y
                u_full[st.free_idx] = u_free
            sigma = st.coef * (u_full[st.head] - u_full[st.tail])
            sigma[~alive] = 0.0
        force = float(sigma[st.cut].sum() * st.area)
        if force <= st.force0 * _FORCE_TOL:
            break  # boundaries disconnected

        ratios = np.full(n_links, np.inf)
        loaded = sigma > 0.0
        ratios[loaded] = s[loaded] / sigma[loaded]
        j = int(np.argmin(ratios))  # ties -> lowest link id
        lam = float(ratios[j])
        if not np.isfinite(lam):
            raise RuntimeError("connected state with no positively stressed link")
        lam_events.append(lam)
        # s_j * (sigma_nominal / sigma_j), algebraically lam * sigma_nominal;
        # this form makes the weakest-link identity bit-exact on chains
        sig_events.append(s[j] * (force / (st.m * st.area) / sigma[j]))

        alive[j] = False
        if fallback:
            continue

        # Woodbury append for the deleted link
        pt, ph = st.pos[st.tail[j]], st.pos[st.head[j]]
        if pt < 0 and ph < 0:
            continue  # both endpoints fixed (1-column mesh); K untouched
        if pt >= 0 and ph >= 0:
            w = st.G0[:, pt] - st.G0[:, ph]
        elif pt >= 0:
            w = st.G0[:, pt].copy()
        else:
            w = -st.G0[:, ph]
        dtw = (w[pt] if pt >= 0 else 0.0) - (w[ph] if ph >= 0 else 0.0)
        c_nn = 1.0 - dtw
        if k:
            w_ext = np.append(w, 0.0)  # position -1 reads the padded zero
            c_off = -(w_ext[dpos[:k, 0]] - w_ext[dpos[:k, 1]])
            q = Cinv[:k, :k] @ c_off
            spiv = c_nn - float(c_off @ q)
        else:
            c_off = q = None
            spiv = c_nn
        if spiv < _PIVOT_TOL:
            # deletion spalled off a floating fragment -> exact solves
            fallback = True
            continue

        if k == cap:
            cap *= 2
            W = np.concatenate([W, np.empty_like(W)], axis=1)
            C2 = np.zeros((cap, cap))
            C2[:k, :k] = Cinv[:k, :k]
            Cinv = C2
            tvec = np.concatenate([tvec, np.empty_like(tvec)])
            dpos = np.concatenate([dpos, np.empty_like(dpos)])

        if k:
            Cinv[:k, :k] += np.outer(q, q) / spiv
            Cinv[:k, k] = Cinv[k, :k] = -q / spiv
        Cinv[k, k] = 1.0 / spiv
        W[:, k] = w
        dpos[k, 0], dpos[k, 1] = pt, ph
        tvec[k] = w @ f
        k += 1

        # a dead boundary link also removes its Dirichlet load
        if pt < 0 and st.u_fixed[st.tail[j]] != 0.0:
            delta, p = -st.u_fixed[st.tail[j]], ph
        elif ph < 0 and st.u_fixed[st.head[j]] != 0.0:
            delta, p = -st.u_fixed[st.head[j]], pt
        else:
            delta = 0.0
        if delta:
            f[p] += delta
            y += delta * st.G0[:, p]
            tvec[:k] += delta * W[p, :k]
    else:
        raise RuntimeError("deletion loop failed to terminate")

    sig_arr = np.asarray(sig_events)
    peak = int(np.argmax(sig_arr))  # ties -> first event is the peak
    curve = np.column_stack([lam_events, sig_events]) if record_curve else None
    return SampleRecord(
        peak_stress=float(sig_arr[peak]),
        r_p=peak,
        total_failures=len(sig_events),
        event_curve=curve,
        sample_seed=sample_seed,
    )


def _run_range(config, start, stop):
    """Simulate samples [start, stop); each owns an independent stream."""
    mesh = build_mesh(config.geometry)
    out = []
    for i in range(start, stop):
        ss = np.random.SeedSequence(config.master_seed, spawn_key=(i,))
        seed64 = int(ss.generate_state(1, np.uint64)[0])
        rng = np.random.Generator(np.random.Philox(ss))
        strengths = config.dist.sample(rng, mesh.n_links)
        out.append(
            simulate_one(mesh, strengths, sample_seed=seed64,
                         record_curve=config.record_curves)
        )
    return out


def run_batch(config):
    """Run a Monte Carlo batch, optionally writing CSV outputs.

    Returns the records sorted by sample index.  The result (and any file
    written) is byte-identical for a given config regardless of
    ``threads``: sample streams depend only on (master_seed, index).
    """
    count = config.sample_count
    if config.threads == 1 or count == 1:
        records = _run_range(config, 0, count)
    else:
        # contiguous chunks, a few per worker for balance
        n_chunks = min(count, config.threads * 4)
        bounds = np.linspace(0, count, n_chunks + 1).astype(int)
        with ProcessPoolExecutor(max_workers=config.threads) as ex:
            futures = [
                ex.submit(_run_range, config, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            records = [rec for fut in futures for rec in fut.result()]

    if config.samples_path:
        _write_samples_csv(config.samples_path, records)
    if config.record_curves and config.curves_dir:
        _write_curves(config.curves_dir, records)
    return records


def _write_samples_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "peak_stress", "r_p", "total_failures"])
        for i, rec in enumerate(records):
            writer.writerow([i, repr(rec.peak_stress), rec.r_p, rec.total_failures])


def _write_curves(dirpath, records):
    os.makedirs(dirpath, exist_ok=True)
    for i, rec in enumerate(records):
        with open(os.path.join(dirpath, f"{i}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "displacement", "nominal_stress"])
            for kk, (disp, sig) in enumerate(rec.event_curve):
                writer.writerow([kk, repr(float(disp)), repr(float(sig))])


def count_prepeak_failures(records):
    """Mean number of failures strictly before the peak, mu_p.

    Raises
    ------
    ValueError
        On an empty record list.
    """
    if not records:
        raise ValueError("no records")
    return float(np.mean([rec.r_p for rec in records]))
