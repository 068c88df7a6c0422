"""Concrete operators on grid functions.

Maximal functions and the weighted sharp maximal function are one
downward sweep each; paraproducts and martingale transforms are exact
level sums; the discrete Hilbert transform is the midpoint-quadrature
kernel sum with the diagonal cell excluded, so the off-support bilinear
identities hold exactly at matched quadrature nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .lattice import (
    Cube,
    DyadicTree,
    GridFunction,
    LatticeError,
    ShiftedLattice,
    box_cell_overlap_1d,
    coarsen_once,
    expand_to_cells,
    haar_difference_values,
    refine_once,
)
from .weights import Weight, level_masses_or_lebesgue


def _averages_by_level(f: GridFunction, weight: Weight | None = None) -> list[np.ndarray]:
    """Per-level arrays of weighted averages of f over every cube."""
    tree = f.tree
    masses = level_masses_or_lebesgue(tree, weight)
    if weight is None:
        sums = f.level_sums()
        return [sums[k] * tree.cell_volume / masses[k] for k in range(tree.depth + 1)]
    weighted = GridFunction(tree, f.values * weight.cell_mass / tree.cell_volume)
    sums = weighted.level_sums()
    return [sums[k] * tree.cell_volume / masses[k] for k in range(tree.depth + 1)]


def maximal(f: GridFunction, weight: Weight | None = None, scope: str = "dyadic") -> GridFunction:
    """Running supremum of |f|-averages over the cubes containing each cell."""
    tree = f.tree
    avgs = _averages_by_level(f.abs(), weight)
    run = avgs[0]
    for k in range(1, tree.depth + 1):
        run = np.maximum(refine_once(run), avgs[k])
    out = GridFunction(tree, np.array(run, dtype=float).reshape(tree.shape))
    if scope == "shifted":
        out = GridFunction(tree, np.maximum(out.values, _shifted_average_sup(f.abs(), weight)))
    elif scope != "dyadic":
        raise ValueError(f"unknown scope {scope!r}")
    return out


def _interval_masses(weight: Weight | None, tree: DyadicTree, lo: Fraction, hi: Fraction):
    """Per-cell overlap masses of a weight (or Lebesgue) on [lo, hi), d=1.

    Power weights get exact partial-cell masses from the closed form;
    cellwise-constant densities are exact by construction.
    """
    first, last, lengths = box_cell_overlap_1d(tree, lo, hi)
    if weight is None:
        return first, last, lengths, lengths
    if weight.power is not None:
        edges = tree.cell_edges()
        masses = weight.cell_mass[first:last].copy()
        for pos in (0, len(masses) - 1):  # only boundary cells can be partial
            i = first + pos
            if lengths[pos] < tree.cell_side * (1.0 - 1e-12):
                a = max(lo, Fraction(float(edges[i])))
                b = min(hi, Fraction(float(edges[i + 1])))
                masses[pos] = weight.interval_mass(a, b)
        return first, last, lengths, masses
    frac = lengths / tree.cell_side
    return first, last, lengths, weight.cell_mass[first:last] * frac


def _shifted_average_sup(f: GridFunction, weight: Weight | None) -> np.ndarray:
    """Sup of weighted averages over shifted-lattice cubes fully inside the window (d=1)."""
    tree = f.tree
    if tree.dim != 1:
        raise LatticeError("shifted scope is implemented for d=1 only")
    lattice = ShiftedLattice(tree)
    h = Fraction(tree.half_width)
    out = np.zeros(tree.shape)
    for alpha in lattice.alphas:
        for level in range(tree.depth + 1):
            for cube in lattice.cubes_overlapping_window(alpha, level):
                lo, hi = cube.axis_interval(0)
                if lo < -h or hi > h:
                    continue
                first, last, lengths, masses = _interval_masses(weight, tree, lo, hi)
                total = masses.sum()
                if total <= 0.0:
                    continue
                val = float((f.values[first:last] * masses).sum() / total)
                _max_onto_full_cells(out, first, lengths, tree.cell_side, val)
    return out


def _max_onto_full_cells(out: np.ndarray, first: int, lengths: np.ndarray, cell: float, val: float):
    full = lengths >= cell * (1.0 - 1e-12)
    if full.any():
        start = first + int(np.argmax(full))
        stop = first + len(full) - int(np.argmax(full[::-1]))
        np.maximum(out[start:stop], val, out=out[start:stop])


def oscillation_levels(b: GridFunction) -> list[np.ndarray]:
    """Per-level arrays of int_Q |b - <b>_Q| dx for every cube Q."""
    tree = b.tree
    avgs = _averages_by_level(b)
    out = []
    for k in range(tree.depth + 1):
        dev = np.abs(b.values - expand_to_cells(avgs[k], k, tree.depth))
        agg = dev
        for _ in range(tree.depth - k):
            agg = coarsen_once(agg)
        out.append(agg * tree.cell_volume)
    return out


def oscillation(b: GridFunction, cube: Cube) -> float:
    """int_Q |b - <b>_Q| dx, exact."""
    sl = cube.cell_slices()
    vals = b.values[sl]
    return float(np.abs(vals - vals.mean()).sum() * b.tree.cell_volume)


def sharp_maximal(b: GridFunction, nu: Weight, scope: str = "dyadic") -> GridFunction:
    """Weighted sharp maximal function: sup over cubes of oscillation over nu-mass.

    The oscillation in the numerator is the plain Lebesgue integral
    int_Q |b - <b>_Q| dx; only the normalization uses nu.  scope="shifted"
    adds the three shifted lattices (d=1); scope="window" further adds a
    sliding family of non-lattice intervals at four scales, a diagnostic
    for how far the lattice suprema sit from the generic-cube one.
    """
    tree = b.tree
    oscs = oscillation_levels(b)
    nu_levels = nu.level_masses()
    run = oscs[0] / nu_levels[0]
    for k in range(1, tree.depth + 1):
        run = np.maximum(refine_once(run), oscs[k] / nu_levels[k])
    out = np.array(run, dtype=float).reshape(tree.shape)
    if scope in ("shifted", "window"):
        out = np.maximum(out, _shifted_sharp_sup(b, nu))
        if scope == "window":
            out = np.maximum(out, _sliding_sharp_sup(b, nu))
    elif scope != "dyadic":
        raise ValueError(f"unknown scope {scope!r}")
    return GridFunction(tree, out)


def _sliding_sharp_sup(b: GridFunction, nu: Weight, n_scales: int = 4) -> np.ndarray:
    """Quarter-stepped sliding windows at the top n_scales scales (d=1)."""
    tree = b.tree
    if tree.dim != 1:
        raise LatticeError("window scope is one-dimensional")
    out = np.zeros(tree.shape)
    h = Fraction(tree.half_width)
    for j in range(n_scales):
        scale = Fraction(tree.root_side) / 2**j
        step = scale / 4
        offset = -h
        while offset + scale <= h:
            first, last, lengths = box_cell_overlap_1d(tree, offset, offset + scale)
            osc = _interval_oscillation(b, first, last, lengths)
            mass = nu.interval_mass(offset, offset + scale)
            _max_onto_full_cells(out, first, lengths, tree.cell_side, osc / mass)
            offset += step
    return out


def _interval_oscillation(b: GridFunction, first: int, last: int, lengths: np.ndarray) -> float:
    """int |b - mean| over an interval given exact cell overlaps (d=1)."""
    vals = b.values[first:last]
    total = lengths.sum()
    if total <= 0.0:
        return 0.0
    mean = float((vals * lengths).sum() / total)
    return float((np.abs(vals - mean) * lengths).sum())


def _shifted_sharp_sup(b: GridFunction, nu: Weight) -> np.ndarray:
    tree = b.tree
    if tree.dim != 1:
        raise LatticeError("shifted scope is implemented for d=1 only")
    lattice = ShiftedLattice(tree)
    h = Fraction(tree.half_width)
    out = np.zeros(tree.shape)
    for alpha in lattice.alphas:
        for level in range(tree.depth + 1):
            for cube in lattice.cubes_overlapping_window(alpha, level):
                lo, hi = cube.axis_interval(0)
                if lo < -h or hi > h:
                    continue
                first, last, lengths = box_cell_overlap_1d(tree, lo, hi)
                osc = _interval_oscillation(b, first, last, lengths)
                mass = nu.interval_mass(lo, hi)
                val = osc / mass
                frac = lengths / tree.cell_side
                full = frac >= 1.0 - 1e-12
                if full.any():
                    sl = slice(first + int(np.argmax(full)), last - int(np.argmax(full[::-1])))
                    np.maximum(out[sl], val, out=out[sl])
    return out


def sharp_window_values(
    b: GridFunction,
    nu: Weight,
    points: Sequence[float],
    n_left: int = 256,
) -> np.ndarray:
    """Sliding-window sharp-maximal values at sample points (d=1 diagnostic).

    For each point the sup runs over windows [a, x + cell) with a on an
    n_left-point grid across the window; this approximates the
    generic-cube supremum far better than lattice cubes do near a bump.
    """
    tree = b.tree
    if tree.dim != 1:
        raise LatticeError("window diagnostics are one-dimensional")
    h = tree.half_width
    edges = tree.cell_edges()
    out = np.zeros(len(points))
    for i, x in enumerate(points):
        right = min(h, x + tree.cell_side)
        lefts = np.linspace(-h, x, n_left, endpoint=False)
        best = 0.0
        for a in lefts:
            lo = Fraction(float(edges[int(np.searchsorted(edges, a, side="right")) - 1]))
            first, last, lengths = box_cell_overlap_1d(tree, lo, Fraction(float(right)))
            osc = _interval_oscillation(b, first, last, lengths)
            mass = nu.interval_mass(lo, Fraction(float(right)))
            if mass > 0.0:
                best = max(best, osc / mass)
        out[i] = best
    return out


# -- paraproduct family --------------------------------------------------------


def paraproduct(b: GridFunction, f: GridFunction, cubes: Iterable[Cube] | None = None) -> GridFunction:
    """Sum over cubes of (difference of b-averages) times the f-average.

    With cubes=None the sum runs over every non-leaf tree cube; passing an
    explicit collection gives the partial operator used by the domination
    experiments.  Linear in both arguments; exact finite sums.
    """
    tree = b.tree
    if f.tree != tree:
        raise LatticeError("b and f live on different trees")
    if cubes is None:
        bavg = _averages_by_level(b)
        favg = _averages_by_level(f)
        out = np.zeros(tree.shape)
        upper = expand_to_cells(bavg[0], 0, tree.depth)
        for k in range(tree.depth):
            lower = expand_to_cells(bavg[k + 1], k + 1, tree.depth)
            out += (lower - upper) * expand_to_cells(favg[k], k, tree.depth)
            upper = lower
        return GridFunction(tree, out)
    out = np.zeros(tree.shape)
    for cube in cubes:
        if cube.is_leaf():
            continue
        sl = cube.cell_slices()
        out[sl] += haar_difference_values(b, cube) * float(f.values[sl].mean())
    return GridFunction(tree, out)


def paraproduct_adjoint(b: GridFunction, g: GridFunction) -> GridFunction:
    """Adjoint of the paraproduct in the unweighted pairing: sum_Q <D_Q b, g> / |Q| on Q."""
    tree = b.tree
    bavg = _averages_by_level(b)
    gsum = g.level_sums()
    out = np.zeros(tree.shape)
    for k in range(tree.depth):
        inner = coarsen_once(bavg[k + 1] * gsum[k + 1]) - bavg[k] * gsum[k]
        inner *= tree.cell_volume / tree.volume(k)
        out += expand_to_cells(inner, k, tree.depth)
    return GridFunction(tree, out)


def martingale_transform(f: GridFunction, coeffs) -> GridFunction:
    """sum_Q v_Q D_Q f for bounded per-cube multipliers.

    `coeffs` is either a per-level stack of arrays (levels 0..depth-1 used)
    or a dict {Cube: v}.
    """
    tree = f.tree
    favg = _averages_by_level(f)
    if isinstance(coeffs, dict):
        out = np.zeros(tree.shape)
        for cube, v in coeffs.items():
            if v == 0.0 or cube.is_leaf():
                continue
            out[cube.cell_slices()] += v * haar_difference_values(f, cube)
        return GridFunction(tree, out)
    out = np.zeros(tree.shape)
    upper = expand_to_cells(favg[0], 0, tree.depth)
    for k in range(tree.depth):
        lower = expand_to_cells(favg[k + 1], k + 1, tree.depth)
        out += (lower - upper) * expand_to_cells(np.asarray(coeffs[k], dtype=float), k, tree.depth)
        upper = lower
    return GridFunction(tree, out)


def weak_level_set_bound(g: GridFunction, f_l1: float, constant: float, thresholds: np.ndarray) -> float:
    """Worst slack of |{|g| > t}| <= constant * f_l1 / t over a threshold grid.

    Returns max over t of (level-set measure - bound); <= 0 means the
    weak-type inequality holds on the grid.
    """
    vol = g.tree.cell_volume
    worst = -math.inf
    absg = np.abs(g.values)
    for t in thresholds:
        measure = float((absg > t).sum() * vol)
        worst = max(worst, measure - constant * f_l1 / t)
    return worst


# -- sparse operators ----------------------------------------------------------


def sparse_op(
    b: GridFunction, f: GridFunction, cubes: Iterable[Cube], variant: str = "plain"
) -> GridFunction:
    """The positive sparse operators built from oscillation of b.

    variant="plain":   sum_Q |b - <b>_Q| <f>_Q 1_Q
    variant="adjoint": sum_Q <|b - <b>_Q| f>_Q 1_Q
    """
    tree = b.tree
    out = np.zeros(tree.shape)
    for cube in cubes:
        sl = cube.cell_slices()
        bq = float(b.values[sl].mean())
        dev = np.abs(b.values[sl] - bq)
        if variant == "plain":
            out[sl] += dev * float(f.values[sl].mean())
        elif variant == "adjoint":
            out[sl] += float((dev * f.values[sl]).mean())
        else:
            raise ValueError(f"unknown variant {variant!r}")
    return GridFunction(tree, out)


def sparse_op_exponent(f: GridFunction, cubes: Iterable[Cube], s: float) -> GridFunction:
    """sum_Q ((1/|Q|^s) int_Q |f|^s)^(1/s) 1_Q for s in (0, 1]."""
    if not 0.0 < s <= 1.0:
        raise ValueError("exponent s must lie in (0, 1]")
    tree = f.tree
    out = np.zeros(tree.shape)
    for cube in cubes:
        sl = cube.cell_slices()
        val = (np.abs(f.values[sl]) ** s).sum() * tree.cell_volume / cube.volume**s
        out[sl] += val ** (1.0 / s)
    return GridFunction(tree, out)


# -- singular kernels, Hilbert transform, commutator (d=1) ------------------------


@dataclass(frozen=True)
class KernelSpec1D:
    """An off-diagonal kernel with midpoint quadrature, diagonal cells excluded.

    `size_constant` asserts the usual decay |K(x,y)| <= C/|x-y| when the
    matrix is built; antisymmetric kernels make the discrete bilinear
    identities exact at matched nodes.
    """

    name: str
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    size_constant: float = 1.0
    antisymmetric: bool = True


HILBERT_KERNEL = KernelSpec1D("hilbert", lambda x, y: 1.0 / (x - y))

_KERNEL_CACHE: dict[tuple[str, int, float], np.ndarray] = {}


def kernel_matrix(tree: DyadicTree, spec: KernelSpec1D = HILBERT_KERNEL) -> np.ndarray:
    """Midpoint-quadrature matrix of a kernel, with its invariants checked."""
    if tree.dim != 1:
        raise LatticeError("kernel quadrature is one-dimensional")
    key = (spec.name, tree.depth, tree.half_width)
    cached = _KERNEL_CACHE.get(key)
    if cached is not None:
        return cached
    x = tree.cell_centers()
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(spec.evaluate(x[:, None], x[None, :]), dtype=float)
    np.fill_diagonal(vals, 0.0)
    off = ~np.eye(len(x), dtype=bool)
    diff = np.abs(x[:, None] - x[None, :])
    if np.any(np.abs(vals[off]) * diff[off] > spec.size_constant * (1.0 + 1e-12)):
        raise LatticeError(f"kernel {spec.name!r} violates its declared size bound")
    if spec.antisymmetric and not np.allclose(vals, -vals.T, atol=1e-14):
        raise LatticeError(f"kernel {spec.name!r} is not antisymmetric")
    mat = vals * tree.cell_volume
    _KERNEL_CACHE.clear()  # keep at most one kernel resident
    _KERNEL_CACHE[key] = mat
    return mat


def hilbert_matrix(tree: DyadicTree) -> np.ndarray:
    return kernel_matrix(tree, HILBERT_KERNEL)


def hilbert_transform(f: GridFunction) -> GridFunction:
    return GridFunction(f.tree, hilbert_matrix(f.tree) @ f.values)


def hilbert_at(f: GridFunction, x: float) -> float:
    """Kernel sum of f at an arbitrary off-grid point (same quadrature)."""
    centers = f.tree.cell_centers()
    diff = x - centers
    mask = diff != 0.0
    return float((f.values[mask] / diff[mask]).sum() * f.tree.cell_volume)


def commutator(b: GridFunction, f: GridFunction) -> GridFunction:
    """b * Hf - H(b f) with the discrete Hilbert transform."""
    if b.tree != f.tree:
        raise LatticeError("b and f live on different trees")
    mat = hilbert_matrix(b.tree)
    return GridFunction(b.tree, b.values * (mat @ f.values) - mat @ (b.values * f.values))


def commutator_bilinear(b: GridFunction, f: GridFunction, g: GridFunction) -> float:
    """Double-sum form sum_{i != j} (b_i - b_j) K(x_i, x_j) f_j g_i vol^2.

    Identical quadrature to `commutator`, so the two agree exactly, with
    or without support separation.
    """
    mat = hilbert_matrix(b.tree)
    weighted = mat * (b.values[:, None] - b.values[None, :])
    return float(g.values @ (weighted @ f.values) * b.tree.cell_volume)


def commutator_test_pairs(b: GridFunction, cube: Cube):
    """Median-split test pairs for the Hilbert commutator at one cube (d=1).

    The partner cube sits two side lengths away (flipped near the window
    edge), and each pair splits its cube at the median of b so the kernel
    sign cannot cancel the oscillation wholesale.  Returns the pairs plus
    the measured ratio of the oscillation to the bilinear forms; the
    domination constant is an observation, not an asserted bound.
    """
    tree = b.tree
    if tree.dim != 1:
        raise LatticeError("commutator test pairs are one-dimensional")
    span = 2 ** (tree.depth - cube.level)
    start = cube.index[0] * span
    offset = 2 * span
    if start + offset + span <= tree.shape[0]:
        t_start = start + offset
    elif start - offset >= 0:
        t_start = start - offset
    else:
        raise LatticeError("no room for a separated partner cube in the window")
    q_cells = slice(start, start + span)
    t_cells = slice(t_start, t_start + span)

    med_q = float(np.median(b.values[q_cells]))
    med_t = float(np.median(b.values[t_cells]))
    pairs = []
    for f_side, g_side in ((1.0, -1.0), (-1.0, 1.0)):
        f_vals = np.zeros(tree.shape)
        g_vals = np.zeros(tree.shape)
        f_sel = (b.values[q_cells] - med_q) * f_side >= 0.0
        g_sel = (b.values[t_cells] - med_t) * g_side > 0.0
        f_vals[q_cells] = np.where(f_sel, 1.0, 0.0)
        g_vals[t_cells] = np.where(g_sel, 1.0, 0.0)
        if not g_vals.any():
            g_vals[t_cells] = 1.0  # constant partner side: any test function works
        pairs.append((GridFunction(tree, f_vals), GridFunction(tree, g_vals)))

    osc = oscillation(b, cube)
    forms = [abs(commutator_bilinear(b, f, g)) for f, g in pairs]
    total = sum(forms)
    measured = osc / total if total > 0.0 else math.inf
    corner = (-tree.half_width + t_start * tree.cell_side,)
    partner = {"corner": corner, "side": cube.side}
    return pairs, partner, measured


# -- operator handles (for norm estimation) -------------------------------------


@dataclass
class OperatorHandle:
    """A linear operator on cell arrays with its unweighted-pairing adjoint."""

    name: str
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]


def identity_handle(tree: DyadicTree) -> OperatorHandle:
    return OperatorHandle("identity", lambda v: v, lambda v: v)


def multiplication_handle(b: GridFunction) -> OperatorHandle:
    vals = b.values
    return OperatorHandle("multiply", lambda v: vals * v, lambda v: vals * v)


def paraproduct_handle(b: GridFunction) -> OperatorHandle:
    tree = b.tree

    def apply(v):
        return paraproduct(b, GridFunction(tree, v)).values

    def adjoint(v):
        return paraproduct_adjoint(b, GridFunction(tree, v)).values

    return OperatorHandle("paraproduct", apply, adjoint)


def commutator_handle(b: GridFunction) -> OperatorHandle:
    tree = b.tree

    def apply(v):
        return commutator(b, GridFunction(tree, v)).values

    def adjoint(v):
        return -commutator(b, GridFunction(tree, v)).values

    return OperatorHandle("hilbert-commutator", apply, adjoint)


def zero_handle(tree: DyadicTree) -> OperatorHandle:
    return OperatorHandle("zero", lambda v: np.zeros_like(v), lambda v: np.zeros_like(v))
