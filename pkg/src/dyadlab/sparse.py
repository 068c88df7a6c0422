"""Sparse families and the stopping-time domination of paraproducts.

A sparse family pairs each member cube with a witness set: a disjoint
region of at least a gamma fraction of the cube's mass.  Witnesses are
stored as claims on finest cells; a claim is the whole cell or one of its
two halves along axis 0 (halves arise only when a finest-level stopping
cube must share its single cell with its parent's witness).

The constructor `paraproduct_sparse_dominate` runs the two coupled
stopping conditions exactly: the average-growth test on |f|, and the
existential partial-sum test, whose supremum over sub-collections of an
upward chain is computable in closed form as the larger of the summed
positive parts and summed negative parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .lattice import Cube, DyadicTree, GridFunction, LatticeError
from .operators import _averages_by_level
from .weights import Weight, carleson_norm, coeff_stack

FULL, LO_HALF, HI_HALF = "full", "lo", "hi"

_CLAIM_FRACTION = {FULL: 1.0, LO_HALF: 0.5, HI_HALF: 0.5}


class StoppingMassError(AssertionError):
    """The per-node stopping-mass bound (half the parent cube) was violated."""


@dataclass
class SparseFamily:
    """A set of tree cubes with disjoint witness claims and a sparseness constant."""

    tree: DyadicTree
    cubes: list[Cube]
    witnesses: dict[Cube, dict[int, str]]
    gamma: float
    measure: Weight | None = None  # None = Lebesgue
    stopping_mass_max: float = 0.0  # observed max of (stopping mass)/(node mass)

    def witness_mass(self, cube: Cube) -> float:
        """Mass of a cube's witness under the family's measure tag."""
        return _claims_mass(self.tree, self.witnesses.get(cube, {}), self.measure)

    def cube_mass(self, cube: Cube) -> float:
        if self.measure is None:
            return cube.volume
        return self.measure.mass(cube)

    def indicator_stack(self) -> list[np.ndarray]:
        return coeff_stack(self.tree, {q: 1.0 for q in self.cubes})


def _claims_mass(tree: DyadicTree, claims: dict[int, str], measure: Weight | None) -> float:
    if not claims:
        return 0.0
    total = 0.0
    if measure is None:
        for kind in claims.values():
            total += _CLAIM_FRACTION[kind] * tree.cell_volume
        return total
    flat_mass = measure.cell_mass.ravel()
    for cell, kind in claims.items():
        if kind == FULL:
            total += flat_mass[cell]
        elif measure.power is not None and tree.dim == 1:
            edges = tree.cell_edges()
            mid = (edges[cell] + edges[cell + 1]) / 2.0
            lo, hi = (edges[cell], mid) if kind == LO_HALF else (mid, edges[cell + 1])
            total += measure.interval_mass(lo, hi)
        else:
            total += 0.5 * flat_mass[cell]
    return total


def verify_sparse(family: SparseFamily, gamma: float | None = None,
                  measure: Weight | None = None) -> tuple[bool, float]:
    """Check witness containment, disjointness, and the mass ratio.

    Returns (ok, worst_ratio) where worst_ratio is the minimum over cubes
    of witness mass over cube mass.  `gamma`/`measure` default to the
    family's own tags.
    """
    gamma = family.gamma if gamma is None else gamma
    measure = family.measure if measure is None else measure
    tree = family.tree
    seen: dict[int, list[str]] = {}
    worst = math.inf
    ok = True
    for cube in family.cubes:
        claims = family.witnesses.get(cube, {})
        inside = set(int(i) for i in cube.flat_cells())
        for cell, kind in claims.items():
            if cell not in inside:
                return False, 0.0
            kinds = seen.setdefault(cell, [])
            if FULL in kinds or kind == FULL and kinds or kind in kinds:
                ok = False
            kinds.append(kind)
        mass = _claims_mass(tree, claims, measure)
        total = cube.volume if measure is None else measure.mass(cube)
        ratio = mass / total
        worst = min(worst, ratio)
        if ratio < gamma * (1.0 - 1e-12):
            ok = False
    if not family.cubes:
        worst = 1.0
    return ok, worst


def carleson_from_sparse(family: SparseFamily, measure: Weight | None = None,
                         check: bool = False) -> float:
    """Packing norm of the family's indicator under a measure.

    With check=True (measure equal to the family's sparseness measure) the
    value is asserted to stay below 1/gamma.
    """
    value = carleson_norm(family.indicator_stack(), measure, family.tree)
    if check and value > (1.0 / family.gamma) * (1.0 + 1e-9):
        raise AssertionError(
            f"sparse family exceeded its packing bound: {value} > {1.0 / family.gamma}"
        )
    return value


# -- the stopping-time constructor ----------------------------------------------


def paraproduct_sparse_dominate(
    b: GridFunction, f: GridFunction, q0: Cube | None = None
) -> SparseFamily:
    """Build the sparse family that dominates every partial paraproduct sum.

    Within the subtree of q0 the returned family S (with Lebesgue
    sparseness 1/2^(d+2)) satisfies, for every sub-collection F of cubes
    inside q0 and pointwise on the grid,

        |sum_{Q in F} D_Q b <f>_Q|  <=  2^(d+5) sum_{S} <|b - <b>_S|>_S <|f|>_S 1_S.

    Stopping cubes of an iterate Q are the maximal P with either
    <|f|>_P > 4 <|f|>_Q, or with some chain sub-collection between P and Q
    whose partial sum exceeds 2^5 <|b-<b>_Q|>_Q <|f|>_Q on P; the latter
    supremum equals max(sum of positive parts, sum of negative parts) and
    is evaluated exactly.  The per-node stopping mass is checked against
    half the node's volume at runtime.
    """
    tree = b.tree
    if f.tree != tree:
        raise LatticeError("b and f live on different trees")
    if q0 is None:
        q0 = tree.root()
    d = tree.dim
    gamma = 2.0 ** -(d + 2)

    bavg = _averages_by_level(b)
    fabs = _averages_by_level(f.abs())
    fsig = _averages_by_level(f)

    if fabs[q0.level][q0.index] == 0.0 and float(np.abs(f.values).max()) != 0.0:
        raise LatticeError("zero |f|-average over the root of a nonzero f")

    stilde: list[Cube] = []
    stopping_children: dict[Cube, list[Cube]] = {}
    mass_ratio_max = 0.0

    stack = [q0]
    while stack:
        q = stack.pop()
        stilde.append(q)
        if q.is_leaf():
            stopping_children[q] = []
            continue
        osc_avg = float(
            np.abs(b.values[q.cell_slices()] - bavg[q.level][q.index]).mean()
        )
        fbar = float(fabs[q.level][q.index])
        a_q = 32.0 * osc_avg * fbar
        if osc_avg == 0.0:
            # b constant on q: every difference below vanishes, nothing to chase
            stopping_children[q] = []
            continue
        stops: list[Cube] = []

        def scan(parent: Cube, pos: float, neg: float):
            pavg = bavg[parent.level][parent.index]
            favg_parent = fsig[parent.level][parent.index]
            for child in parent.children():
                c = (bavg[child.level][child.index] - pavg) * favg_parent
                cpos = pos + max(c, 0.0)
                cneg = neg + max(-c, 0.0)
                if fabs[child.level][child.index] > 4.0 * fbar or max(cpos, cneg) > a_q:
                    stops.append(child)
                elif not child.is_leaf():
                    scan(child, cpos, cneg)

        scan(q, 0.0, 0.0)
        stop_mass = sum(p.volume for p in stops)
        ratio = stop_mass / q.volume
        mass_ratio_max = max(mass_ratio_max, ratio)
        if ratio > 0.5 + 1e-12:
            raise StoppingMassError(
                f"stopping cubes carry {ratio:.4f} of the node volume at {q}, above 1/2"
            )
        stopping_children[q] = stops
        stack.extend(stops)

    # witnesses for the iterate cubes: everything not claimed by stopping cubes
    witnesses: dict[Cube, dict[int, str]] = {}
    for q in stilde:
        claimed = np.zeros(tree.shape, dtype=bool)
        for p in stopping_children[q]:
            claimed[p.cell_slices()] = True
        keep = np.zeros(tree.shape, dtype=bool)
        keep[q.cell_slices()] = True
        keep &= ~claimed
        witnesses[q] = {int(i): FULL for i in np.flatnonzero(keep.ravel())}

    # add the parents of the non-root members, paying for their witnesses
    # out of one stopping child's surplus
    members = set(stilde)
    family_cubes = list(stilde)
    half_cells = 2 ** (d + 1)
    for q in stilde:
        if q == q0:
            continue
        parent = q.parent()
        if parent in members:
            continue
        donor = q  # first stopping child of this parent encountered
        members.add(parent)
        family_cubes.append(parent)
        need_parent = -(-parent.cell_count() // half_cells)  # ceil, in half-cells
        need_donor = -(-donor.cell_count() // half_cells)
        donor_claims = witnesses[donor]
        avail = 2 * len(donor_claims)
        if avail - need_parent < need_donor:
            raise AssertionError("witness split infeasible; stopping mass bound must have failed")
        cells_sorted = sorted(donor_claims)
        take_full, leftover_half = divmod(need_parent, 2)
        parent_claims: dict[int, str] = {}
        for cell in cells_sorted[len(cells_sorted) - take_full:]:
            parent_claims[cell] = FULL
            del donor_claims[cell]
        if leftover_half:
            split_cell = max(donor_claims)
            parent_claims[split_cell] = HI_HALF
            donor_claims[split_cell] = LO_HALF
        witnesses[parent] = parent_claims

    return SparseFamily(
        tree=tree,
        cubes=family_cubes,
        witnesses=witnesses,
        gamma=gamma,
        measure=None,
        stopping_mass_max=mass_ratio_max,
    )


def domination_rhs(family: SparseFamily, b: GridFunction, f: GridFunction) -> np.ndarray:
    """sum over family cubes of <|b - <b>_S|>_S <|f|>_S 1_S, on the cells."""
    tree = family.tree
    out = np.zeros(tree.shape)
    for cube in family.cubes:
        sl = cube.cell_slices()
        bq = float(b.values[sl].mean())
        osc_avg = float(np.abs(b.values[sl] - bq).mean())
        out[sl] += osc_avg * float(np.abs(f.values[sl]).mean())
    return out


def partial_sum(b: GridFunction, f: GridFunction, cubes: Iterable[Cube]) -> GridFunction:
    """sum_{Q in F} D_Q b <f>_Q via direct per-cube accumulation."""
    from .operators import paraproduct

    return paraproduct(b, f, cubes=cubes)


def domination_check(
    lhs: GridFunction,
    family: SparseFamily,
    b: GridFunction,
    f: GridFunction,
    constant: float | None = None,
) -> tuple[bool, float]:
    """Pointwise check |lhs| <= constant * RHS; returns (ok, max violation)."""
    d = family.tree.dim
    constant = 2.0 ** (d + 5) if constant is None else constant
    rhs = domination_rhs(family, b, f)
    gap = np.abs(lhs.values) - constant * rhs
    worst = float(gap.max())
    scale = max(float(np.abs(lhs.values).max()), 1.0)
    return worst <= 1e-12 * scale, worst


def domination_worst_case(
    family: SparseFamily,
    b: GridFunction,
    f: GridFunction,
    q0: Cube | None = None,
    constant: float | None = None,
) -> tuple[bool, float]:
    """Exact check over EVERY sub-collection at once.

    At a fixed cell the partial sum over any chosen collection is maximized
    by taking all positive terms (or all negative ones), so the supremum
    over sub-collections of |sum D_Q b <f>_Q| equals
    max(sum of positive parts, sum of negative parts), computed in one
    level sweep.  Returns (ok, worst gap) against constant * RHS; this
    subsumes any randomized sub-collection battery.
    """
    from .lattice import expand_to_cells

    tree = family.tree
    if q0 is None:
        q0 = tree.root()
    d = tree.dim
    constant = 2.0 ** (d + 5) if constant is None else constant
    bavg = _averages_by_level(b)
    favg = _averages_by_level(f)
    pos = np.zeros(tree.shape)
    neg = np.zeros(tree.shape)
    upper = expand_to_cells(bavg[q0.level], q0.level, tree.depth)
    for k in range(q0.level, tree.depth):
        lower = expand_to_cells(bavg[k + 1], k + 1, tree.depth)
        term = (lower - upper) * expand_to_cells(favg[k], k, tree.depth)
        pos += np.maximum(term, 0.0)
        neg += np.maximum(-term, 0.0)
        upper = lower
    envelope = np.maximum(pos, neg)
    sl = q0.cell_slices()
    gap = envelope[sl] - constant * domination_rhs(family, b, f)[sl]
    worst = float(gap.max())
    scale = max(float(envelope[sl].max()), 1.0)
    return worst <= 1e-12 * scale, worst


def random_subcollection(
    tree: DyadicTree, q0: Cube, rng: np.random.Generator, inclusion: float | None = None
) -> list[Cube]:
    """A random set of non-leaf cubes inside q0 (for quantifier sweeps)."""
    p = rng.uniform(0.2, 0.8) if inclusion is None else inclusion
    cubes = []
    stack = [q0]
    while stack:
        q = stack.pop()
        if q.is_leaf():
            continue
        if rng.random() < p:
            cubes.append(q)
        stack.extend(q.children())
    return cubes


# -- serialization ----------------------------------------------------------------

_MEASURE_TAGS = {None: "lebesgue"}


def family_to_text(family: SparseFamily) -> str:
    """Line-oriented text form: one cube per line, `level idx.. | witness tokens`.

    Witness tokens are flat cell indices; `a-b` is an inclusive run of
    whole cells, `nL`/`nH` claim the lower/upper half of cell n along
    axis 0.
    """
    tree = family.tree
    lines = [
        f"# dyadlab sparse family v1 dim={tree.dim} depth={tree.depth} "
        f"half_width={tree.half_width!r} gamma={family.gamma!r} measure=lebesgue"
    ]
    for cube in family.cubes:
        claims = family.witnesses.get(cube, {})
        tokens = []
        full_cells = sorted(c for c, kind in claims.items() if kind == FULL)
        run_start = None
        prev = None
        for c in full_cells:
            if run_start is None:
                run_start = prev = c
            elif c == prev + 1:
                prev = c
            else:
                tokens.append(f"{run_start}-{prev}" if prev > run_start else f"{run_start}")
                run_start = prev = c
        if run_start is not None:
            tokens.append(f"{run_start}-{prev}" if prev > run_start else f"{run_start}")
        for c, kind in sorted(claims.items()):
            if kind == LO_HALF:
                tokens.append(f"{c}L")
            elif kind == HI_HALF:
                tokens.append(f"{c}H")
        index = " ".join(str(i) for i in cube.index)
        lines.append(f"{cube.level} {index} | {' '.join(tokens)}")
    return "\n".join(lines) + "\n"


def family_from_text(text: str) -> SparseFamily:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    header = lines[0]
    if not header.startswith("# dyadlab sparse family v1"):
        raise ValueError("unrecognized sparse-family header")
    fields = dict(part.split("=", 1) for part in header.split()[5:])
    tree = DyadicTree(int(fields["dim"]), int(fields["depth"]), float(fields["half_width"]))
    gamma = float(fields["gamma"])
    cubes: list[Cube] = []
    witnesses: dict[Cube, dict[int, str]] = {}
    for line in lines[1:]:
        head, _, wit = line.partition("|")
        parts = head.split()
        level, index = int(parts[0]), tuple(int(x) for x in parts[1:])
        cube = Cube(tree, level, index)
        claims: dict[int, str] = {}
        for tok in wit.split():
            if tok.endswith("L"):
                claims[int(tok[:-1])] = LO_HALF
            elif tok.endswith("H"):
                claims[int(tok[:-1])] = HI_HALF
            elif "-" in tok:
                a, b = tok.split("-")
                for c in range(int(a), int(b) + 1):
                    claims[c] = FULL
            else:
                claims[int(tok)] = FULL
        cubes.append(cube)
        witnesses[cube] = claims
    return SparseFamily(tree=tree, cubes=cubes, witnesses=witnesses, gamma=gamma, measure=None)
