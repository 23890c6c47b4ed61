"""Coefficient-vanishing recursion systems from flow-time couplings.

Rotation averaging reduces each triple correlation of disk expansions to a
bivariate series in (T, S) whose coefficients are the unknown bilinear
integrals. Flow-invariance identities at coupled times (s = t, s = t/2,
s = m t) plus the rotation-by-pi sign rule give exact linear relations among
the unknowns after matching powers; a trivial kernel over the interior
indices forces the unknowns to vanish.

All series arithmetic is exact over Q: rank decisions never touch floats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import UnsupportedCoupling
from .ratseries import LinForm, LinSeries, Series, tanh_multiple

_CASES = {
    "AB": ("A", "B"),
    "CD": ("C", "D", "P"),
    "EF": ("E", "F"),
    "GH": ("G", "H"),
    "IJ": ("I", "J"),
}

# Coupling sets the vanishing arguments are classically run with.
REFERENCE_COUPLINGS = {
    "AB": ("s=t", "s=t/2"),
    "CD": ("s=t", "s=2t", "s=3t"),
    "EF": ("s=t", "s=t/2"),
    "GH": ("s=2t", "s=3t", "s=4t"),
    "IJ": ("s=2t", "s=3t", "s=4t"),
}


@dataclass(frozen=True)
class Relation:
    coupling: str
    power: int
    form: LinForm


@dataclass(frozen=True)
class RecursionSystem:
    case: str
    N: int
    couplings: tuple
    relations: tuple
    unknowns: tuple

    def rows_normalized(self):
        return [rel.form.normalized() for rel in self.relations]

    def to_json(self) -> str:
        rows = []
        for rel in self.relations:
            rows.append({
                "coupling": rel.coupling,
                "power": rel.power,
                "coeffs": {f"{fam}{idx}": str(c)
                           for (fam, idx), c in sorted(rel.form.items())},
            })
        return json.dumps({"case": self.case, "N": self.N,
                           "couplings": list(self.couplings), "rows": rows},
                          sort_keys=True, indent=1)


def _parse_mt(coupling: str) -> int | None:
    if coupling.startswith("s=") and coupling.endswith("t") and coupling not in ("s=t",):
        body = coupling[2:-1]
        if body.isdigit():
            return int(body)
    return None


def _inv_pow_one_minus(order: int, power: int) -> Series:
    return Series([1, -1], order).inverse(order).pow(power, order)


def _sq3(series: Series, order: int) -> Series:
    return (Series.one(order) - (series * series).truncate(order)).pow(3, order)


def _sq2(series: Series, order: int) -> Series:
    return (Series.one(order) - (series * series).truncate(order)).pow(2, order)


def _rows_from(linser: LinSeries, coupling: str, powers) -> list:
    rows = []
    for p in powers:
        if p < linser.order and linser.coeffs[p]:
            rows.append(Relation(coupling=coupling, power=p,
                                 form=LinForm(linser.coeffs[p])))
    return rows


def _ab_rows(coupling: str, N: int) -> list:
    if coupling == "s=t":
        # sum (A_n + B_n) T^{2n} + B_0 (1 - T^2)^{-3} = 0
        order = 2 * N + 1
        ls = LinSeries(order)
        for n in range(N + 1):
            mono = Series.x(order).pow(2 * n, order)
            ls.add_term(("A", n), mono)
            ls.add_term(("B", n), mono)
        ls.add_term(("B", 0), _inv_pow_one_minus(order, 3))
        return _rows_from(ls, coupling, range(0, 2 * N + 1, 2))
    if coupling == "s=t/2":
        # sum (A_n (1-W)^{-3} + 8 B_n) (2W)^n = 0
        order = N + 1
        ls = LinSeries(order)
        inv3 = _inv_pow_one_minus(order, 3)
        for n in range(N + 1):
            two_w_n = Series.x(order).pow(n, order).scale(Fraction(2) ** n)
            ls.add_term(("A", n), (two_w_n * inv3).truncate(order))
            ls.add_term(("B", n), two_w_n.scale(8))
        return _rows_from(ls, coupling, range(N + 1))
    raise UnsupportedCoupling(f"AB does not use {coupling}")


def _ef_rows(coupling: str, N: int) -> list:
    if coupling == "s=t":
        # sum (E_n T^{2n} + F_n T^{2n+2}) + F_0 T^2 (1 - T^2)^{-3} = 0
        order = 2 * N + 1
        ls = LinSeries(order)
        for n in range(N + 1):
            ls.add_term(("E", n), Series.x(order).pow(2 * n, order))
            ls.add_term(("F", n), Series.x(order).pow(2 * n + 2, order))
        ls.add_term(("F", 0), _inv_pow_one_minus(order, 3).shift(2))
        return _rows_from(ls, coupling, range(0, 2 * N + 1, 2))
    if coupling == "s=t/2":
        # sum (E_n (1-W)^{-2} + 8 F_n W) (2W)^n = 0
        order = N + 1
        ls = LinSeries(order)
        inv2 = _inv_pow_one_minus(order, 2)
        for n in range(N + 1):
            two_w_n = Series.x(order).pow(n, order).scale(Fraction(2) ** n)
            ls.add_term(("E", n), (two_w_n * inv2).truncate(order))
            ls.add_term(("F", n), two_w_n.shift(1).scale(8))
        return _rows_from(ls, coupling, range(N + 1))
    raise UnsupportedCoupling(f"EF does not use {coupling}")


def _gh_rows(coupling: str, N: int) -> list:
    m = _parse_mt(coupling)
    if m is None or m < 2:
        raise UnsupportedCoupling(f"GH uses s=mt with integer m >= 2, not {coupling}")
    order = 2 * N + 2
    Sm = tanh_multiple(m, order)
    Sm1 = tanh_multiple(m - 1, order)
    sig3m, sig3m1 = _sq3(Sm, order), _sq3(Sm1, order)
    T = Series.x(order)
    ls = LinSeries(order)
    for n in range(N + 1):
        sgn = (-1) ** n
        g_ker = (Sm.pow(n + 1, order) * sig3m
                 + Sm1.pow(n + 1, order).scale(sgn) * sig3m1).truncate(order)
        ls.add_term(("G", n), (T.pow(n, order) * g_ker).truncate(order))
        h_ker = (Sm.pow(n, order) * sig3m
                 - Sm1.pow(n, order).scale(sgn) * sig3m1).truncate(order)
        ls.add_term(("H", n), (T.pow(n + 3, order) * h_ker).truncate(order))
    return _rows_from(ls, coupling, range(1, 2 * N + 2, 2))


def _ij_rows(coupling: str, N: int) -> list:
    m = _parse_mt(coupling)
    if m is None or m < 2:
        raise UnsupportedCoupling(f"IJ uses s=mt with integer m >= 2, not {coupling}")
    order = 2 * N + 3
    Sm = tanh_multiple(m, order)
    Sm1 = tanh_multiple(m - 1, order)
    sig2m, sig2m1 = _sq2(Sm, order), _sq2(Sm1, order)
    T = Series.x(order)
    ls = LinSeries(order)
    for n in range(N + 1):
        sgn = (-1) ** n
        i_ker = (Sm.pow(n + 4, order) * sig2m
                 - Sm1.pow(n + 4, order).scale(sgn) * sig2m1).truncate(order)
        ls.add_term(("I", n), (T.pow(n, order) * i_ker).truncate(order))
        j_ker = (Sm.pow(n, order) * sig2m
                 - Sm1.pow(n, order).scale(sgn) * sig2m1).truncate(order)
        ls.add_term(("J", n), (T.pow(n + 2, order) * j_ker).truncate(order))
    return _rows_from(ls, coupling, range(2, 2 * N + 3, 2))


def _cd_rows(coupling: str, N: int) -> list:
    if coupling == "s=t":
        # 2 sum C_n T^{2n} (1-T^2)^4 - D_0 T^2 = 0   (after / T^2 (1-T^2)^2)
        order = 2 * N + 1
        ls = LinSeries(order)
        one_minus4 = Series([1, 0, -1], order).pow(4, order)
        for n in range(N + 1):
            ker = (Series.x(order).pow(2 * n, order) * one_minus4).truncate(order)
            ls.add_term(("C", n), ker.scale(2))
        ls.add_term(("D", 0), Series.x(order).pow(2, order).scale(-1))
        return _rows_from(ls, coupling, range(0, 2 * N + 1, 2))
    m = _parse_mt(coupling)
    if m is None or m not in (2, 3):
        raise UnsupportedCoupling(f"CD uses s=t, s=2t, s=3t, not {coupling}")
    order = 2 * N + 3
    Sm = tanh_multiple(m, order)
    Sm1 = tanh_multiple(m - 1, order)
    sig3m, sig3m1 = _sq3(Sm, order), _sq3(Sm1, order)
    T = Series.x(order)
    cub2 = Series([1, 0, -1], order).pow(2, order)   # (1 - T^2)^2
    cub3 = Series([1, 0, -1], order).pow(3, order)   # (1 - T^2)^3
    ls = LinSeries(order)
    for n in range(N + 1):
        sym = (T.pow(n, order) * Sm.pow(n + 2, order)
               + T.pow(n + 2, order) * Sm.pow(n, order)).truncate(order)
        ls.add_term(("C", n), (sym * cub3 * sig3m).truncate(order))
        p_ker = (T.pow(n, order) * Sm1.pow(n + 2, order) * cub2 * sig3m1).truncate(order)
        ls.add_term(("P", n), p_ker.scale((-1) ** (n + 1)))
        d_ker = (T.pow(n + 4, order) * Sm1.pow(n, order) * cub2 * sig3m1).truncate(order)
        ls.add_term(("D", n), d_ker.scale((-1) ** (n + 1)))
    return _rows_from(ls, coupling, range(2, 2 * N + 3, 2))


_BUILDERS = {"AB": _ab_rows, "CD": _cd_rows, "EF": _ef_rows, "GH": _gh_rows,
             "IJ": _ij_rows}


def build_relations(case: str, N: int, couplings) -> RecursionSystem:
    """Exact relation rows for one case; every row is labeled by its coupling
    and the matched power. Rows are only generated at powers where no unknown
    beyond the truncation index N could contribute."""
    if case not in _CASES:
        raise ValueError(f"unknown case {case}")
    if N < 2:
        raise ValueError("N must be >= 2")
    relations = []
    for coupling in couplings:
        relations.extend(_BUILDERS[case](coupling, N))
    unknowns = tuple((fam, n) for fam in _CASES[case] for n in range(N + 1))
    return RecursionSystem(case=case, N=N, couplings=tuple(couplings),
                           relations=tuple(relations), unknowns=unknowns)


def kernel_basis(rows, unknowns):
    """Exact kernel of the relation matrix over Q (reduced row echelon form)."""
    ncols = len(unknowns)
    mat = [[row.get(u, Fraction(0)) for u in unknowns] for row in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    pivot_set = set(pivots)
    basis = []
    for fc in range(ncols):
        if fc in pivot_set:
            continue
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -mat[i][fc]
        basis.append(v)
    return basis


@dataclass(frozen=True)
class VanishingVerdict:
    verdict: str              # "forced-zero" or "undetermined"
    kernel_dim: int
    margin: int
    tested_max_index: int
    free_unknowns: tuple      # unknowns left unpinned by the relations
    boundary_only: bool       # True when all free unknowns sit past the margin


def solve_vanishing(system: RecursionSystem, margin: int = 2) -> VanishingVerdict:
    """forced-zero iff every solution of the relations vanishes on all unknowns
    of index <= N - margin; boundary indices may stay undetermined and are
    reported instead of silently pinned."""
    basis = kernel_basis(system.rows_normalized(), system.unknowns)
    cutoff = system.N - margin
    free = set()
    for v in basis:
        for u, x in zip(system.unknowns, v):
            if x != 0:
                free.add(u)
    interior_hit = sorted(u for u in free if u[1] <= cutoff)
    verdict = "forced-zero" if not interior_hit else "undetermined"
    return VanishingVerdict(verdict=verdict, kernel_dim=len(basis), margin=margin,
                            tested_max_index=cutoff,
                            free_unknowns=tuple(sorted(free)),
                            boundary_only=not interior_hit and bool(free))


# --------------------------------------------------------------------------
# completed systems: all base orderings of the triple, same coupling toolkit
# --------------------------------------------------------------------------
#
# The flow-time couplings annihilate one ray of the GH system (H_n proportional
# to (n+1)(n+2)/2) and one ray of the IJ system (J_n proportional to n+1):
# the corresponding kernel combinations collapse under the hyperbolic identity
# (1 - S^2)/(1 - TS) = (1 - S'^2)/(1 + TS') for S = tanh(m u), S' = tanh((m-1)u),
# T = tanh(u). Applying the same shift-and-rotate couplings to the *other*
# orderings of the triple (the base point moved to each factor in turn) brings
# in the sibling bilinear families and pins everything; low-index coincidences
# between families (the same integrand product read from two orderings) are
# identified automatically by canonical product keys.

_COMPLETED_LETTERS = {
    "GH": (("c", "d", "a"), {"c": 2, "d": 2, "a": 3}),
    "IJ": (("a", "b", "c"), {"a": 3, "b": 3, "c": 2}),
}

_COMPLETED_PATTERNS = {
    "GH": [
        ("G", lambda n: ((("c", 0, 0), ("d", n, 0), ("a", n + 1, 1)))),
        ("H", lambda n: ((("c", 0, 0), ("d", n + 3, 1), ("a", n, 0)))),
        ("Gp", lambda n: ((("d", 0, 0), ("c", n, 0), ("a", n + 1, 1)))),
        ("Hp", lambda n: ((("d", 0, 0), ("c", n + 3, 1), ("a", n, 0)))),
        ("P", lambda n: ((("a", 0, 0), ("c", n, 0), ("d", n + 3, 1)))),
        ("Q", lambda n: ((("a", 0, 0), ("c", n + 3, 1), ("d", n, 0)))),
    ],
    "IJ": [
        ("I", lambda n: ((("a", 0, 0), ("b", n, 0), ("c", n + 4, 1)))),
        ("J", lambda n: ((("a", 0, 0), ("b", n + 2, 1), ("c", n, 0)))),
        ("Ip", lambda n: ((("b", 0, 0), ("a", n, 0), ("c", n + 4, 1)))),
        ("Jp", lambda n: ((("b", 0, 0), ("a", n + 2, 1), ("c", n, 0)))),
        ("K", lambda n: ((("c", 0, 0), ("a", n, 0), ("b", n + 2, 1)))),
        ("L", lambda n: ((("c", 0, 0), ("a", n + 2, 1), ("b", n, 0)))),
    ],
}


def canonical_product(entries) -> tuple:
    """Canonical key of Re(prod of three coefficients): sorted entries, taken
    up to overall conjugation (Re w = Re conj(w))."""
    e1 = tuple(sorted(entries))
    e2 = tuple(sorted((letter, i, 1 - c) for letter, i, c in entries))
    return min(e1, e2)


def _offsets(X, Y, Z, degs):
    return degs[X] + degs[Y] - degs[Z], degs[X] + degs[Z] - degs[Y]


def _arrangement_series(X, Y, Z, degs, Ts, Ss, order, rotated, max_idx) -> LinSeries:
    """Rotation-averaged triple series of (X at 0, Y at Ts, Z at Ss).

    `rotated` applies the pi-rotation sign (-1)^(index + degree) to the third
    factor. Unknowns are canonical product keys.
    """
    dY, dZ = degs[Y], degs[Z]
    ka, kb = _offsets(X, Y, Z, degs)
    ls = LinSeries(order)
    dress = ((Series.one(order) - (Ts * Ts).truncate(order)).pow(dY, order)
             * (Series.one(order) - (Ss * Ss).truncate(order)).pow(dZ, order)
             ).truncate(order)
    for n in range(max_idx + 1):
        if n + ka <= max_idx:
            key = canonical_product(((X, 0, 0), (Y, n, 0), (Z, n + ka, 1)))
            mono = (Ts.pow(n, order) * Ss.pow(n + ka, order) * dress).truncate(order)
            ls.add_term(key, mono.scale((-1) ** ((n + ka) + dZ) if rotated else 1))
        if n + kb <= max_idx:
            key = canonical_product(((X, 0, 0), (Y, n + kb, 1), (Z, n, 0)))
            mono = (Ts.pow(n + kb, order) * Ss.pow(n, order) * dress).truncate(order)
            ls.add_term(key, mono.scale((-1) ** (n + dZ) if rotated else 1))
    return ls


def _scale_linseries(ls: LinSeries, c) -> LinSeries:
    out = LinSeries(ls.order)
    for n, f in enumerate(ls.coeffs):
        out.coeffs[n] = f.scale(c)
    return out


def _exactness_cap(arrs, degs, max_idx) -> int:
    cap = 10 ** 9
    for (X, Y, Z) in arrs:
        ka, kb = _offsets(X, Y, Z, degs)
        cap = min(cap, 2 * (max_idx + 1) - ka, 2 * (max_idx + 1) - kb)
    return cap


def build_completed_relations(case: str, N: int, Ms=(1, 2, 3)) -> RecursionSystem:
    """Multi-arrangement completion of the GH / IJ systems.

    For every ordering (X, Y, Z) of the triple and every m in Ms, the identity
      series(X@0, Y@t, Z@mt) = (-1)^(deg X + deg Y) series(Y@0, X@t, Z@(m-1)t rotated)
    follows from a flow shift by -t and the substitution x -> -x. Rows are
    matched powers, kept only below the exact truncation cap. AB/CD/EF are
    already complete with their reference couplings and are returned unchanged.
    """
    import itertools
    if case in ("AB", "CD", "EF"):
        return build_relations(case, N, REFERENCE_COUPLINGS[case])
    if case not in _COMPLETED_LETTERS:
        raise ValueError(f"unknown case {case}")
    letters, degs = _COMPLETED_LETTERS[case]
    label_of = {}
    for fam, pat in _COMPLETED_PATTERNS[case]:
        for n in range(N + 7):
            key = canonical_product(pat(n))
            label_of.setdefault(key, (fam, n))
    order = 2 * N + 6
    T = Series.x(order)
    relations = []
    for (X, Y, Z) in itertools.permutations(letters):
        sgn = (-1) ** (degs[X] + degs[Y])
        for m in Ms:
            lhs = _arrangement_series(X, Y, Z, degs, T, tanh_multiple(m, order),
                                      order, False, N)
            rhs = _arrangement_series(Y, X, Z, degs, T, tanh_multiple(m - 1, order),
                                      order, True, N)
            comb = lhs + _scale_linseries(rhs, -sgn)
            cap = _exactness_cap([(X, Y, Z), (Y, X, Z)], degs, N)
            tag = f"{X}{Y}{Z}:s={m}t"
            for p in range(min(cap, order)):
                if comb.coeffs[p]:
                    form = LinForm({label_of[k]: v for k, v in comb.coeffs[p].items()})
                    relations.append(Relation(coupling=tag, power=p, form=form))
    fams = [fam for fam, _ in _COMPLETED_PATTERNS[case]]
    unknowns = tuple(sorted({u for rel in relations for u in rel.form},
                            key=lambda u: (fams.index(u[0]), u[1])))
    return RecursionSystem(case=case + "-completed", N=N,
                           couplings=tuple(f"s={m}t(all arrangements)" for m in Ms),
                           relations=tuple(relations), unknowns=unknowns)


def ray_kernel_description(case: str):
    """The explicit coupling-invariant ray of the letter systems (GH / IJ)."""
    if case == "GH":
        return ("H", lambda n: Fraction((n + 1) * (n + 2), 2))
    if case == "IJ":
        return ("J", lambda n: Fraction(n + 1))
    raise ValueError("ray is documented for GH and IJ only")


def named_relation(case: str, name: str, n: int | None = None,
                   m: int | None = None) -> LinForm:
    """Classical named relations of each system in normalized form, for
    testing that they occur verbatim among the generated rows."""
    if case == "AB" and name == "first_comparison":
        return LinForm({("A", 0): Fraction(1), ("B", 0): Fraction(2)}).normalized()
    if case == "AB" and name == "half_time_recursion":
        form = {("B", n): Fraction(2) ** (n + 3)}
        for k in range(n + 1):
            form[("A", k)] = Fraction((n - k + 1) * (n - k + 2)) * Fraction(2) ** (k - 1)
        return LinForm(form).normalized()
    if case == "CD" and name == "c0":
        return LinForm({("C", 0): Fraction(1)}).normalized()
    if case == "CD" and name == "t2":
        return LinForm({("C", 1): Fraction(2), ("C", 0): Fraction(-8),
                        ("D", 0): Fraction(-1)}).normalized()
    if case == "EF" and name == "e0":
        return LinForm({("E", 0): Fraction(1)}).normalized()
    if case == "EF" and name == "e1":
        return LinForm({("E", 1): Fraction(1), ("F", 0): Fraction(2)}).normalized()
    if case == "GH" and name == "g0":
        return LinForm({("G", 0): Fraction(1)}).normalized()
    if case == "IJ" and name == "t4":
        return LinForm({("I", 0): Fraction(m ** 4 - (m - 1) ** 4),
                        ("J", 1): Fraction(2 * m - 1),
                        ("J", 0): Fraction(-(4 * m - 2))}).normalized()
    raise ValueError(f"unknown named relation {case}/{name}")
