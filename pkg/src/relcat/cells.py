"""Matrices of finite sets and matrices of relations.

A zero-level object ("0-cell") is a finite set of region values.  A one-level
arrow (`OneCell`) from S to T is a (|T| x |S|) matrix of finite sets, and a
two-level arrow (`TwoCell`) between parallel one-cells is a matrix of
relations acting fiberwise.  Two-cells compose vertically (fiberwise
relational composition), horizontally (along a shared 0-cell, by a
coproduct-of-products formula) and under tensor (Kronecker style).

Encodings are strict.  Tensor products are mixed-radix with the left factor
as the high digit.  For horizontal composition, a composite cell keeps the
chain of atomic cells it was built from; an element of a composite fiber is
a path through that chain (alternating fiber elements and middle 0-cell
values), and paths are ranked lexicographically reading from the
last-applied end.  Re-bracketing a composition chain concatenates the same
atoms in the same order, so differently bracketed composites have literally
identical fiber encodings and unit cells compose away to nothing.  The
associativity and unit isomorphisms are therefore identities, and `equal`
on bit matrices soundly decides equality of composite diagrams.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from relcat.relations import (
    FiniteSet,
    Rel,
    ShapeError,
    as_finite_set,
    identity as identity_rel,
    product as product_rel,
    product_set,
)

__all__ = [
    "CellDifference",
    "EqualityResult",
    "OneCell",
    "TwoCell",
    "converse_two_cell",
    "equal",
    "hcompose_one",
    "hcompose_two",
    "identity_one_cell",
    "identity_two_cell",
    "one_cells_parallel",
    "scalar_one_cell",
    "scalar_two_cell",
    "tensor",
    "tensor_many",
    "tensor_one",
    "vcompose",
    "vcompose_many",
]

# An atom is the fiber matrix of a non-composite cell; Path elements
# alternate fiber indices and middle 0-cell values, in application order.
Atom = tuple[tuple[FiniteSet, ...], ...]
Path = tuple[int, ...]


@dataclass(frozen=True)
class OneCell:
    """A matrix of finite sets: fiber (t, s) for t in dst, s in src.

    ``word``/``chain`` record the factorization into atomic cells and the
    0-cells between them; cells constructed directly are single atoms, and
    identity cells are the empty word.
    """

    src: FiniteSet
    dst: FiniteSet
    fibers: tuple[tuple[FiniteSet, ...], ...]
    word: tuple[Atom, ...] = None  # type: ignore[assignment]
    chain: tuple[FiniteSet, ...] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        fibers = tuple(tuple(row) for row in self.fibers)
        object.__setattr__(self, "fibers", fibers)
        if len(fibers) != self.dst.size:
            raise ShapeError(
                f"{len(fibers)} fiber rows for a target of size {self.dst.size}"
            )
        for row in fibers:
            if len(row) != self.src.size:
                raise ShapeError(
                    f"{len(row)} fiber columns for a source of size {self.src.size}"
                )
        if self.word is None:
            object.__setattr__(self, "word", (fibers,))
            object.__setattr__(self, "chain", (self.src, self.dst))
        else:
            object.__setattr__(self, "word", tuple(self.word))
            object.__setattr__(self, "chain", tuple(self.chain))

    def fiber(self, t: int, s: int) -> FiniteSet:
        return self.fibers[t][s]

    def fiber_sizes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(f.size for f in row) for row in self.fibers)

    def paths(self, t: int, s: int) -> list[Path]:
        """Elements of fiber (t, s) as ranked paths through the word."""
        return _word_paths(self.word, self.chain, t, s)

    def is_identity_word(self) -> bool:
        return not self.word

    def is_monoidal_unit(self) -> bool:
        return not self.word and self.src.size == 1


@functools.lru_cache(maxsize=8192)
def _word_paths_cached(
    word: tuple[Atom, ...], chain: tuple[FiniteSet, ...], t: int, s: int
) -> tuple[Path, ...]:
    if not word:
        return ((),) if t == s else ()
    # partial paths keyed by the middle value they currently end at
    states: dict[int, list[Path]] = {s: [()]}
    for k, atom in enumerate(word):
        is_last = k == len(word) - 1
        targets = [t] if is_last else list(range(chain[k + 1].size))
        new_states: dict[int, list[Path]] = {}
        for j in targets:
            acc: list[Path] = []
            for i, partials in states.items():
                fiber = atom[j][i]
                if fiber.size == 0:
                    continue
                for p in partials:
                    for e in range(fiber.size):
                        acc.append(p + (e,) if k == 0 else p + (i, e))
            if acc:
                new_states[j] = acc
        states = new_states
        if not states:
            return ()
    paths = states.get(t, [])
    paths.sort(key=lambda p: tuple(reversed(p)))
    return tuple(paths)


def _word_paths(
    word: tuple[Atom, ...], chain: tuple[FiniteSet, ...], t: int, s: int
) -> list[Path]:
    return list(_word_paths_cached(word, chain, t, s))


def _path_label(
    word: tuple[Atom, ...], chain: tuple[FiniteSet, ...], t: int, s: int, path: Path
) -> Optional[str]:
    """Best-effort display label for a composite fiber element.

    Pure boundary composites (all fibers singletons) are labelled by their
    middle values; a single non-trivial atom wrapped in singletons is
    labelled by that atom's fiber label; anything else is unlabelled.
    """
    if not word:
        return "*"
    # decompose path into elements and middles
    elems = [path[0]]
    mids = [s]
    rest = path[1:]
    for k in range(0, len(rest), 2):
        mids.append(rest[k])
        elems.append(rest[k + 1])
    mids = mids[1:] + [t]  # middle values after each atom
    # collect one display part per informative coordinate, in application
    # order (rightmost spatial position first), then reverse for display
    parts: list[str] = []
    prev_mid = s
    for k, atom in enumerate(word):
        fiber = atom[mids[k]][prev_mid]
        if any(f.size > 1 for row in atom for f in row):
            if fiber.labels is None:
                return None
            parts.append(fiber.label(elems[k]))
        if k < len(word) - 1 and chain[k + 1].size > 1:
            parts.append(chain[k + 1].label(mids[k]))
        prev_mid = mids[k]
    if not parts:
        return "*"
    parts.reverse()
    return parts[0] if len(parts) == 1 else "(" + ",".join(parts) + ")"


def _composite_fiber_set(
    word: tuple[Atom, ...], chain: tuple[FiniteSet, ...], t: int, s: int
) -> FiniteSet:
    paths = _word_paths(word, chain, t, s)
    labels: Optional[list[str]] = []
    for p in paths:
        lab = _path_label(word, chain, t, s, p)
        if lab is None:
            labels = None
            break
        labels.append(lab)
    if labels is not None and len(set(labels)) != len(labels):
        labels = None
    return FiniteSet(len(paths), tuple(labels) if labels is not None else None)


def scalar_one_cell(fiber: FiniteSet | int) -> OneCell:
    """The one-cell on trivial 0-cells whose single fiber is the given set."""
    unit = FiniteSet(1)
    return OneCell(unit, unit, ((as_finite_set(fiber),),))


def identity_one_cell(s: FiniteSet | int) -> OneCell:
    """The composition unit on a 0-cell: diagonal singletons, empty word."""
    s = as_finite_set(s)
    one, zero = FiniteSet(1), FiniteSet(0)
    fibers = tuple(tuple(one if t == u else zero for u in s) for t in s)
    return OneCell(s, s, fibers, word=(), chain=(s,))


def one_cells_parallel(a: OneCell, b: OneCell) -> bool:
    return (
        a.src.size == b.src.size
        and a.dst.size == b.dst.size
        and a.fiber_sizes() == b.fiber_sizes()
    )


@dataclass(frozen=True)
class TwoCell:
    """A matrix of relations between matching fibers of two parallel one-cells."""

    domain: OneCell
    codomain: OneCell
    components: tuple[tuple[Rel, ...], ...]

    def __post_init__(self) -> None:
        components = tuple(tuple(row) for row in self.components)
        object.__setattr__(self, "components", components)
        if (
            self.domain.src.size != self.codomain.src.size
            or self.domain.dst.size != self.codomain.dst.size
        ):
            raise ShapeError("domain and codomain one-cells are not parallel")
        if len(components) != self.domain.dst.size or any(
            len(row) != self.domain.src.size for row in components
        ):
            raise ShapeError("component matrix shape does not match the 0-cells")
        for t, row in enumerate(components):
            for s, rel in enumerate(row):
                if rel.src.size != self.domain.fiber(t, s).size or (
                    rel.dst.size != self.codomain.fiber(t, s).size
                ):
                    raise ShapeError(
                        f"component ({t}, {s}) has shape "
                        f"{rel.src.size}->{rel.dst.size}, fibers are "
                        f"{self.domain.fiber(t, s).size}->"
                        f"{self.codomain.fiber(t, s).size}"
                    )

    def component(self, t: int, s: int) -> Rel:
        return self.components[t][s]

    def is_scalar(self) -> bool:
        return self.domain.src.size == 1 and self.domain.dst.size == 1

    def scalar(self) -> Rel:
        if not self.is_scalar():
            raise ShapeError("not a scalar two-cell")
        return self.components[0][0]


def scalar_two_cell(rel: Rel) -> TwoCell:
    return TwoCell(scalar_one_cell(rel.src), scalar_one_cell(rel.dst), ((rel,),))


def identity_two_cell(a: OneCell) -> TwoCell:
    components = tuple(
        tuple(identity_rel(a.fiber(t, s)) for s in range(a.src.size))
        for t in range(a.dst.size)
    )
    return TwoCell(a, a, components)


def vcompose(a: TwoCell, b: TwoCell) -> TwoCell:
    """Componentwise relational composition: first a, then b."""
    if not one_cells_parallel(a.codomain, b.domain):
        raise ShapeError(
            "vertical composition: codomain of first stage does not match "
            "domain of second"
        )
    from relcat.relations import compose as compose_rel

    components = tuple(
        tuple(
            compose_rel(a.component(t, s), b.component(t, s))
            for s in range(a.domain.src.size)
        )
        for t in range(a.domain.dst.size)
    )
    return TwoCell(a.domain, b.codomain, components)


def vcompose_many(first: TwoCell, *rest: TwoCell) -> TwoCell:
    out = first
    for cell in rest:
        out = vcompose(out, cell)
    return out


def hcompose_one(a: OneCell, b: OneCell) -> OneCell:
    """Horizontal composite of one-cells: a applied first, b second.

    Fiber (u, s) is the disjoint union over the middle value t of
    (b-fiber x a-fiber); its size is the sum of the products.  Unit cells
    vanish from the factorization, so composing with an identity returns an
    encoding-identical cell.
    """
    if a.dst.size != b.src.size:
        raise ShapeError(
            f"horizontal composition: middle 0-cells have sizes "
            f"{a.dst.size} and {b.src.size}"
        )
    word = a.word + b.word
    chain = a.chain[:-1] + b.chain
    fibers = tuple(
        tuple(
            _composite_fiber_set(word, chain, u, s) for s in range(a.src.size)
        )
        for u in range(b.dst.size)
    )
    return OneCell(a.src, b.dst, fibers, word=word, chain=chain)


def _split_path(path: Path, a_word_len: int) -> tuple[Path, int, Path]:
    """Split a composite path at the junction after ``a_word_len`` atoms."""
    # path = (e1, m1, e2, m2, ..., en); atom k contributes (m_{k-1}, e_k)
    cut = 2 * a_word_len - 1
    a_part = path[:cut]
    junction = path[cut]
    b_part = path[cut + 1 :]
    return a_part, junction, b_part


def hcompose_two(alpha: TwoCell, beta: TwoCell) -> TwoCell:
    """Horizontal composite of two-cells: alpha applied first, beta second.

    Component (u, s) relates composite paths block-wise over the shared
    middle value: the alpha part acts on the inner leg, the beta part on the
    outer leg, and paths through different middle values are unrelated.
    """
    if alpha.domain.dst.size != beta.domain.src.size:
        raise ShapeError(
            f"horizontal composition: middle 0-cells have sizes "
            f"{alpha.domain.dst.size} and {beta.domain.src.size}"
        )
    domain = hcompose_one(alpha.domain, beta.domain)
    codomain = hcompose_one(alpha.codomain, beta.codomain)
    mid = alpha.domain.dst.size

    def component(u: int, s: int) -> Rel:
        in_paths = domain.paths(u, s)
        out_paths = codomain.paths(u, s)
        bits = np.zeros((len(out_paths), len(in_paths)), dtype=bool)
        if bits.size:
            in_ranks = _junction_ranks(alpha.domain, beta.domain, u, s, in_paths, mid)
            out_ranks = _junction_ranks(
                alpha.codomain, beta.codomain, u, s, out_paths, mid
            )
            for i, (t_o, ao, bo) in enumerate(out_ranks):
                arel = alpha.component(t_o, s)
                brel = beta.component(u, t_o)
                for j, (t_i, ai, bi) in enumerate(in_ranks):
                    if t_i == t_o:
                        bits[i, j] = arel.bits[ao, ai] and brel.bits[bo, bi]
        return Rel(domain.fiber(u, s), codomain.fiber(u, s), bits)

    components = tuple(
        tuple(component(u, s) for s in range(domain.src.size))
        for u in range(domain.dst.size)
    )
    return TwoCell(domain, codomain, components)


def _junction_ranks(
    a_cell: OneCell,
    b_cell: OneCell,
    u: int,
    s: int,
    paths: Sequence[Path],
    mid: int,
) -> list[tuple[int, int, int]]:
    """Decompose composite paths into (middle value, a-rank, b-rank)."""
    a_len = len(a_cell.word)
    b_len = len(b_cell.word)
    a_rank_cache = {
        t: {p: i for i, p in enumerate(a_cell.paths(t, s))} for t in range(mid)
    }
    b_rank_cache = {
        t: {p: i for i, p in enumerate(b_cell.paths(u, t))} for t in range(mid)
    }
    out = []
    for p in paths:
        if a_len == 0:
            t, a_part, b_part = s, (), p
        elif b_len == 0:
            t, a_part, b_part = u, p, ()
        else:
            a_part, t, b_part = _split_path(p, a_len)
        out.append((t, a_rank_cache[t][a_part], b_rank_cache[t][b_part]))
    return out


def tensor_one(a: OneCell, b: OneCell) -> OneCell:
    """Kronecker tensor of one-cells: an (m x n) and an (r x s) matrix of
    sets give an (mr x ns) matrix; fibers multiply pairwise, left factor
    as the high digit.  Tensoring with the monoidal unit is the identity."""
    if b.is_monoidal_unit():
        return a
    if a.is_monoidal_unit():
        return b
    fibers = tuple(
        tuple(
            product_set(a.fiber(t, s), b.fiber(tp, sp))
            for s in range(a.src.size)
            for sp in range(b.src.size)
        )
        for t in range(a.dst.size)
        for tp in range(b.dst.size)
    )
    return OneCell(product_set(a.src, b.src), product_set(a.dst, b.dst), fibers)


def _is_unit_two_cell(a: TwoCell) -> bool:
    return (
        a.domain.is_monoidal_unit()
        and a.codomain.is_monoidal_unit()
        and bool(a.component(0, 0).bits.all())
    )


def tensor(a: TwoCell, b: TwoCell) -> TwoCell:
    if _is_unit_two_cell(b):
        return a
    if _is_unit_two_cell(a):
        return b
    components = tuple(
        tuple(
            product_rel(a.component(t, s), b.component(tp, sp))
            for s in range(a.domain.src.size)
            for sp in range(b.domain.src.size)
        )
        for t in range(a.domain.dst.size)
        for tp in range(b.domain.dst.size)
    )
    return TwoCell(
        tensor_one(a.domain, b.domain),
        tensor_one(a.codomain, b.codomain),
        components,
    )


def tensor_many(first: TwoCell, *rest: TwoCell) -> TwoCell:
    out = first
    for cell in rest:
        out = tensor(out, cell)
    return out


def converse_two_cell(a: TwoCell) -> TwoCell:
    from relcat.relations import converse as converse_rel

    components = tuple(
        tuple(converse_rel(a.component(t, s)) for s in range(a.domain.src.size))
        for t in range(a.domain.dst.size)
    )
    return TwoCell(a.codomain, a.domain, components)


@dataclass(frozen=True)
class CellDifference:
    """Location of the first disagreement between two two-cells."""

    kind: str  # "shape" or "bit"
    t: Optional[int] = None
    s: Optional[int] = None
    row: Optional[int] = None
    col: Optional[int] = None
    lhs: Optional[bool] = None
    rhs: Optional[bool] = None
    row_label: Optional[str] = None
    col_label: Optional[str] = None
    detail: str = ""

    def describe(self) -> str:
        if self.kind == "shape":
            return f"shape mismatch: {self.detail}"
        where = f"component ({self.t}, {self.s})"
        src = self.col_label if self.col_label is not None else str(self.col)
        dst = self.row_label if self.row_label is not None else str(self.row)
        return (
            f"{where}: pair {src} -> {dst} is "
            f"{'present' if self.lhs else 'absent'} on the left, "
            f"{'present' if self.rhs else 'absent'} on the right"
        )


@dataclass(frozen=True)
class EqualityResult:
    equal: bool
    difference: Optional[CellDifference] = None

    def __bool__(self) -> bool:
        return self.equal


def equal(a: TwoCell, b: TwoCell) -> EqualityResult:
    """Strict equality: same 0-cells, same fiber sizes, identical bits.

    On failure, reports the first differing component and element pair in
    row-major order.
    """
    if (
        a.domain.src.size != b.domain.src.size
        or a.domain.dst.size != b.domain.dst.size
    ):
        return EqualityResult(
            False,
            CellDifference(
                kind="shape",
                detail=(
                    f"0-cells {a.domain.src.size}->{a.domain.dst.size} vs "
                    f"{b.domain.src.size}->{b.domain.dst.size}"
                ),
            ),
        )
    if (
        a.domain.fiber_sizes() != b.domain.fiber_sizes()
        or a.codomain.fiber_sizes() != b.codomain.fiber_sizes()
    ):
        return EqualityResult(
            False,
            CellDifference(kind="shape", detail="fiber sizes differ"),
        )
    for t in range(a.domain.dst.size):
        for s in range(a.domain.src.size):
            x, y = a.component(t, s).bits, b.component(t, s).bits
            if np.array_equal(x, y):
                continue
            row, col = map(int, np.argwhere(x != y)[0])
            dom = a.domain.fiber(t, s)
            cod = a.codomain.fiber(t, s)
            return EqualityResult(
                False,
                CellDifference(
                    kind="bit",
                    t=t,
                    s=s,
                    row=row,
                    col=col,
                    lhs=bool(x[row, col]),
                    rhs=bool(y[row, col]),
                    row_label=cod.label(row) if cod.labels else None,
                    col_label=dom.label(col) if dom.labels else None,
                ),
            )
    return EqualityResult(True)
