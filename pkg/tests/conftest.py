"""Shared builders for randomized cell tests."""

from __future__ import annotations

import random

import numpy as np
import pytest

from relcat.cells import OneCell, TwoCell
from relcat.relations import FiniteSet, Rel


class CellBuilder:
    """Deterministic random relations, one-cells and two-cells."""

    def __init__(self, seed: int, max_fiber: int = 3, density: float = 0.5):
        self.rng = random.Random(seed)
        self.max_fiber = max_fiber
        self.density = density

    def finite_set(self, lo: int = 0, hi: int | None = None) -> FiniteSet:
        return FiniteSet(self.rng.randint(lo, hi if hi is not None else self.max_fiber))

    def rel(self, src: FiniteSet, dst: FiniteSet) -> Rel:
        bits = np.array(
            [self.rng.random() < self.density for _ in range(src.size * dst.size)],
            dtype=bool,
        ).reshape(dst.size, src.size)
        return Rel(src, dst, bits)

    def one_cell(self, src: FiniteSet, dst: FiniteSet) -> OneCell:
        return OneCell(
            src,
            dst,
            tuple(
                tuple(self.finite_set() for _ in range(src.size))
                for _ in range(dst.size)
            ),
        )

    def two_cell(
        self, src: FiniteSet, dst: FiniteSet, domain: OneCell | None = None
    ) -> TwoCell:
        domain = domain or self.one_cell(src, dst)
        codomain = self.one_cell(src, dst)
        components = tuple(
            tuple(
                self.rel(domain.fiber(t, s), codomain.fiber(t, s))
                for s in range(src.size)
            )
            for t in range(dst.size)
        )
        return TwoCell(domain, codomain, components)

    def two_cell_from(self, domain: OneCell) -> TwoCell:
        return self.two_cell(domain.src, domain.dst, domain)


@pytest.fixture
def builder() -> CellBuilder:
    return CellBuilder(seed=20240811)
