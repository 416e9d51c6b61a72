"""Slow, definition-level reference implementations used to cross-check the engines.

Nothing here shares code with the partition walker: refinements are found by
listing every refinement outright, and word moments are evaluated slot by slot in
the tensor-product model.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from filtered_noise.moments import MomentModel, Word, _slot_product
from filtered_noise.partitions import (
    ColorFilterTuple,
    SetPartition,
    enumerate_partitions,
    is_adapted,
)


def refinements(R: SetPartition) -> list[SetPartition]:
    """Every partition finer than or equal to R (each block split independently)."""
    per_block = []
    for block in R.blocks:
        splits = []
        for Q in enumerate_partitions(len(block)):
            splits.append([[block[i - 1] for i in sub] for sub in Q.blocks])
        per_block.append(splits)
    return [SetPartition.from_blocks([b for split in combo for b in split], R.n)
            for combo in itertools.product(*per_block)]


def coarsest_adapted_bruteforce(R: SetPartition, cf: ColorFilterTuple) -> SetPartition:
    """Scan all refinements of R for the adapted ones and return the coarsest.

    Raises ``RuntimeError`` if the adapted refinements have no unique
    coarsest element.
    """
    candidates = [Q for Q in refinements(R) if is_adapted(Q, cf)]
    fewest = min(len(Q.blocks) for Q in candidates)
    top = [Q for Q in candidates if len(Q.blocks) == fewest]
    best = top[0]
    if len(top) != 1 or not all(Q.refines(best) for Q in candidates):
        raise RuntimeError("adapted refinements have no unique coarsest element")
    return best


def adapted_partitions_bruteforce(cf: ColorFilterTuple, pair_only: bool = False) -> list[SetPartition]:
    return [R for R in enumerate_partitions(len(cf))
            if is_adapted(R, cf) and (not pair_only or R.is_pair_partition())]


def word_moment_model(word: Word, model: MomentModel) -> Fraction:
    """Evaluate a filtered word in the tensor-product model, slot by slot.

    Labels play the role of sites: a leg's label picks its tensor column.
    """
    return _slot_product([leg.label for leg in word.legs],
                         [leg.color for leg in word.legs],
                         [leg.filter for leg in word.legs],
                         lambda label, k: model[label][k])
