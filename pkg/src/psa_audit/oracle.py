"""Straight-line re-implementation of the assessment walk.

Kept deliberately free of ``engine.assess`` internals so the two can be
checked against each other; used only by tests.
"""

from __future__ import annotations

from typing import Sequence

from .charges import ChargeCatalog, ChargeClass, ChargeCode
from .engine import DmfConfig, PsaResult, SubScores, SupervisionLevel


def oracle_assess(
    subscores: SubScores,
    charges: Sequence[ChargeCode],
    extradited: bool,
    dmf: DmfConfig,
    catalog: ChargeCatalog,
) -> PsaResult:
    in_order = sorted(charges, key=lambda c: c.normalized)

    excluded = False
    why_excluded = ""
    if extradited:
        excluded = True
        why_excluded = "extradited"
    if not excluded:
        for c in in_order:
            if catalog.is_exclusion_charge(c):
                excluded = True
                why_excluded = "exclusion-list:" + c.normalized
                break
    if not excluded and subscores.nvca_flag:
        for c in in_order:
            if catalog.is_violent(c):
                excluded = True
                why_excluded = "violent+nvca:" + c.normalized
                break

    cell = dmf.cells[subscores.fta - 1][subscores.nca - 1]
    if cell == "SPLIT":
        initial = SupervisionLevel.SFPDP_ACM
        for c in charges:
            if c.charge_class is ChargeClass.FELONY or (
                c.charge_class is ChargeClass.MISDEMEANOR and catalog.is_violent(c)
            ):
                initial = SupervisionLevel.RELEASE_NOT_RECOMMENDED
                break
    else:
        initial = cell

    bumped = False
    why_bumped = ""
    for c in in_order:
        if catalog.is_bumpup_charge(c):
            bumped = True
            why_bumped = "bumpup-list:" + c.normalized
            break
    if not bumped and subscores.nvca_flag:
        any_violent = False
        for c in charges:
            if catalog.is_violent(c):
                any_violent = True
        if not any_violent:
            bumped = True
            why_bumped = "nvca-no-violent"

    if excluded:
        final = SupervisionLevel.RELEASE_NOT_RECOMMENDED
    elif bumped and initial < SupervisionLevel.RELEASE_NOT_RECOMMENDED:
        final = SupervisionLevel(int(initial) + 1)
    else:
        final = initial

    return PsaResult(
        subscores=subscores,
        exclusion=excluded,
        exclusion_reason=why_excluded,
        bumpup=bumped,
        bumpup_reason=why_bumped,
        initial=initial,
        final=final,
    )
