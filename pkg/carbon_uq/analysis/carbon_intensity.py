"""
Grid-average carbon intensity from the hourly generation mix.
"""

import math
from typing import Sequence

from models.data_models import EmissionFactorTable, HourlySeries, SourceMixRow, Unit
from utils.errors import AlignmentError, EmptyInput, ZeroGeneration


def mix_to_carbon_intensity(
    rows: Sequence[SourceMixRow], factors: EmissionFactorTable, region: str
) -> HourlySeries:
    """
    Weighted average of the per-source emission factors.

    CI(t) = sum_s gen_s(t) * factor_s / sum_s gen_s(t)

    Args:
        rows: Hourly mix rows, contiguous and sorted by stamp
        factors: Emission factors covering every source in ``rows``
        region: Region the mix belongs to

    Returns:
        Carbon intensity series in gCO2eq/kWh

    Raises:
        ZeroGeneration: If every source is zero at some hour
        MissingFactor: If a source has no factor
    """
    if not rows:
        raise EmptyInput("no mix rows to convert")

    start = rows[0].stamp
    values = []
    for i, row in enumerate(rows):
        if row.stamp != start + i:
            raise AlignmentError(f"mix rows are not contiguous at hour {row.stamp}")

        total = row.total
        if total <= 0:
            raise ZeroGeneration(row.stamp)

        weighted = math.fsum(
            generation * factors.factor(source)
            for source, generation in row.generation.items()
        )
        values.append(weighted / total)

    return HourlySeries(
        region=region, start=start, values=tuple(values), unit=Unit.GCO2EQ_PER_KWH
    )
