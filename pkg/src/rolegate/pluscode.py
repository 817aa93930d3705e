"""Open Location Code ("plus code") encoding for 8- and 10-digit pair codes."""

from __future__ import annotations

import math

ALPHABET = "23456789CFGHJMPQRVWX"
BASE = 20
SEPARATOR = "+"
SEPARATOR_POSITION = 8
PADDING = "0"
PAIR_CODE_LENGTH = 10
LAT_MAX = 90
LON_MAX = 180

# Integer grid of a full 15-digit code: five base-20 pairs, then five grid
# digits of 5 rows x 4 columns. Pair digits are read off this grid.
PAIR_RESOLUTION = BASE ** (PAIR_CODE_LENGTH // 2 - 2)  # 8000 cells per degree
GRID_ROWS, GRID_COLUMNS, GRID_DIGITS = 5, 4, 5
LAT_RESOLUTION = PAIR_RESOLUTION * GRID_ROWS ** GRID_DIGITS
LON_RESOLUTION = PAIR_RESOLUTION * GRID_COLUMNS ** GRID_DIGITS


class OutOfRange(ValueError):
    pass


def _to_cells(value: float, offset: int, resolution: int) -> int:
    # Shift to non-negative before scaling; round() absorbs float noise such
    # as 0.1 * 8000 landing just below 800.
    return int(round((value + offset) * resolution, 6))


def encode_pluscode(lat: float, lon: float, length: int = 10) -> str:
    """Encode a point as an OLC code with ``length`` significant digits.

    Only even lengths 2..10 are supported (the pair section of the code);
    shorter codes are padded with ``0`` up to the separator.

    >>> encode_pluscode(47.365590, 8.524997)
    '8FVC9G8F+6X'
    """
    if length not in (2, 4, 6, 8, 10):
        raise ValueError("length must be an even number between 2 and 10")
    if not (-LAT_MAX <= lat <= LAT_MAX) or not (-LON_MAX <= lon <= LON_MAX):
        raise OutOfRange(f"({lat}, {lon}) is not a valid coordinate")
    if math.isnan(lat) or math.isnan(lon):
        raise OutOfRange("coordinates must not be NaN")

    # The north pole belongs to the topmost cell; 180 wraps onto -180.
    lat_val = min(_to_cells(lat, LAT_MAX, LAT_RESOLUTION), 2 * LAT_MAX * LAT_RESOLUTION - 1)
    lon_val = _to_cells(lon, LON_MAX, LON_RESOLUTION) % (2 * LON_MAX * LON_RESOLUTION)
    lat_val //= GRID_ROWS ** GRID_DIGITS
    lon_val //= GRID_COLUMNS ** GRID_DIGITS

    digits = []
    for _ in range(PAIR_CODE_LENGTH // 2):
        digits.append(ALPHABET[lon_val % BASE])
        digits.append(ALPHABET[lat_val % BASE])
        lat_val //= BASE
        lon_val //= BASE
    code = "".join(reversed(digits))[:length]
    if length < SEPARATOR_POSITION:
        return code + PADDING * (SEPARATOR_POSITION - length) + SEPARATOR
    return code[:SEPARATOR_POSITION] + SEPARATOR + code[SEPARATOR_POSITION:]
