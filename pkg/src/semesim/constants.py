"""Physical constants and unit helpers."""

C0 = 299_792_458.0  # speed of light [m/s]
ETA0 = 376.730313668  # free-space wave impedance [ohm]

# Grid points that no ray reaches (zero received power) are clamped to this
# finite sentinel instead of -inf so that power grids stay finite everywhere.
POWER_FLOOR_DBM = -400.0


def wavelength(frequency_hz: float) -> float:
    """Free-space wavelength [m] at the given frequency [Hz]."""
    return C0 / frequency_hz


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)
