"""Reference figures the suite checks against."""

# architecture -> (per-GPU cost in USD, per-GPU power in W)
REF_COST_POWER = {
    "TPUv4": (1567.20, 19.39),
    "NVL-36": (9563.20, 75.95),
    "NVL-72": (9563.20, 75.95),
    "NVL-36x2": (17924.00, 150.33),
    "NVL-576": (30417.60, 413.45),
    "K2": (2626.80, 48.10),
    "K3": (3740.60, 72.05),
}

# (R, K) -> (printed bound, significant figures printed)
REF_BOUNDS = {
    (4, 2): (0.0754, 3), (4, 3): (0.0028, 2), (4, 4): (1.02e-4, 3),
    (8, 2): (0.2502, 4), (8, 3): (0.0181, 3), (8, 4): (0.0013, 2),
}


def round_sig(x: float, sig: int) -> float:
    from math import floor, log10
    return 0.0 if x == 0 else round(x, sig - 1 - floor(log10(abs(x))))
