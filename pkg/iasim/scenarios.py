"""Reference network presets."""

from typing import Tuple

from .netmodel import NetworkScenario

# Path loss of the four-link reference network, alpha[k][i] from transmitter i to receiver k.
FOUR_LINK_ALPHA: Tuple[Tuple[float, ...], ...] = (
    (1.00, 0.50, 0.10, 0.01),
    (0.55, 1.00, 0.45, 0.10),
    (0.10, 0.45, 1.00, 0.55),
    (0.01, 0.10, 0.50, 1.00),
)

# Three-link network small enough for Monte Carlo checks on a desk.
DESK_ALPHA: Tuple[Tuple[float, ...], ...] = (
    (1.00, 0.50, 0.10),
    (0.55, 1.00, 0.45),
    (0.10, 0.50, 1.00),
)


def snr_to_power(snr_db: float, sigma2: float = 1.0) -> float:
    """Transmit power for an SNR of 10 log10(P / sigma2) dB."""
    return sigma2 * 10.0 ** (snr_db / 10.0)


def four_link_scenario(snr_db: float = 10.0, B_total: int = 20, sigma2: float = 1.0) -> NetworkScenario:
    """Four links, 8 x 8 antennas."""
    return NetworkScenario(
        K=4,
        nt=8,
        nr=8,
        P=snr_to_power(snr_db, sigma2),
        sigma2=sigma2,
        alpha=FOUR_LINK_ALPHA,
        B_total=B_total,
    )


def desk_scenario(snr_db: float = 10.0, B_total: int = 12, sigma2: float = 1.0) -> NetworkScenario:
    """Three links, 4 x 4 antennas."""
    return NetworkScenario(
        K=3,
        nt=4,
        nr=4,
        P=snr_to_power(snr_db, sigma2),
        sigma2=sigma2,
        alpha=DESK_ALPHA,
        B_total=B_total,
    )
