def epsilon_at(t: int, epsilon0: float = 0.6) -> float:
    """Exploration rate ``epsilon0 / (1 + 0.005 t)`` at environment step ``t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return epsilon0 / (1.0 + 0.005 * t)
