from typing import Optional

from .config import Settings, get_settings
from .services.designer import TransceiverDesigner
from .services.numerics import RankTolerance
from .services.verifier import DesignVerifier


def get_designer(settings: Optional[Settings] = None) -> TransceiverDesigner:
    """
    Build a TransceiverDesigner from the active settings.
    """
    settings = settings or get_settings()
    return TransceiverDesigner(
        tolerance=RankTolerance(settings.rank_epsilon),
        retry_budget=settings.retry_budget,
        extension_max=settings.extension_max,
        max_system_columns=settings.max_system_columns,
        extension_trials=settings.extension_trials,
        trial_seed=settings.trial_seed,
        candidate_draws=settings.candidate_draws,
    )


def get_verifier(settings: Optional[Settings] = None) -> DesignVerifier:
    settings = settings or get_settings()
    return DesignVerifier(
        tolerance=RankTolerance(settings.rank_epsilon),
        residual_tolerance=settings.residual_tolerance,
    )
