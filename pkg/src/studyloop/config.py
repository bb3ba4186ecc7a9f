"""Engine configuration.

Every tunable named by the other modules lives here so a deployment can
adjust them in one JSON file. The values are engineering defaults, not
published constants; the config is validated at startup, most importantly
the consistency rule activation_threshold <= motivation_threshold *
ability_threshold, which keeps the trigger-type quadrant rule from firing
where the activation curve says a trigger is wasted.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import ConfigurationError

SCHEMA_VERSION = 1


@dataclass
class EngineConfig:
    schema_version: int = SCHEMA_VERSION

    # trigger gate
    activation_threshold: float = 0.25
    motivation_threshold: float = 0.5
    ability_threshold: float = 0.5
    motivation_prior: float = 0.5
    motivation_window: int = 10
    base_ability: Dict[str, float] = field(
        default_factory=lambda: {"scheduling": 0.8, "preparation": 0.6, "group_study": 0.4}
    )
    ability_streak_step: float = 0.02
    ability_streak_cap: float = 0.2
    fbm_gate_enabled: bool = True

    # habit loops
    internal_trigger_after: int = 5
    cycle_ttl_days: int = 7
    reward_probability: float = 0.7
    reward_weights: Dict[str, float] = field(
        default_factory=lambda: {"praise_message": 3.0, "progress_color_change": 2.0, "streak_badge": 1.0}
    )
    scheduling_prerequisite_cycles: int = 4

    # scheduling
    session_duration_min: int = 60
    checkin_grace_min: int = 30
    waking_window: Tuple[int, int] = (480, 1380)
    early_window: Tuple[int, int] = (480, 720)
    late_window: Tuple[int, int] = (1080, 1380)
    session_start_lead_min: int = 10
    adapt_score_threshold: float = 60.0
    sessions_per_class_cap: int = 3

    # preparation
    reading_list_lead_hours: int = 48
    post_class_delay_min: int = 15
    band_amber: float = 0.34
    band_green: float = 0.67

    # group study
    helper_percentile: float = 0.75
    helper_min_overlap_min: int = 60
    endorse_min_rating: int = 4
    invite_effective_sessions: int = 3
    invite_effectiveness_min: int = 4
    invite_window_weeks: int = 4
    pairing_from_week: int = 5

    # notifier
    defer_retry_hours: int = 24
    delivery_max_retries: int = 3
    retry_backoff_s: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    instructor_name: str = "Dr R. Ellis"
    webhook_url: Optional[str] = None

    # platform
    rng_seed: int = 0
    api_token: Optional[str] = None

    def validate(self) -> "EngineConfig":
        probs = {
            "activation_threshold": self.activation_threshold,
            "motivation_threshold": self.motivation_threshold,
            "ability_threshold": self.ability_threshold,
            "motivation_prior": self.motivation_prior,
            "reward_probability": self.reward_probability,
            "helper_percentile": self.helper_percentile,
        }
        for name, value in probs.items():
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.activation_threshold < 1.0:
            raise ConfigurationError("activation_threshold must be in (0, 1)")
        if self.activation_threshold > self.motivation_threshold * self.ability_threshold:
            raise ConfigurationError(
                "activation_threshold must not exceed motivation_threshold * ability_threshold "
                f"({self.activation_threshold} > "
                f"{self.motivation_threshold * self.ability_threshold:.4f})"
            )
        for cat, base in self.base_ability.items():
            if not 0.0 <= base <= 1.0:
                raise ConfigurationError(f"base ability for {cat} must be in [0, 1]")
        for kind, weight in self.reward_weights.items():
            if weight <= 0:
                raise ConfigurationError(f"reward weight for {kind} must be > 0")
        if not 0 <= self.band_amber < self.band_green <= 1:
            raise ConfigurationError("bands need 0 <= amber < green <= 1")
        for name in ("session_duration_min", "checkin_grace_min", "internal_trigger_after",
                     "cycle_ttl_days", "defer_retry_hours"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0")
        for win_name in ("waking_window", "early_window", "late_window"):
            lo, hi = getattr(self, win_name)
            if not 0 <= lo < hi <= 1440:
                raise ConfigurationError(f"{win_name} must satisfy 0 <= start < end <= 1440")
        return self

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "EngineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for name in ("waking_window", "early_window", "late_window"):
            setattr(cfg, name, tuple(getattr(cfg, name)))
        return cfg.validate()

    @classmethod
    def load(cls, path: Optional[str] = None) -> "EngineConfig":
        if path is None:
            return cls().validate()
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
