"""Decision-based black-box attacks against label-only oracles."""
from .common import (AttackConfig, AttackTrace, TRACE_CSV_HEADER,
                     best_distortion)
from .hsja import attack_hsja
from .rays import attack_rays
from .surfree import attack_surfree

__all__ = [
    "AttackConfig",
    "AttackTrace",
    "TRACE_CSV_HEADER",
    "attack_hsja",
    "attack_rays",
    "attack_surfree",
    "best_distortion",
]
