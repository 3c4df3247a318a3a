"""Multipass pairing heaps and path-balanced search trees with potential-function instrumentation."""

from ._accel import HAVE_NUMBA, backend
from .analysis import LinkType, SweepReport, classify_link, classify_links
from .bst import AccessStats, KeyNotFound, PathBalancedBst, RotationEvent
from .pairing_heap import LinkEvent, LinkEvents, PairingHeap
from .potential import (
    DomainError,
    PotentialConfig,
    delta_phi_batch,
    delta_phi_closed_form,
    f_val,
    g_val,
    h_iter,
    h_val,
    log_star,
    sum_of_logs_potential,
    total_potential,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_NUMBA", "backend", "LinkType", "SweepReport", "classify_link", "classify_links",
    "AccessStats", "KeyNotFound", "PathBalancedBst", "RotationEvent", "LinkEvent", "LinkEvents",
    "PairingHeap", "DomainError", "PotentialConfig", "delta_phi_batch", "delta_phi_closed_form",
    "f_val", "g_val", "h_iter", "h_val", "log_star", "sum_of_logs_potential", "total_potential",
]
