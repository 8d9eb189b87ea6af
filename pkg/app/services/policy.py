import math
from collections.abc import Sequence
from fractions import Fraction

from ..exceptions import ConfigurationError, InputDomainError
from ..models.policy_model import (
    AdmissionDecision,
    EventKind,
    LineWeight,
    PolicyEvent,
    Tier,
    WeightTable,
)
from ..models.stability_model import StabilitySnapshot

FULL_TIER_FLOOR = 0.95
HALF_TIER_FLOOR = 0.90


def bandwidth_factor(bandwidths: Sequence[float], scale_base: int = 10) -> list[int]:
    """
    Static per-line weight from the bandwidth share: ceil(scale_base * Bw_i / sum(Bw)).

    Computed on exact rationals, so a share of exactly 2.5 becomes 3 and never 4.

    :return: One integer >= 1 per line.
    :raises ConfigurationError: If a bandwidth is not a positive finite number.
    """
    if scale_base < 1:
        raise ConfigurationError(f"scale_base must be >= 1, got {scale_base}")
    if not bandwidths:
        raise ConfigurationError("at least one bandwidth is required")

    shares = []
    for i, bandwidth in enumerate(bandwidths, start=1):
        if not (isinstance(bandwidth, (int, float)) and math.isfinite(bandwidth)) or bandwidth <= 0:
            raise ConfigurationError(
                f"bandwidth of line {i} must be a positive number, got {bandwidth!r}"
            )
        shares.append(Fraction(bandwidth))

    total = sum(shares)
    return [max(1, math.ceil(scale_base * share / total)) for share in shares]


def _round_half_up(numerator: int, denominator: int) -> int:
    return (2 * numerator + denominator) // (2 * denominator)


def stability_tier(stability: float) -> Tier:
    if not 0.0 <= stability <= 1.0:
        raise InputDomainError(f"stability {stability} is outside [0, 1]")
    if stability >= FULL_TIER_FLOOR:
        return Tier.full
    if stability >= HALF_TIER_FLOOR:
        return Tier.half
    if stability > 0.0:
        return Tier.third
    return Tier.out


def tier_weight(tier: Tier, bwf: int) -> int:
    match tier:
        case Tier.full:
            return bwf
        case Tier.half:
            return max(1, _round_half_up(bwf, 2))
        case Tier.third:
            return max(1, _round_half_up(bwf, 3))
        case Tier.out:
            return 0


def routing_weight(stability: float, bwf: int) -> int:
    """
    Dynamic WRR weight of a line.

    * S >= 0.95: Bwf
    * 0.90 <= S < 0.95: Bwf/2, rounded half-up, at least 1
    * 0 < S < 0.90: Bwf/3, rounded half-up, at least 1
    * S = 0: 0
    """
    return tier_weight(stability_tier(stability), bwf)


def build_weight_table(
    snapshot: StabilitySnapshot,
    bwf: Sequence[int],
    previous: WeightTable | None = None,
    failover_floor: float = 0.0,
) -> tuple[WeightTable, list[PolicyEvent]]:
    """
    Derive the weight table of an iteration and the events it causes.

    A line leaves service when its S is 0, or below `failover_floor` when one
    is set. Events are diffs against `previous`; without it none are emitted.

    :return: The :class:`WeightTable` and the list of :class:`PolicyEvent`.
    """
    if len(bwf) != len(snapshot.lines):
        raise InputDomainError(
            f"{len(bwf)} bandwidth factors for {len(snapshot.lines)} lines"
        )
    if previous is not None and len(previous.lines) != len(snapshot.lines):
        raise InputDomainError("previous weight table has a different number of lines")

    weights = []
    for state, factor in zip(snapshot.lines, bwf):
        in_service = state.stability > 0.0 and state.stability >= failover_floor
        tier = stability_tier(state.stability) if in_service else Tier.out
        weights.append(
            LineWeight(
                line=state.line,
                bwf=factor,
                rw=tier_weight(tier, factor),
                in_service=in_service,
                tier=tier,
                stability=state.stability,
            )
        )
    table = WeightTable(iteration=snapshot.iteration, lines=tuple(weights))

    events = []
    if previous is not None:
        for before, after in zip(previous.lines, table.lines):
            if before.in_service and not after.in_service:
                events.append(
                    PolicyEvent(
                        kind=EventKind.line_removed,
                        line=after.line,
                        iteration=table.iteration,
                        detail=f"S={after.stability:.4f}, routing weight 0",
                    )
                )
            elif not before.in_service and after.in_service:
                events.append(
                    PolicyEvent(
                        kind=EventKind.line_restored,
                        line=after.line,
                        iteration=table.iteration,
                        detail=f"S={after.stability:.4f}, routing weight {after.rw}",
                    )
                )
            elif before.tier != after.tier:
                events.append(
                    PolicyEvent(
                        kind=EventKind.tier_changed,
                        line=after.line,
                        iteration=table.iteration,
                        detail=f"{before.tier.value} -> {after.tier.value}, "
                        f"routing weight {before.rw} -> {after.rw}",
                    )
                )

    return table, events


def admission_decision(
    snapshot: StabilitySnapshot, threshold: float
) -> AdmissionDecision:
    """
    Advise whether a critical connection may be established now, and on which line.

    The grant follows the pipe stability; the best line is the most stable one,
    the lowest id winning a tie.
    """
    if not 0.0 <= threshold <= 1.0:
        raise InputDomainError(f"threshold {threshold} is outside [0, 1]")

    best = max(snapshot.lines, key=lambda state: (state.stability, -state.line))
    return AdmissionDecision(
        iteration=snapshot.iteration,
        grant=snapshot.pipe_stability >= threshold,
        best_line=best.line,
        pipe_stability=snapshot.pipe_stability,
        threshold=threshold,
    )


def line_admission(snapshot: StabilitySnapshot, line: int, threshold: float) -> bool:
    """Whether a critical connection may be pinned to one specific line."""
    if not 1 <= line <= len(snapshot.lines):
        raise InputDomainError(f"line {line} is outside 1..{len(snapshot.lines)}")
    return snapshot.line(line).stability >= threshold


def admission_events(
    decision: AdmissionDecision, previous: AdmissionDecision | None
) -> list[PolicyEvent]:
    if previous is not None and previous.grant == decision.grant:
        return []
    kind = EventKind.admission_granted if decision.grant else EventKind.admission_denied
    return [
        PolicyEvent(
            kind=kind,
            line=decision.best_line if decision.grant else None,
            iteration=decision.iteration,
            detail=f"IS={decision.pipe_stability:.4f}, threshold {decision.threshold}",
        )
    ]


def weights_document(table: WeightTable, line_names: Sequence[str]) -> dict:
    """The weight table keyed by line name, as written to the weights output file."""
    return {
        name: {
            "line": weight.line,
            "bwf": weight.bwf,
            "rw": weight.rw,
            "in_service": weight.in_service,
            "tier": weight.tier.value,
            "stability": weight.stability,
            "iteration": table.iteration,
        }
        for name, weight in zip(line_names, table.lines)
    }
