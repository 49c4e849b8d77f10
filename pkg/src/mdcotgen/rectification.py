"""Self-rectification: weight attenuation, the stochastic verification gate,
and the verify -> rectify feedback loop wrapped around each reasoning step.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Callable, Generic, TypeVar

from .errors import ExhaustedRectification, InvalidAttenuation, OutputParseError, ValidationError
from .models import Dimension, DimensionWeightState, VerificationResult
from .prompts import TemplateId, parse_score

if TYPE_CHECKING:
    from .config import RunConfig
    from .session import Session

T = TypeVar("T")


def attenuation_factor(alpha: float, freq: int, beta: float, impact: float) -> float:
    """``(1 - alpha*freq) ** (beta*impact)``.

    The base is formed exactly and rounded once, so the result keeps full
    relative precision even when ``alpha*freq`` approaches 1.
    """
    base = 1 - Fraction(alpha) * int(freq)
    if base <= 0:
        raise InvalidAttenuation(
            f"alpha*freq = {alpha}*{freq} >= 1; the attenuation base is not positive"
        )
    if freq == 0:
        return 1.0
    return float(base) ** (beta * impact)


def attenuate(state: DimensionWeightState) -> float:
    """New rectification weight for ``state``; the state itself is untouched."""
    factor = attenuation_factor(state.alpha, state.freq, state.beta, state.impact)
    return max(state.w_min, state.w_current * factor)


def should_verify(state: DimensionWeightState, rng: random.Random) -> tuple[bool, float]:
    """Draw u ~ U(0, 1); verification fires when u <= w_current."""
    u = rng.random()
    return u <= state.w_current, u


class WeightBook:
    """Current :class:`DimensionWeightState` per dimension for one run."""

    def __init__(self, states: dict[Dimension, DimensionWeightState]):
        self._states = dict(states)

    @classmethod
    def from_config(cls, config: "RunConfig") -> "WeightBook":
        states = {}
        for dim in Dimension:
            w_min = config.w_min[dim.value]
            states[dim] = DimensionWeightState(
                dimension=dim,
                w_current=max(config.w_initial, w_min),
                w_min=w_min,
                impact=config.impact[dim.value],
                freq=0,
                alpha=config.alpha,
                beta=config.beta,
            )
        return cls(states)

    def __getitem__(self, dimension: Dimension) -> DimensionWeightState:
        return self._states[Dimension(dimension)]

    def commit(self, state: DimensionWeightState) -> None:
        old = self._states[state.dimension]
        if state.freq < old.freq:
            raise ValidationError("rectification frequency cannot decrease within a run")
        if not state.w_min <= state.w_current <= 1.0:
            raise ValidationError(
                f"{state.dimension.value}: weight {state.w_current} left [w_min, 1]"
            )
        self._states[state.dimension] = state

    def snapshot(self) -> dict[str, dict[str, Any]]:
        return {d.value: s.to_dict() for d, s in self._states.items()}


def verify(session: "Session", dimension: Dimension, original_prompt: str,
           rationale_output: str, *, unit: str | None = None) -> VerificationResult:
    prompt = session.render(
        TemplateId.verification(dimension),
        original_prompt=original_prompt,
        current_rationale=rationale_output,
    )
    answer, meta = session.ask(prompt)
    threshold = session.config.pass_threshold
    error = None
    try:
        score = parse_score(answer)
    except OutputParseError as exc:
        score, error = None, f"{type(exc).__name__}: {exc}"
    result = VerificationResult.judge(score, threshold, answer)
    payload = dict(meta, score=score, passed=result.passed, threshold=threshold)
    if error:
        payload["error"] = error
    session.trace.record("Verify", dimension, unit, **payload)
    return result


def rectify(session: "Session", dimension: Dimension, previous_prompt: str,
            previous_output: str, *, unit: str | None = None) -> str:
    prompt = session.render(
        TemplateId.RECTIFY, prev_prompt=previous_prompt, prev_output=previous_output
    )
    answer, meta = session.ask(prompt)
    state = session.weights[dimension]
    session.weights.commit(replace(state, freq=state.freq + 1))
    session.trace.record(
        "Rectify", dimension, unit, **meta, f_before=state.freq, f_after=state.freq + 1
    )
    return answer


@dataclass(frozen=True)
class GuardResult(Generic[T]):
    value: T
    output: str
    score: float | None
    rectifications: int
    exhausted: bool = False


def _commit_attenuation(session: "Session", dimension: Dimension, unit: str | None) -> None:
    state = session.weights[dimension]
    saturated = False
    try:
        w_new = attenuate(state)
    except InvalidAttenuation:
        # base (1 - alpha*f) has reached zero: the weight can only sit on its floor
        w_new, saturated = state.w_min, True
    session.weights.commit(replace(state, w_current=w_new))
    session.trace.record(
        "Attenuate",
        dimension,
        unit,
        w_before=state.w_current,
        w_after=w_new,
        f=state.freq,
        alpha=state.alpha,
        beta=state.beta,
        impact=state.impact,
        w_min=state.w_min,
        saturated=saturated,
    )


def guard(
    session: "Session",
    dimension: Dimension,
    prompt: str,
    produce: Callable[[], str],
    parse: Callable[[str], T],
    *,
    unit: str | None = None,
) -> GuardResult[T]:
    """Run one reasoning step under the self-rectification loop.

    ``produce`` issues the step's single generation call (and records it).
    If the gate fires, or the output cannot be parsed, the output is verified
    and, on failure, rectified and re-verified up to ``max_rectify_retries``
    times. Unless attenuation is disabled the dimension weight is attenuated
    once afterwards. If no candidate ever passes, the best-scoring parseable
    one is returned with ``exhausted=True``.
    """
    config = session.config
    dimension = Dimension(dimension)
    output = produce()

    def try_parse(text: str):
        try:
            return parse(text), None
        except OutputParseError as exc:
            return None, exc

    value, error = try_parse(output)

    if not config.rectification:
        if error is not None:
            raise error
        return GuardResult(value, output, None, 0)

    state = session.weights[dimension]
    if config.attenuation:
        fires, u = should_verify(state, session.rng)
        w_gate = state.w_current
    else:
        # without attenuation the weight is pinned at 1 and the gate always fires
        u = session.rng.random()
        fires, w_gate = True, 1.0
    session.trace.record("GateDraw", dimension, unit, u=u, w=w_gate, triggered=fires)

    candidates: list[tuple[float | None, str, Any]] = []
    rectifications = 0
    passed = False
    last_error = error
    if fires or error is not None:
        while True:
            if error is not None:
                session.trace.record(
                    "Verify", dimension, unit, llm_call=False, score=None, passed=False,
                    threshold=config.pass_threshold,
                    error=f"{type(error).__name__}: {error}", reason="unparseable",
                )
            else:
                result = verify(session, dimension, prompt, output, unit=unit)
                candidates.append((result.score, output, value))
                if result.passed:
                    passed = True
                    break
            if rectifications >= config.max_rectify_retries:
                break
            output = rectify(session, dimension, prompt, output, unit=unit)
            rectifications += 1
            value, error = try_parse(output)
            if error is not None:
                last_error = error
    else:
        candidates.append((None, output, value))
        passed = True

    if config.attenuation:
        _commit_attenuation(session, dimension, unit)

    if passed:
        score, output, value = candidates[-1]
        return GuardResult(value, output, score, rectifications)

    attempts = rectifications + 1
    if not candidates:
        raise ExhaustedRectification(unit or dimension.value, attempts) from last_error

    best = max(range(len(candidates)), key=lambda i: (
        -1.0 if candidates[i][0] is None else candidates[i][0], -i))
    score, output, value = candidates[best]
    session.trace.record(
        "Error", dimension, unit, error="ExhaustedRectification", fatal=False,
        attempts=attempts, best_score=score,
    )
    return GuardResult(value, output, score, rectifications, exhausted=True)
