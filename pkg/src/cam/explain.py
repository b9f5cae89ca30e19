"""Dialogical explanations: answer "why is a evaluated as s(a)" by citing
the one or two children with the largest weighted influence, down to a
leaf's raw value.

Supporters are ranked by the signed product w * s. For attacker branches
the default ranking is by |w * s| (the most influential attack first); the
literal signed argmax, which would name the weakest attacker, is kept
behind ``attacker_ranking="literal"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import MisalignedInstanceError, NodeNotFoundError
from .qaf import QafModel
from .reasoner import StrengthAssignment

ATTACKER_RANKINGS = ("influence", "literal")


@dataclass(frozen=True)
class Citation:
    node: str
    role: str  # "supporting" | "attacking"
    strength: float
    position: str  # "primary" | "secondary"

    def to_document(self) -> dict:
        return {"node": self.node, "role": self.role, "strength": self.strength, "position": self.position}


@dataclass(frozen=True)
class ExplanationStep:
    """One dialogue answer."""

    subject: str
    subject_strength: float
    cited: tuple[Citation, ...] = ()
    leaf_value: Optional[object] = None
    lines: tuple[str, ...] = ()
    outside_definition: bool = False

    @property
    def empty(self) -> bool:
        return not self.cited and self.leaf_value is None

    def to_document(self) -> dict:
        return {
            "subject": self.subject,
            "subject_strength": self.subject_strength,
            "cited": [c.to_document() for c in self.cited],
            "leaf_value": self.leaf_value,
            "lines": list(self.lines),
            "outside_definition": self.outside_definition,
        }


def _score(model: QafModel, strengths: StrengthAssignment, parent: str, child: str) -> float:
    for edge in model.children_edges(parent):
        if edge.child == child:
            return edge.weight * strengths[child]
    raise NodeNotFoundError(f"{child!r} is not a child of {parent!r}")


def max_arg(
    model: QafModel, strengths: StrengthAssignment, parent: str, candidates: Sequence[str],
    key=None,
) -> Optional[str]:
    """argmax over candidates of w * s (or of ``key``); None when empty.

    Ties break to the lexicographically smallest id.
    """
    pool = sorted(candidates)
    if not pool:
        return None
    score = key or (lambda c: _score(model, strengths, parent, c))
    best = pool[0]
    best_score = score(best)
    for c in pool[1:]:
        s = score(c)
        if s > best_score:
            best, best_score = c, s
    return best


def sec_arg(
    model: QafModel, strengths: StrengthAssignment, parent: str, candidates: Sequence[str],
    key=None,
) -> Optional[str]:
    """Second-ranked argument: argmax over the pool without max_arg."""
    first = max_arg(model, strengths, parent, candidates, key)
    if first is None:
        return None
    rest = [c for c in candidates if c != first]
    return max_arg(model, strengths, parent, rest, key)


def _cite(model, strengths, parent, pool, role, key=None) -> tuple[Citation, ...]:
    primary = max_arg(model, strengths, parent, pool, key)
    if primary is None:
        return ()
    cites = [Citation(primary, role, strengths[primary], "primary")]
    secondary = sec_arg(model, strengths, parent, pool, key)
    if secondary is not None:
        cites.append(Citation(secondary, role, strengths[secondary], "secondary"))
    return tuple(cites)


def render_lines(model: QafModel, step: ExplanationStep) -> tuple[str, ...]:
    """Fixed response templates; strengths printed with two decimals."""
    if step.leaf_value is not None:
        label = model.node(step.subject).label
        return (f"Because in this case, {label} is {step.leaf_value}.",)
    if not step.cited:
        return ("{}",)
    parts = []
    for c in step.cited:
        label = model.node(c.node).label
        opener = "Because the" if c.position == "primary" else "and the"
        parts.append(f"{opener} {c.role} argument {label} is {c.strength:.2f}")
    return ("; ".join(parts) + ".",)


def explain(
    model: QafModel,
    strengths: StrengthAssignment,
    subject: str,
    x_raw: Optional[dict] = None,
    attacker_ranking: str = "influence",
) -> ExplanationStep:
    """Answer one explanation request following the case chain:

    root with s <= 0.5 and attackers -> cite attackers; root with s > 0.5
    and supporters -> cite supporters; any internal node with supporters
    -> cite supporters; feature -> raw value; as a fallback an internal
    node with only attackers cites them (marked outside the definition);
    otherwise the empty response.
    """
    if attacker_ranking not in ATTACKER_RANKINGS:
        raise ValueError(f"unknown attacker ranking {attacker_ranking!r}")
    node = model.node(subject)
    if subject not in strengths.strengths:
        raise MisalignedInstanceError(f"no strength for node {subject!r}")
    s = strengths[subject]

    attack_key = None
    if attacker_ranking == "influence":
        attack_key = lambda c: abs(_score(model, strengths, subject, c))  # noqa: E731

    attackers = [e.child for e in model.children_edges(subject) if e.weight < 0]
    supporters = [e.child for e in model.children_edges(subject) if e.weight > 0]

    if node.id == model.root and s <= 0.5 and attackers:
        cited = _cite(model, strengths, subject, attackers, "attacking", attack_key)
        step = ExplanationStep(subject, s, cited)
    elif node.id == model.root and s > 0.5 and supporters:
        cited = _cite(model, strengths, subject, supporters, "supporting")
        step = ExplanationStep(subject, s, cited)
    elif node.kind in ("concept", "root") and supporters:
        cited = _cite(model, strengths, subject, supporters, "supporting")
        step = ExplanationStep(subject, s, cited)
    elif node.kind == "feature":
        if x_raw is None or subject not in x_raw:
            raise MisalignedInstanceError(f"no raw value available for feature {subject!r}")
        step = ExplanationStep(subject, s, leaf_value=x_raw[subject])
    elif node.kind in ("concept", "root") and attackers:
        cited = _cite(model, strengths, subject, attackers, "attacking", attack_key)
        step = ExplanationStep(subject, s, cited, outside_definition=True)
    else:
        step = ExplanationStep(subject, s)

    return ExplanationStep(
        subject=step.subject, subject_strength=step.subject_strength, cited=step.cited,
        leaf_value=step.leaf_value, lines=render_lines(model, step),
        outside_definition=step.outside_definition,
    )


def dialogue_path(
    model: QafModel,
    strengths: StrengthAssignment,
    x_raw: Optional[dict] = None,
    attacker_ranking: str = "influence",
) -> list[ExplanationStep]:
    """The dominated reasoning path: descend primary citations from the
    root until a feature answers with its raw value."""
    steps: list[ExplanationStep] = []
    subject = model.root
    seen: set[str] = set()
    while subject not in seen:
        seen.add(subject)
        step = explain(model, strengths, subject, x_raw, attacker_ranking)
        steps.append(step)
        if step.empty or step.leaf_value is not None:
            break
        subject = step.cited[0].node
    return steps
