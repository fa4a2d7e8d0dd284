"""Curriculum traversal driven by training loss.

A plan pairs each syllabus with a patience budget. After every training
step the scheduler compares the new loss against the previous one from
the same syllabus: a step whose loss exceeds ``min_decrease`` times the
previous loss is a violation. Once violations exhaust the patience of
the current syllabus, the scheduler advances to the next one; running
past the last syllabus finishes the plan. Validation data never enters
this logic.

Two counting modes exist because the two natural readings of the rule
differ: ``consecutive`` (default) resets the violation counter whenever
a step achieves the required decrease, ``cumulative`` never resets
within a syllabus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .catalog import Catalog, SyllabusSpec

MODES = ("consecutive", "cumulative")


class SchedulerFinishedError(RuntimeError):
    """The plan is exhausted; no further losses can be recorded."""


def _violates(loss: float, prev: float, min_decrease: float) -> bool:
    """Whether a step failed the required decrease.

    The general rule is loss > min_decrease * prev. At min_decrease == 0
    that would flag every positive loss, so zero is read as "any strict
    decrease is enough": only a non-decreasing step violates.
    """
    if min_decrease == 0.0:
        return loss >= prev
    return loss > min_decrease * prev


@dataclass(frozen=True)
class CurriculumPlan:
    syllabuses: tuple[SyllabusSpec, ...]
    patience: tuple[int, ...]
    min_decrease: float
    mode: str = "consecutive"
    advance_on_epoch_end: bool = False

    def __post_init__(self):
        object.__setattr__(self, "syllabuses", tuple(self.syllabuses))
        object.__setattr__(self, "patience", tuple(int(p) for p in self.patience))
        if not self.syllabuses:
            raise ValueError("plan must contain at least one syllabus")
        if len(self.patience) != len(self.syllabuses):
            raise ValueError(
                f"patience list length {len(self.patience)} != syllabus count {len(self.syllabuses)}"
            )
        if any(p < 1 for p in self.patience):
            raise ValueError("every patience value must be >= 1")
        if not 0.0 <= self.min_decrease <= 1.0:
            raise ValueError(f"min_decrease must be in [0, 1], got {self.min_decrease}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def __len__(self) -> int:
        return len(self.syllabuses)


def plan_from_catalog(
    catalog: Catalog,
    selection,
    patience,
    min_decrease: float,
    mode: str = "consecutive",
    advance_on_epoch_end: bool = False,
) -> CurriculumPlan:
    """Build a plan from a catalog and a curriculum selection.

    ``patience`` may be a scalar (applied uniformly) or one value per
    selected syllabus.
    """
    from .catalog import select_curriculum

    syllabuses = select_curriculum(catalog, selection)
    if not hasattr(patience, "__len__"):
        patience = [int(patience)] * len(syllabuses)
    return CurriculumPlan(tuple(syllabuses), tuple(patience), min_decrease, mode, advance_on_epoch_end)


class CurriculumScheduler:
    """Single-writer state machine walking a plan.

    One owner calls ``record_loss`` / ``epoch_boundary``; snapshots from
    ``state_dict`` may be shared read-only.
    """

    def __init__(self, plan: CurriculumPlan):
        self.plan = plan
        self.syllabus_index = 0
        self.patience_counter = 0
        self.train_history: list[float] = []
        self.finished = False
        self._last_loss_in_syllabus: float | None = None
        self._advanced_in_pass = False

    def current_syllabus(self) -> SyllabusSpec:
        if self.finished:
            raise SchedulerFinishedError("plan is finished; no current syllabus")
        return self.plan.syllabuses[self.syllabus_index]

    def record_loss(self, loss: float) -> bool:
        """Append a training loss and apply the advancement rule.

        Returns True when this step advanced the syllabus (or finished
        the plan). The first loss after an advance starts a fresh
        comparison window: targets change scale at the boundary, so it
        is never a violation.
        """
        if self.finished:
            raise SchedulerFinishedError("cannot record a loss after the plan finished")
        loss = float(loss)
        if math.isnan(loss) or math.isinf(loss):
            raise ValueError(f"loss must be finite, got {loss}")
        if loss < 0:
            raise ValueError(f"loss must be non-negative, got {loss}")
        self.train_history.append(loss)
        advanced = False
        if self._last_loss_in_syllabus is not None:
            if _violates(loss, self._last_loss_in_syllabus, self.plan.min_decrease):
                self.patience_counter += 1
                if self.patience_counter >= self.plan.patience[self.syllabus_index]:
                    self._advance()
                    advanced = True
            elif self.plan.mode == "consecutive":
                self.patience_counter = 0
        if not advanced:
            self._last_loss_in_syllabus = loss
        return advanced

    def epoch_boundary(self) -> bool:
        """Mark the end of one full data pass.

        Under ``advance_on_epoch_end`` the syllabus advances unless
        patience already advanced it during this pass; otherwise the
        data simply repeats under the current syllabus.
        """
        advanced = False
        if self.plan.advance_on_epoch_end and not self.finished and not self._advanced_in_pass:
            self._advance()
            advanced = True
        self._advanced_in_pass = False
        return advanced

    def _advance(self) -> None:
        self.patience_counter = 0
        self._last_loss_in_syllabus = None
        self._advanced_in_pass = True
        if self.syllabus_index + 1 < len(self.plan.syllabuses):
            self.syllabus_index += 1
        else:
            self.finished = True

    def state_dict(self) -> dict:
        return {
            "syllabus_index": self.syllabus_index,
            "patience_counter": self.patience_counter,
            "train_history": list(self.train_history),
            "finished": self.finished,
            "last_loss_in_syllabus": self._last_loss_in_syllabus,
            "advanced_in_pass": self._advanced_in_pass,
        }

    def load_state_dict(self, state: dict) -> None:
        self.syllabus_index = int(state["syllabus_index"])
        self.patience_counter = int(state["patience_counter"])
        self.train_history = [float(x) for x in state["train_history"]]
        self.finished = bool(state["finished"])
        last = state["last_loss_in_syllabus"]
        self._last_loss_in_syllabus = None if last is None else float(last)
        self._advanced_in_pass = bool(state.get("advanced_in_pass", False))


def plan_to_json(plan: CurriculumPlan, catalog: Catalog) -> str:
    """Serialize a plan by catalog indices (requires every syllabus to be
    a catalog entry)."""
    indices = []
    for s in plan.syllabuses:
        try:
            indices.append(catalog.entries.index(s))
        except ValueError:
            raise ValueError(f"syllabus {s.label} is not part of the given catalog")
    payload = {
        "lambda": plan.min_decrease,
        "mode": plan.mode,
        "syllabuses": indices,
        "patience": list(plan.patience),
        "advance_on_epoch_end": plan.advance_on_epoch_end,
    }
    return json.dumps(payload, indent=2)


def plan_from_json(text: str, catalog: Catalog) -> CurriculumPlan:
    payload = json.loads(text)
    syllabuses = tuple(catalog.entries[int(i)] for i in payload["syllabuses"])
    return CurriculumPlan(
        syllabuses,
        tuple(int(p) for p in payload["patience"]),
        float(payload["lambda"]),
        payload.get("mode", "consecutive"),
        bool(payload.get("advance_on_epoch_end", False)),
    )
