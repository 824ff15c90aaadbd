"""Safety-constraint set algebra.

Entailment is deliberately plain subset containment over atoms: a required
set either is covered by the available facts or the check fails with the
exact missing atoms. No implication between atoms is modeled, which keeps
every discharge decision auditable at a glance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .model import CrateModel, FunctionDecl

# Provenance tags, in priority order: when an atom is contributed by several
# sources the highest-priority tag wins.
TAG_OWN_SC = "own_sc"
TAG_ESTABLISHES = "establishes"
TAG_CONSTRUCTOR_SC = "constructor_sc"
TAG_CONSTRUCTOR_ESTABLISHES = "constructor_establishes"
TAG_METHOD_ESTABLISHES = "method_establishes"
TAG_AUDITOR = "auditor"


@dataclass(frozen=True)
class AvailableFacts:
    """Atoms known to hold in some discharge context, with provenance.

    `provenance` maps exactly the atoms in `atoms` to their source tag.
    `removed` records atoms that a broken-invariant subtraction dropped,
    kept for reporting only.
    """

    atoms: frozenset[str]
    provenance: tuple[tuple[str, str], ...]
    removed: frozenset[str] = frozenset()

    def tag_of(self, atom: str) -> str | None:
        for a, tag in self.provenance:
            if a == atom:
                return tag
        return None

    def with_auditor_atoms(self, atoms: frozenset[str]) -> AvailableFacts:
        """Add auditor-asserted atoms; existing provenance is preserved."""
        new = atoms - self.atoms
        if not new:
            return self
        prov = dict(self.provenance)
        for a in new:
            prov[a] = TAG_AUDITOR
        return AvailableFacts(
            atoms=self.atoms | new,
            provenance=tuple(sorted(prov.items())),
            removed=self.removed,
        )


def _tagged(*layers: tuple[frozenset[str], str]) -> AvailableFacts:
    """Union layers of (atoms, tag); earlier layers take tag priority."""
    prov: dict[str, str] = {}
    atoms: set[str] = set()
    for layer_atoms, tag in layers:
        for a in layer_atoms:
            prov.setdefault(a, tag)
        atoms |= layer_atoms
    return AvailableFacts(atoms=frozenset(atoms), provenance=tuple(sorted(prov.items())))


class EntailResult(NamedTuple):
    holds: bool
    missing: frozenset[str]


def entails(available: AvailableFacts, required: frozenset[str]) -> EntailResult:
    missing = frozenset(required - available.atoms)
    return EntailResult(not missing, missing)


def bs_of_method(m: FunctionDecl) -> frozenset[str]:
    """Effective broken-invariant set of a dynamic method or destructor.

    Atoms the body invalidates, minus the method's own safety constraints:
    a caller honoring those constraints keeps the constrained atoms valid,
    so they do not count as disruption.
    """
    return m.breaks - m.sc


def bs_of_struct(group, model: CrateModel) -> frozenset[str]:
    """Union of the broken sets of a struct group's disruptive methods."""
    out: frozenset[str] = frozenset()
    for path in group.disruptive:
        out |= bs_of_method(model.function(path))
    return out


def facts_for_function(f: FunctionDecl) -> AvailableFacts:
    """Facts available inside a function body: its own constraints (assumed
    satisfied by the caller) plus whatever the body itself establishes."""
    return _tagged((f.sc, TAG_OWN_SC), (f.establishes, TAG_ESTABLISHES))


def facts_for_pair(
    c: FunctionDecl, m: FunctionDecl, group, model: CrateModel
) -> AvailableFacts:
    """Facts available to a dynamic method `m` on an instance built by `c`.

    Both functions contribute their constraints and established atoms; the
    union is then stripped of every invariant some disruptive method of the
    struct may have broken in between. Stripped atoms are recorded in
    `removed` for reporting.
    """
    base = _tagged(
        (m.sc, TAG_OWN_SC),
        (m.establishes, TAG_METHOD_ESTABLISHES),
        (c.sc, TAG_CONSTRUCTOR_SC),
        (c.establishes, TAG_CONSTRUCTOR_ESTABLISHES),
    )
    broken = bs_of_struct(group, model)
    removed = base.atoms & broken
    if not removed:
        return base
    kept = base.atoms - broken
    prov = tuple((a, t) for a, t in base.provenance if a in kept)
    return AvailableFacts(atoms=kept, provenance=prov, removed=frozenset(removed))
