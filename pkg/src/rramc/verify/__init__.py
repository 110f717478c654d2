"""Design-rule checking, connectivity extraction and LVS."""

from ..errors import DisconnectedPort
from ..layout.db import LayoutDb
from ..layout.template import CellTemplate
from ..netlist import Netlist
from .drc import RuleDeck, Violation, drc, violations_csv, violations_text
from .extract import ConnectivityGraph, extract_connectivity
from .faults import Fault, delete_row_sel, inject_fault, with_variants
from .lvs import MatchReport, compare_circuits, lvs


def check_layout(db: LayoutDb, template: CellTemplate, reference: Netlist) -> MatchReport:
    """Extract then compare; an unbound cell port is reported as a mismatch."""
    try:
        graph = extract_connectivity(db, template)
    except DisconnectedPort as exc:
        return MatchReport(False, f"extraction failed: {exc}")
    return lvs(graph, reference)


__all__ = [
    "ConnectivityGraph", "Fault", "MatchReport", "RuleDeck", "Violation", "check_layout",
    "compare_circuits", "delete_row_sel", "drc", "extract_connectivity", "inject_fault", "lvs",
    "violations_csv", "violations_text", "with_variants",
]
